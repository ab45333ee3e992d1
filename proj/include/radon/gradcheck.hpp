#pragma once

#include <functional>

#include "radon/params.hpp"
#include "radon/rng.hpp"

namespace radon::ad {

/// Central-difference gradient check against the analytic gradients.
///
/// `f(with_grad)` must rebuild its computation from the store's current
/// parameter values and return the scalar objective; when `with_grad` is
/// true it must also populate the store gradients (one backward pass).
/// Samples up to `total_samples` coordinates across all trainable
/// parameters and returns the max of
///   |analytic - numeric| / max(1e-8, |numeric|).
double finite_diff_check(const std::function<double(bool with_grad)>& f, ParamStore& store,
                         double h, int total_samples, Rng& rng);

}  // namespace radon::ad
