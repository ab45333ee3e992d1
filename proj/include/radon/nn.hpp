#pragma once

#include <string>

#include "radon/params.hpp"
#include "radon/rng.hpp"
#include "radon/tape.hpp"

namespace radon::nn {

ad::Tensor xavier(std::vector<int64_t> dims, Rng& rng, double gain = 1.0);

void register_linear(ad::ParamStore& store, const std::string& prefix, int64_t in, int64_t out,
                     Rng& rng, double gain = 1.0);
ad::Value linear(ad::Tape& tape, ad::ParamStore& store, const std::string& prefix, ad::Value x);

/// Two-layer perceptron (Linear -> ReLU -> Linear), optional output ReLU.
void register_mlp(ad::ParamStore& store, const std::string& prefix, int64_t in, int64_t hidden,
                  int64_t out, Rng& rng);
ad::Value mlp(ad::Tape& tape, ad::ParamStore& store, const std::string& prefix, ad::Value x,
              bool relu_out = false);

/// Layer norm with learnable per-channel scale/shift.
void register_ln(ad::ParamStore& store, const std::string& prefix, int64_t dim);
ad::Value ln(ad::Tape& tape, ad::ParamStore& store, const std::string& prefix, ad::Value x);

}  // namespace radon::nn
