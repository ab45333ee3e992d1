#include "radon/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "radon/errors.hpp"

namespace radon::ad {

double finite_diff_check(const std::function<double(bool with_grad)>& f, ParamStore& store,
                         double h, int total_samples, Rng& rng) {
  if (h <= 0.0) throw NumericError("finite_diff_check: h must be positive");

  const double base = f(true);
  if (!std::isfinite(base)) throw NumericError("finite_diff_check: non-finite objective");

  struct Coord {
    ParamSlot* slot;
    int64_t i;
    double analytic;
  };
  std::vector<Coord> coords;
  for (ParamSlot* s : store.slots()) {
    if (!s->trainable) continue;
    for (int64_t i = 0; i < s->value.size(); ++i) coords.push_back({s, i, s->grad[i]});
  }
  if (coords.empty()) throw NumericError("finite_diff_check: no trainable coordinates");

  // Sample without replacement, keeping at most total_samples coordinates.
  if (static_cast<int>(coords.size()) > total_samples) {
    for (int i = 0; i < total_samples; ++i) {
      const int64_t j = rng.uniform_int(i, static_cast<int64_t>(coords.size()) - 1);
      std::swap(coords[static_cast<size_t>(i)], coords[static_cast<size_t>(j)]);
    }
    coords.resize(static_cast<size_t>(total_samples));
  }

  double worst = 0.0;
  for (const Coord& c : coords) {
    const double saved = c.slot->value[c.i];
    c.slot->value[c.i] = saved + h;
    const double fp = f(false);
    c.slot->value[c.i] = saved - h;
    const double fm = f(false);
    c.slot->value[c.i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_diff_check: non-finite objective under perturbation");
    const double numeric = (fp - fm) / (2.0 * h);
    const double rel = std::abs(c.analytic - numeric) / std::max(1e-8, std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace radon::ad
