#include "radon/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace radon::ad {

Tensor::Tensor(std::vector<int64_t> dims) : dims_(std::move(dims)) {
  if (dims_.size() > 3) throw std::invalid_argument("Tensor: rank > 3 not supported");
  int64_t n = 1;
  for (int64_t d : dims_) {
    if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
    n *= d;
  }
  v_.assign(static_cast<size_t>(n), 0.0);
}

Tensor Tensor::scalar(double v) {
  Tensor t{std::vector<int64_t>{}};
  t.v_[0] = v;
  return t;
}

Tensor Tensor::full(std::vector<int64_t> dims, double v) {
  Tensor t(std::move(dims));
  t.fill(v);
  return t;
}

bool Tensor::all_finite() const {
  for (double x : v_)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string Tensor::shape_str() const { return ad::shape_str(dims_); }

std::string shape_str(const std::vector<int64_t>& dims) {
  if (dims.empty()) return "scalar";
  std::ostringstream os;
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) os << 'x';
    os << dims[i];
  }
  return os.str();
}

}  // namespace radon::ad
