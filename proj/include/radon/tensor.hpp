#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace radon::ad {

/// Dense row-major float64 array of rank 0..3. Rank 0 is a scalar.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> dims);

  static Tensor zeros(std::vector<int64_t> dims) { return Tensor(std::move(dims)); }
  static Tensor scalar(double v);
  static Tensor full(std::vector<int64_t> dims, double v);

  int rank() const { return static_cast<int>(dims_.size()); }
  int64_t dim(int i) const { return dims_[static_cast<size_t>(i)]; }
  const std::vector<int64_t>& dims() const { return dims_; }
  int64_t size() const { return static_cast<int64_t>(v_.size()); }
  bool empty() const { return v_.empty(); }

  // Rank-2 conveniences.
  int64_t rows() const { return dims_[0]; }
  int64_t cols() const { return dims_[1]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  double& operator[](int64_t i) { return v_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return v_[static_cast<size_t>(i)]; }

  double& at(int64_t i, int64_t j) { return v_[static_cast<size_t>(i * dims_[1] + j)]; }
  double at(int64_t i, int64_t j) const { return v_[static_cast<size_t>(i * dims_[1] + j)]; }
  double& at(int64_t i, int64_t j, int64_t k) {
    return v_[static_cast<size_t>((i * dims_[1] + j) * dims_[2] + k)];
  }
  double at(int64_t i, int64_t j, int64_t k) const {
    return v_[static_cast<size_t>((i * dims_[1] + j) * dims_[2] + k)];
  }

  void fill(double v) { v_.assign(v_.size(), v); }
  bool same_shape(const Tensor& o) const { return dims_ == o.dims_; }
  bool all_finite() const;

  /// "3x4", "scalar" for rank 0.
  std::string shape_str() const;

 private:
  std::vector<int64_t> dims_;
  std::vector<double> v_;
};

std::string shape_str(const std::vector<int64_t>& dims);

}  // namespace radon::ad
