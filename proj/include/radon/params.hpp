#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "radon/tensor.hpp"

namespace radon::ad {

struct ParamSlot {
  std::string path;
  Tensor value;
  Tensor grad;
  Tensor m;  // Adam first moment
  Tensor v;  // Adam second moment
  bool trainable = true;
};

/// Named parameter container with Adam state and binary checkpointing.
/// Paths are unique; iteration follows registration order, which makes
/// optimizer updates and checkpoints deterministic.
class ParamStore {
 public:
  ParamSlot& create(const std::string& path, Tensor init, bool trainable = true);
  ParamSlot* find(const std::string& path);
  const ParamSlot* find(const std::string& path) const;
  ParamSlot& at(const std::string& path);

  std::vector<ParamSlot*> slots();
  std::vector<const ParamSlot*> slots() const;
  size_t count() const { return slots_.size(); }
  int64_t total_elements() const;

  void zero_grads();
  /// Bias-corrected Adam update on every trainable slot.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  int64_t step_count() const { return step_; }

  double grad_norm() const;
  double value_norm() const;

  // Little-endian binary checkpoint:
  //   magic "CAOR", version u32, count u32, then per parameter
  //   {path_len u32, path bytes, rank u32, dims u32[rank], float64 payload}.
  void save(const std::string& file) const;
  /// Loads into matching slots (path + shape checked). On an empty store,
  /// slots are created from the file.
  void load(const std::string& file);

 private:
  std::vector<std::unique_ptr<ParamSlot>> slots_;
  std::unordered_map<std::string, ParamSlot*> index_;
  int64_t step_ = 0;
};

}  // namespace radon::ad
