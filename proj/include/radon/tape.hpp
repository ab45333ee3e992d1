#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "radon/params.hpp"
#include "radon/tensor.hpp"

namespace radon::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Value {
  Tape* tape = nullptr;
  int32_t idx = -1;

  bool ok() const { return tape != nullptr && idx >= 0; }
  const Tensor& val() const;
  const Tensor& grad() const;
  int rank() const { return val().rank(); }
  int64_t dim(int i) const { return val().dim(i); }
  int64_t size() const { return val().size(); }
};

enum class ScanForm { kKernel, kRecursive };

enum class OpKind : uint8_t {
  kLeaf, kParam,
  kAdd, kSub, kMul, kScale, kAddConst,
  kMatMul, kReshape, kConcat, kSlice, kGatherRows,
  kRelu, kSigmoid, kExp, kSqrt, kReciprocal, kClampMin,
  kSoftmax, kLayerNorm, kRowNorm,
  kReduceMax, kReduceSum, kReduceMean, kSumAll, kMeanAll, kL2Norm,
  kSsmScan,
};

/// Reverse-mode tape over dense float64 tensors. Nodes are appended in
/// forward order, which doubles as the topological order for the backward
/// sweep. backward() zeroes every gradient on entry, so a repeated call
/// recomputes rather than accumulates.
class Tape {
 public:
  Value constant(Tensor t);
  /// Binds a parameter slot (value copied; one node per slot per tape).
  /// After backward(), the node gradient is flushed into slot.grad.
  Value param(ParamSlot& slot);

  // b may broadcast against a: same shape, scalar, rank-1 over the last
  // dimension, or (N,1) against (N,C).
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  Value scale(Value a, double k);
  Value add_const(Value a, double k);
  Value neg(Value a) { return scale(a, -1.0); }

  Value matmul(Value a, Value b);

  Value reshape(Value a, std::vector<int64_t> dims);
  Value concat(const std::vector<Value>& xs, int axis);
  Value slice(Value a, int axis, int64_t begin, int64_t end);
  Value gather_rows(Value a, std::vector<int64_t> idx);

  Value relu(Value a);
  Value sigmoid(Value a);
  Value exp(Value a);
  Value sqrt(Value a);
  Value reciprocal(Value a);
  Value clamp_min(Value a, double floor);

  Value softmax(Value a);                        // over the last dimension
  Value layer_norm(Value a, double eps = 1e-5);  // over the last dimension, pre-affine
  Value rownorm(Value a);                        // (N,C) -> (N,1) L2 per row

  // Reductions. Rank-2 inputs keep the reduced axis as size 1; rank-3
  // inputs reduce axis 1 and drop it: (B,K,C) -> (B,C).
  Value reduce_max(Value a, int axis);
  Value reduce_sum(Value a, int axis);
  Value reduce_mean(Value a, int axis);
  Value sum_all(Value a);
  Value mean_all(Value a);
  Value l2norm(Value a);

  /// Diagonal (a rank-1) or dense (a rank-2) state-space scan along the
  /// time axis. x is (T,C) or (B,T,C); output has the shape of x.
  Value ssm_scan(Value x, Value a, Value b, Value c, ScanForm form = ScanForm::kKernel);

  /// Reverse sweep from a scalar root. Zeroes all gradients first, then
  /// accumulates; bound parameter slots receive their gradients at the end.
  void backward(Value root);

  size_t node_count() const { return nodes_.size(); }
  const Tensor& value_of(int32_t i) const { return nodes_[static_cast<size_t>(i)].value; }
  const Tensor& grad_of(int32_t i) const;

 private:
  friend struct Value;

  struct Node {
    Tensor value;
    Tensor grad;  // allocated on demand during backward
    OpKind op = OpKind::kLeaf;
    std::array<int32_t, 4> parent{-1, -1, -1, -1};
    int n_parents = 0;
    double k = 0.0;             // scale factor / added constant / clamp floor / eps
    int axis = -1;              // reduction or concat axis; broadcast kind for arithmetic
    std::vector<int64_t> aux_i; // gather indices, argmax positions, concat offsets
    std::vector<double> aux_f;  // layer_norm inv-std, etc.
    ScanForm form = ScanForm::kKernel;
    ParamSlot* slot = nullptr;
  };

  Value push(Node n);
  Node& node(Value v) { return nodes_[static_cast<size_t>(v.idx)]; }
  const Node& node(Value v) const { return nodes_[static_cast<size_t>(v.idx)]; }
  Tensor& ensure_grad(int32_t i);
  void check_same_tape(Value a, Value b, const char* op) const;

  Value arith(Value a, Value b, OpKind op);
  Value unary(Value a, OpKind op, double k = 0.0);
  Value reduce(Value a, int axis, OpKind op);

  std::vector<Node> nodes_;
  std::vector<std::pair<ParamSlot*, int32_t>> bound_;
};

}  // namespace radon::ad
