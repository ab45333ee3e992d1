#include "radon/tape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "radon/errors.hpp"
#include "radon/kernels.hpp"

namespace radon::ad {

namespace {

// Broadcast kinds for arithmetic ops, stored in Node::axis.
enum BKind : int { kSame = 0, kScalarB = 1, kLastDim = 2, kCol = 3 };

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  std::ostringstream os;
  os << op << ": shape mismatch lhs=" << a.shape_str() << " rhs=" << b.shape_str();
  throw ShapeError(os.str());
}

[[noreturn]] void shape_fail1(const char* op, const Tensor& a, const char* what) {
  std::ostringstream os;
  os << op << ": " << what << " (got " << a.shape_str() << ")";
  throw ShapeError(os.str());
}

int broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) return kSame;
  if (b.rank() == 0) return kScalarB;
  if (b.rank() == 1 && a.rank() >= 1 && a.dim(a.rank() - 1) == b.dim(0)) return kLastDim;
  if (a.rank() == 2 && b.rank() == 2 && b.dim(0) == a.dim(0) && b.dim(1) == 1) return kCol;
  shape_fail(op, a, b);
}

}  // namespace

const Tensor& Value::val() const { return tape->value_of(idx); }
const Tensor& Value::grad() const { return tape->grad_of(idx); }

const Tensor& Tape::grad_of(int32_t i) const { return nodes_[static_cast<size_t>(i)].grad; }

Value Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Value{this, static_cast<int32_t>(nodes_.size() - 1)};
}

Tensor& Tape::ensure_grad(int32_t i) {
  Node& n = nodes_[static_cast<size_t>(i)];
  if (n.grad.size() != n.value.size() || n.grad.rank() != n.value.rank())
    n.grad = Tensor::zeros(n.value.dims());
  return n.grad;
}

void Tape::check_same_tape(Value a, Value b, const char* op) const {
  if (a.tape != this || b.tape != this)
    throw ShapeError(std::string(op) + ": operands from different tapes");
}

Value Tape::constant(Tensor t) {
  Node n;
  n.value = std::move(t);
  n.op = OpKind::kLeaf;
  return push(std::move(n));
}

Value Tape::param(ParamSlot& slot) {
  for (auto& [s, idx] : bound_)
    if (s == &slot) return Value{this, idx};
  Node n;
  n.value = slot.value;
  n.op = OpKind::kParam;
  n.slot = &slot;
  Value v = push(std::move(n));
  bound_.emplace_back(&slot, v.idx);
  return v;
}

Value Tape::arith(Value a, Value b, OpKind op) {
  const char* name = op == OpKind::kAdd ? "add" : op == OpKind::kSub ? "sub" : "mul";
  check_same_tape(a, b, name);
  const Tensor& ta = a.val();
  const Tensor& tb = b.val();
  const int bk = broadcast_kind(name, ta, tb);

  Node n;
  n.value = Tensor::zeros(ta.dims());
  n.op = op;
  n.parent = {a.idx, b.idx, -1, -1};
  n.n_parents = 2;
  n.axis = bk;

  const int64_t sz = ta.size();
  const double* pa = ta.data();
  const double* pb = tb.data();
  double* out = n.value.data();
  const int64_t last = ta.rank() ? ta.dim(ta.rank() - 1) : 1;

  auto combine = [&](double x, double y) {
    switch (op) {
      case OpKind::kAdd: return x + y;
      case OpKind::kSub: return x - y;
      default: return x * y;
    }
  };

  switch (bk) {
    case kSame:
      for (int64_t i = 0; i < sz; ++i) out[i] = combine(pa[i], pb[i]);
      break;
    case kScalarB: {
      const double y = pb[0];
      for (int64_t i = 0; i < sz; ++i) out[i] = combine(pa[i], y);
      break;
    }
    case kLastDim:
      for (int64_t i = 0; i < sz; ++i) out[i] = combine(pa[i], pb[i % last]);
      break;
    case kCol: {
      const int64_t c = ta.dim(1);
      for (int64_t i = 0; i < sz; ++i) out[i] = combine(pa[i], pb[i / c]);
      break;
    }
  }
  return push(std::move(n));
}

Value Tape::add(Value a, Value b) { return arith(a, b, OpKind::kAdd); }
Value Tape::sub(Value a, Value b) { return arith(a, b, OpKind::kSub); }
Value Tape::mul(Value a, Value b) { return arith(a, b, OpKind::kMul); }

Value Tape::scale(Value a, double k) {
  Node n;
  n.value = a.val();
  n.op = OpKind::kScale;
  n.parent[0] = a.idx;
  n.n_parents = 1;
  n.k = k;
  double* p = n.value.data();
  for (int64_t i = 0; i < n.value.size(); ++i) p[i] *= k;
  return push(std::move(n));
}

Value Tape::add_const(Value a, double k) {
  Node n;
  n.value = a.val();
  n.op = OpKind::kAddConst;
  n.parent[0] = a.idx;
  n.n_parents = 1;
  n.k = k;
  double* p = n.value.data();
  for (int64_t i = 0; i < n.value.size(); ++i) p[i] += k;
  return push(std::move(n));
}

Value Tape::matmul(Value a, Value b) {
  check_same_tape(a, b, "matmul");
  const Tensor& ta = a.val();
  const Tensor& tb = b.val();
  if (ta.rank() != 2 || tb.rank() != 2 || ta.dim(1) != tb.dim(0)) shape_fail("matmul", ta, tb);

  Node n;
  n.value = Tensor::zeros({ta.dim(0), tb.dim(1)});
  n.op = OpKind::kMatMul;
  n.parent = {a.idx, b.idx, -1, -1};
  n.n_parents = 2;
  kern::matmul(ta.data(), tb.data(), n.value.data(), ta.dim(0), ta.dim(1), tb.dim(1));
  return push(std::move(n));
}

Value Tape::reshape(Value a, std::vector<int64_t> dims) {
  Tensor t(dims);
  if (t.size() != a.size()) shape_fail1("reshape", a.val(), "element count mismatch");
  std::copy(a.val().data(), a.val().data() + a.size(), t.data());
  Node n;
  n.value = std::move(t);
  n.op = OpKind::kReshape;
  n.parent[0] = a.idx;
  n.n_parents = 1;
  return push(std::move(n));
}

Value Tape::concat(const std::vector<Value>& xs, int axis) {
  if (xs.empty()) throw ShapeError("concat: no inputs");
  if (xs.size() > 4) {
    // fold: keeps node parent slots fixed-size
    Value acc = concat({xs[0], xs[1], xs[2], xs[3]}, axis);
    std::vector<Value> rest{acc};
    rest.insert(rest.end(), xs.begin() + 4, xs.end());
    return concat(rest, axis);
  }
  const Tensor& t0 = xs[0].val();
  const int rank = t0.rank();
  if (rank < 1 || rank > 2) shape_fail1("concat", t0, "rank 1 or 2 required");
  if (axis < 0 || axis >= rank) shape_fail1("concat", t0, "bad axis");

  int64_t cat = 0;
  for (const Value& v : xs) {
    check_same_tape(xs[0], v, "concat");
    const Tensor& t = v.val();
    if (t.rank() != rank) shape_fail("concat", t0, t);
    for (int d = 0; d < rank; ++d)
      if (d != axis && t.dim(d) != t0.dim(d)) shape_fail("concat", t0, t);
    cat += t.dim(axis);
  }

  std::vector<int64_t> dims = t0.dims();
  dims[static_cast<size_t>(axis)] = cat;
  Node n;
  n.value = Tensor::zeros(dims);
  n.op = OpKind::kConcat;
  n.n_parents = static_cast<int>(xs.size());
  n.axis = axis;
  for (size_t i = 0; i < xs.size(); ++i) n.parent[i] = xs[i].idx;

  if (rank == 1 || axis == 0) {
    int64_t off = 0;
    n.aux_i.push_back(0);
    for (const Value& v : xs) {
      const Tensor& t = v.val();
      std::copy(t.data(), t.data() + t.size(), n.value.data() + off);
      off += t.size();
      n.aux_i.push_back(off);
    }
  } else {  // rank 2, axis 1
    const int64_t rows = t0.dim(0);
    int64_t col_off = 0;
    n.aux_i.push_back(0);
    for (const Value& v : xs) {
      const Tensor& t = v.val();
      const int64_t c = t.dim(1);
      for (int64_t r = 0; r < rows; ++r)
        std::copy(t.data() + r * c, t.data() + (r + 1) * c, n.value.data() + r * cat + col_off);
      col_off += c;
      n.aux_i.push_back(col_off);
    }
  }
  return push(std::move(n));
}

Value Tape::slice(Value a, int axis, int64_t begin, int64_t end) {
  const Tensor& t = a.val();
  if (t.rank() != 2) shape_fail1("slice", t, "rank 2 required");
  if (axis < 0 || axis > 1 || begin < 0 || end <= begin || end > t.dim(axis))
    shape_fail1("slice", t, "bad range");

  Node n;
  n.op = OpKind::kSlice;
  n.parent[0] = a.idx;
  n.n_parents = 1;
  n.axis = axis;
  n.aux_i = {begin, end};
  if (axis == 0) {
    n.value = Tensor::zeros({end - begin, t.dim(1)});
    std::copy(t.data() + begin * t.dim(1), t.data() + end * t.dim(1), n.value.data());
  } else {
    n.value = Tensor::zeros({t.dim(0), end - begin});
    for (int64_t r = 0; r < t.dim(0); ++r)
      for (int64_t c = begin; c < end; ++c) n.value.at(r, c - begin) = t.at(r, c);
  }
  return push(std::move(n));
}

Value Tape::gather_rows(Value a, std::vector<int64_t> idx) {
  const Tensor& t = a.val();
  if (t.rank() != 2) shape_fail1("gather_rows", t, "rank 2 required");
  for (int64_t i : idx)
    if (i < 0 || i >= t.dim(0)) shape_fail1("gather_rows", t, "index out of range");

  Node n;
  n.value = Tensor::zeros({static_cast<int64_t>(idx.size()), t.dim(1)});
  n.op = OpKind::kGatherRows;
  n.parent[0] = a.idx;
  n.n_parents = 1;
  const int64_t c = t.dim(1);
  for (size_t r = 0; r < idx.size(); ++r)
    std::copy(t.data() + idx[r] * c, t.data() + (idx[r] + 1) * c,
              n.value.data() + static_cast<int64_t>(r) * c);
  n.aux_i = std::move(idx);
  return push(std::move(n));
}

Value Tape::unary(Value a, OpKind op, double k) {
  Node n;
  n.value = a.val();
  n.op = op;
  n.parent[0] = a.idx;
  n.n_parents = 1;
  n.k = k;
  double* p = n.value.data();
  const int64_t sz = n.value.size();
  switch (op) {
    case OpKind::kRelu:
      for (int64_t i = 0; i < sz; ++i) p[i] = p[i] > 0.0 ? p[i] : 0.0;
      break;
    case OpKind::kSigmoid:
      for (int64_t i = 0; i < sz; ++i) p[i] = 1.0 / (1.0 + std::exp(-p[i]));
      break;
    case OpKind::kExp:
      for (int64_t i = 0; i < sz; ++i) p[i] = std::exp(p[i]);
      break;
    case OpKind::kSqrt:
      for (int64_t i = 0; i < sz; ++i) p[i] = std::sqrt(p[i]);
      break;
    case OpKind::kReciprocal:
      for (int64_t i = 0; i < sz; ++i) p[i] = 1.0 / p[i];
      break;
    case OpKind::kClampMin:
      for (int64_t i = 0; i < sz; ++i) p[i] = p[i] < k ? k : p[i];
      break;
    default:
      throw ShapeError("unary: bad op");
  }
  return push(std::move(n));
}

Value Tape::relu(Value a) { return unary(a, OpKind::kRelu); }
Value Tape::sigmoid(Value a) { return unary(a, OpKind::kSigmoid); }
Value Tape::exp(Value a) { return unary(a, OpKind::kExp); }
Value Tape::sqrt(Value a) { return unary(a, OpKind::kSqrt); }
Value Tape::reciprocal(Value a) { return unary(a, OpKind::kReciprocal); }
Value Tape::clamp_min(Value a, double floor) { return unary(a, OpKind::kClampMin, floor); }

Value Tape::softmax(Value a) {
  const Tensor& t = a.val();
  if (t.rank() < 1 || t.rank() > 2) shape_fail1("softmax", t, "rank 1 or 2 required");
  const int64_t cols = t.dim(t.rank() - 1);
  const int64_t rows = t.size() / cols;

  Node n;
  n.value = t;
  n.op = OpKind::kSoftmax;
  n.parent[0] = a.idx;
  n.n_parents = 1;
  double* p = n.value.data();
  for (int64_t r = 0; r < rows; ++r) {
    double* row = p + r * cols;
    double mx = row[0];
    for (int64_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      z += row[c];
    }
    for (int64_t c = 0; c < cols; ++c) row[c] /= z;
  }
  return push(std::move(n));
}

Value Tape::layer_norm(Value a, double eps) {
  const Tensor& t = a.val();
  if (t.rank() < 1 || t.rank() > 2) shape_fail1("layer_norm", t, "rank 1 or 2 required");
  const int64_t cols = t.dim(t.rank() - 1);
  const int64_t rows = t.size() / cols;

  Node n;
  n.value = t;
  n.op = OpKind::kLayerNorm;
  n.parent[0] = a.idx;
  n.n_parents = 1;
  n.k = eps;
  n.aux_f.resize(static_cast<size_t>(rows));
  double* p = n.value.data();
  for (int64_t r = 0; r < rows; ++r) {
    double* row = p + r * cols;
    double mu = 0.0;
    for (int64_t c = 0; c < cols; ++c) mu += row[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (int64_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + eps);
    n.aux_f[static_cast<size_t>(r)] = inv;
    for (int64_t c = 0; c < cols; ++c) row[c] = (row[c] - mu) * inv;
  }
  return push(std::move(n));
}

Value Tape::rownorm(Value a) {
  const Tensor& t = a.val();
  if (t.rank() != 2) shape_fail1("rownorm", t, "rank 2 required");
  Node n;
  n.value = Tensor::zeros({t.dim(0), 1});
  n.op = OpKind::kRowNorm;
  n.parent[0] = a.idx;
  n.n_parents = 1;
  for (int64_t r = 0; r < t.dim(0); ++r) {
    double s = 0.0;
    for (int64_t c = 0; c < t.dim(1); ++c) s += t.at(r, c) * t.at(r, c);
    n.value[r] = std::sqrt(s);
  }
  return push(std::move(n));
}

Value Tape::reduce(Value a, int axis, OpKind op) {
  const Tensor& t = a.val();
  Node n;
  n.op = op;
  n.parent[0] = a.idx;
  n.n_parents = 1;
  n.axis = axis;

  if (t.rank() == 2) {
    const int64_t rows = t.dim(0), cols = t.dim(1);
    if (axis == 0) {
      n.value = Tensor::zeros({1, cols});
      if (op == OpKind::kReduceMax) n.aux_i.resize(static_cast<size_t>(cols));
      for (int64_t c = 0; c < cols; ++c) {
        if (op == OpKind::kReduceMax) {
          int64_t am = 0;
          double best = t.at(0, c);
          for (int64_t r = 1; r < rows; ++r)
            if (t.at(r, c) > best) { best = t.at(r, c); am = r; }
          n.value[c] = best;
          n.aux_i[static_cast<size_t>(c)] = am;
        } else {
          double s = 0.0;
          for (int64_t r = 0; r < rows; ++r) s += t.at(r, c);
          n.value[c] = op == OpKind::kReduceMean ? s / static_cast<double>(rows) : s;
        }
      }
    } else if (axis == 1) {
      n.value = Tensor::zeros({rows, 1});
      if (op == OpKind::kReduceMax) n.aux_i.resize(static_cast<size_t>(rows));
      for (int64_t r = 0; r < rows; ++r) {
        if (op == OpKind::kReduceMax) {
          int64_t am = 0;
          double best = t.at(r, 0);
          for (int64_t c = 1; c < cols; ++c)
            if (t.at(r, c) > best) { best = t.at(r, c); am = c; }
          n.value[r] = best;
          n.aux_i[static_cast<size_t>(r)] = am;
        } else {
          double s = 0.0;
          for (int64_t c = 0; c < cols; ++c) s += t.at(r, c);
          n.value[r] = op == OpKind::kReduceMean ? s / static_cast<double>(cols) : s;
        }
      }
    } else {
      shape_fail1("reduce", t, "bad axis");
    }
  } else if (t.rank() == 3 && axis == 1) {
    const int64_t b = t.dim(0), k = t.dim(1), c = t.dim(2);
    n.value = Tensor::zeros({b, c});
    if (op == OpKind::kReduceMax) n.aux_i.resize(static_cast<size_t>(b * c));
    for (int64_t i = 0; i < b; ++i)
      for (int64_t j = 0; j < c; ++j) {
        if (op == OpKind::kReduceMax) {
          int64_t am = 0;
          double best = t.at(i, 0, j);
          for (int64_t q = 1; q < k; ++q)
            if (t.at(i, q, j) > best) { best = t.at(i, q, j); am = q; }
          n.value.at(i, j) = best;
          n.aux_i[static_cast<size_t>(i * c + j)] = am;
        } else {
          double s = 0.0;
          for (int64_t q = 0; q < k; ++q) s += t.at(i, q, j);
          n.value.at(i, j) = op == OpKind::kReduceMean ? s / static_cast<double>(k) : s;
        }
      }
  } else {
    shape_fail1("reduce", t, "rank 2 (axis 0/1) or rank 3 (axis 1) required");
  }
  return push(std::move(n));
}

Value Tape::reduce_max(Value a, int axis) { return reduce(a, axis, OpKind::kReduceMax); }
Value Tape::reduce_sum(Value a, int axis) { return reduce(a, axis, OpKind::kReduceSum); }
Value Tape::reduce_mean(Value a, int axis) { return reduce(a, axis, OpKind::kReduceMean); }

Value Tape::sum_all(Value a) {
  Node n;
  n.value = Tensor::scalar(0.0);
  n.op = OpKind::kSumAll;
  n.parent[0] = a.idx;
  n.n_parents = 1;
  const Tensor& t = a.val();
  double s = 0.0;
  for (int64_t i = 0; i < t.size(); ++i) s += t[i];
  n.value[0] = s;
  return push(std::move(n));
}

Value Tape::mean_all(Value a) {
  Node n;
  n.value = Tensor::scalar(0.0);
  n.op = OpKind::kMeanAll;
  n.parent[0] = a.idx;
  n.n_parents = 1;
  const Tensor& t = a.val();
  double s = 0.0;
  for (int64_t i = 0; i < t.size(); ++i) s += t[i];
  n.value[0] = s / static_cast<double>(t.size());
  return push(std::move(n));
}

Value Tape::l2norm(Value a) {
  Node n;
  n.value = Tensor::scalar(0.0);
  n.op = OpKind::kL2Norm;
  n.parent[0] = a.idx;
  n.n_parents = 1;
  const Tensor& t = a.val();
  double s = 0.0;
  for (int64_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
  n.value[0] = std::sqrt(s);
  return push(std::move(n));
}

Value Tape::ssm_scan(Value x, Value a, Value b, Value c, ScanForm form) {
  check_same_tape(x, a, "ssm_scan");
  check_same_tape(b, c, "ssm_scan");
  const Tensor& tx = x.val();
  const Tensor& ta = a.val();
  const Tensor& tb = b.val();
  const Tensor& tc = c.val();
  if (tx.rank() != 2 && tx.rank() != 3) shape_fail1("ssm_scan", tx, "rank 2 or 3 required");
  const bool dense = ta.rank() == 2;
  const int64_t s_dim = dense ? ta.dim(0) : ta.size();
  if (dense && ta.dim(1) != s_dim) shape_fail1("ssm_scan", ta, "square state matrix required");
  if (tb.rank() != 1 || tb.dim(0) != s_dim) shape_fail("ssm_scan", ta, tb);
  if (tc.rank() != 1 || tc.dim(0) != s_dim) shape_fail("ssm_scan", ta, tc);

  const int64_t batch = tx.rank() == 3 ? tx.dim(0) : 1;
  const int64_t t_len = tx.rank() == 3 ? tx.dim(1) : tx.dim(0);
  const int64_t ch = tx.dim(tx.rank() - 1);

  Node n;
  n.value = Tensor::zeros(tx.dims());
  n.op = OpKind::kSsmScan;
  n.parent = {x.idx, a.idx, b.idx, c.idx};
  n.n_parents = 4;
  n.form = form;
  if (dense) {
    if (form == ScanForm::kRecursive)
      kern::scan_dense_recursive(tx.data(), ta.data(), tb.data(), tc.data(), n.value.data(),
                                 batch, t_len, ch, s_dim);
    else
      kern::scan_dense_kernel(tx.data(), ta.data(), tb.data(), tc.data(), n.value.data(),
                              batch, t_len, ch, s_dim);
  } else {
    if (form == ScanForm::kRecursive)
      kern::scan_recursive_serial(tx.data(), ta.data(), tb.data(), tc.data(), n.value.data(),
                                  batch, t_len, ch, s_dim);
    else
      kern::scan_kernel(tx.data(), ta.data(), tb.data(), tc.data(), n.value.data(),
                        batch, t_len, ch, s_dim);
  }
  return push(std::move(n));
}

void Tape::backward(Value root) {
  if (root.tape != this) throw ShapeError("backward: root from different tape");
  if (root.size() != 1) shape_fail1("backward", root.val(), "scalar root required");

  for (Node& n : nodes_) n.grad = Tensor();
  for (auto& [slot, idx] : bound_) slot->grad.fill(0.0);

  ensure_grad(root.idx).fill(1.0);

  for (int32_t i = root.idx; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.grad.size() != n.value.size()) continue;  // never seeded
    const Tensor& g = n.grad;
    const int64_t sz = n.value.size();

    switch (n.op) {
      case OpKind::kLeaf:
      case OpKind::kParam:
        break;

      case OpKind::kAdd:
      case OpKind::kSub:
      case OpKind::kMul: {
        Node& pa = nodes_[static_cast<size_t>(n.parent[0])];
        Node& pb = nodes_[static_cast<size_t>(n.parent[1])];
        Tensor& da = ensure_grad(n.parent[0]);
        Tensor& db = ensure_grad(n.parent[1]);
        const double* gv = g.data();
        const double* av = pa.value.data();
        const double* bv = pb.value.data();
        const int64_t last = n.value.rank() ? n.value.dim(n.value.rank() - 1) : 1;
        const double sign = n.op == OpKind::kSub ? -1.0 : 1.0;
        const bool is_mul = n.op == OpKind::kMul;
        for (int64_t e = 0; e < sz; ++e) {
          int64_t be;
          switch (n.axis) {
            case kScalarB: be = 0; break;
            case kLastDim: be = e % last; break;
            case kCol: be = e / n.value.dim(1); break;
            default: be = e;
          }
          if (is_mul) {
            da[e] += gv[e] * bv[be];
            db[be] += gv[e] * av[e];
          } else {
            da[e] += gv[e];
            db[be] += sign * gv[e];
          }
        }
        break;
      }

      case OpKind::kScale: {
        Tensor& da = ensure_grad(n.parent[0]);
        for (int64_t e = 0; e < sz; ++e) da[e] += n.k * g[e];
        break;
      }
      case OpKind::kAddConst: {
        Tensor& da = ensure_grad(n.parent[0]);
        for (int64_t e = 0; e < sz; ++e) da[e] += g[e];
        break;
      }

      case OpKind::kMatMul: {
        Node& pa = nodes_[static_cast<size_t>(n.parent[0])];
        Node& pb = nodes_[static_cast<size_t>(n.parent[1])];
        Tensor& da = ensure_grad(n.parent[0]);
        Tensor& db = ensure_grad(n.parent[1]);
        const int64_t m = pa.value.dim(0), k = pa.value.dim(1), nn = pb.value.dim(1);
        kern::matmul_grad_lhs(g.data(), pb.value.data(), da.data(), m, k, nn);
        kern::matmul_grad_rhs(pa.value.data(), g.data(), db.data(), m, k, nn);
        break;
      }

      case OpKind::kReshape: {
        Tensor& da = ensure_grad(n.parent[0]);
        for (int64_t e = 0; e < sz; ++e) da[e] += g[e];
        break;
      }

      case OpKind::kConcat: {
        const int rank = n.value.rank();
        if (rank == 1 || n.axis == 0) {
          for (int p = 0; p < n.n_parents; ++p) {
            Tensor& dp = ensure_grad(n.parent[p]);
            const int64_t b0 = n.aux_i[static_cast<size_t>(p)];
            const int64_t b1 = n.aux_i[static_cast<size_t>(p + 1)];
            for (int64_t e = b0; e < b1; ++e) dp[e - b0] += g[e];
          }
        } else {
          const int64_t rows = n.value.dim(0), cat = n.value.dim(1);
          for (int p = 0; p < n.n_parents; ++p) {
            Tensor& dp = ensure_grad(n.parent[p]);
            const int64_t c0 = n.aux_i[static_cast<size_t>(p)];
            const int64_t c1 = n.aux_i[static_cast<size_t>(p + 1)];
            for (int64_t r = 0; r < rows; ++r)
              for (int64_t c = c0; c < c1; ++c) dp[r * (c1 - c0) + (c - c0)] += g[r * cat + c];
          }
        }
        break;
      }

      case OpKind::kSlice: {
        Node& pa = nodes_[static_cast<size_t>(n.parent[0])];
        Tensor& da = ensure_grad(n.parent[0]);
        const int64_t b0 = n.aux_i[0], b1 = n.aux_i[1];
        if (n.axis == 0) {
          const int64_t c = pa.value.dim(1);
          for (int64_t e = 0; e < sz; ++e) da[b0 * c + e] += g[e];
        } else {
          const int64_t c = pa.value.dim(1);
          const int64_t w = b1 - b0;
          for (int64_t r = 0; r < n.value.dim(0); ++r)
            for (int64_t j = 0; j < w; ++j) da[r * c + b0 + j] += g[r * w + j];
        }
        break;
      }

      case OpKind::kGatherRows: {
        Tensor& da = ensure_grad(n.parent[0]);
        const int64_t c = n.value.dim(1);
        for (size_t r = 0; r < n.aux_i.size(); ++r) {
          const int64_t src = n.aux_i[r];
          const double* gr = g.data() + static_cast<int64_t>(r) * c;
          double* dst = da.data() + src * c;
          for (int64_t j = 0; j < c; ++j) dst[j] += gr[j];
        }
        break;
      }

      case OpKind::kRelu: {
        Node& pa = nodes_[static_cast<size_t>(n.parent[0])];
        Tensor& da = ensure_grad(n.parent[0]);
        for (int64_t e = 0; e < sz; ++e)
          if (pa.value[e] > 0.0) da[e] += g[e];
        break;
      }
      case OpKind::kSigmoid: {
        Tensor& da = ensure_grad(n.parent[0]);
        for (int64_t e = 0; e < sz; ++e) da[e] += g[e] * n.value[e] * (1.0 - n.value[e]);
        break;
      }
      case OpKind::kExp: {
        Tensor& da = ensure_grad(n.parent[0]);
        for (int64_t e = 0; e < sz; ++e) da[e] += g[e] * n.value[e];
        break;
      }
      case OpKind::kSqrt: {
        Tensor& da = ensure_grad(n.parent[0]);
        for (int64_t e = 0; e < sz; ++e)
          if (n.value[e] > 0.0) da[e] += g[e] * 0.5 / n.value[e];
        break;
      }
      case OpKind::kReciprocal: {
        Tensor& da = ensure_grad(n.parent[0]);
        for (int64_t e = 0; e < sz; ++e) da[e] -= g[e] * n.value[e] * n.value[e];
        break;
      }
      case OpKind::kClampMin: {
        Node& pa = nodes_[static_cast<size_t>(n.parent[0])];
        Tensor& da = ensure_grad(n.parent[0]);
        for (int64_t e = 0; e < sz; ++e)
          if (pa.value[e] > n.k) da[e] += g[e];
        break;
      }

      case OpKind::kSoftmax: {
        Tensor& da = ensure_grad(n.parent[0]);
        const int64_t cols = n.value.dim(n.value.rank() - 1);
        const int64_t rows = sz / cols;
        for (int64_t r = 0; r < rows; ++r) {
          const double* y = n.value.data() + r * cols;
          const double* gr = g.data() + r * cols;
          double dot = 0.0;
          for (int64_t c = 0; c < cols; ++c) dot += y[c] * gr[c];
          double* dar = da.data() + r * cols;
          for (int64_t c = 0; c < cols; ++c) dar[c] += y[c] * (gr[c] - dot);
        }
        break;
      }

      case OpKind::kLayerNorm: {
        Tensor& da = ensure_grad(n.parent[0]);
        const int64_t cols = n.value.dim(n.value.rank() - 1);
        const int64_t rows = sz / cols;
        for (int64_t r = 0; r < rows; ++r) {
          const double* y = n.value.data() + r * cols;
          const double* gr = g.data() + r * cols;
          const double inv = n.aux_f[static_cast<size_t>(r)];
          double gmean = 0.0, gymean = 0.0;
          for (int64_t c = 0; c < cols; ++c) {
            gmean += gr[c];
            gymean += gr[c] * y[c];
          }
          gmean /= static_cast<double>(cols);
          gymean /= static_cast<double>(cols);
          double* dar = da.data() + r * cols;
          for (int64_t c = 0; c < cols; ++c) dar[c] += inv * (gr[c] - gmean - y[c] * gymean);
        }
        break;
      }

      case OpKind::kRowNorm: {
        Node& pa = nodes_[static_cast<size_t>(n.parent[0])];
        Tensor& da = ensure_grad(n.parent[0]);
        const int64_t cols = pa.value.dim(1);
        for (int64_t r = 0; r < n.value.dim(0); ++r) {
          const double nv = std::max(n.value[r], 1e-12);
          const double gr = g[r];
          for (int64_t c = 0; c < cols; ++c) da.at(r, c) += gr * pa.value.at(r, c) / nv;
        }
        break;
      }

      case OpKind::kReduceMax: {
        Node& pa = nodes_[static_cast<size_t>(n.parent[0])];
        Tensor& da = ensure_grad(n.parent[0]);
        if (pa.value.rank() == 2) {
          if (n.axis == 0) {
            for (int64_t c = 0; c < n.value.dim(1); ++c)
              da.at(n.aux_i[static_cast<size_t>(c)], c) += g[c];
          } else {
            for (int64_t r = 0; r < n.value.dim(0); ++r)
              da.at(r, n.aux_i[static_cast<size_t>(r)]) += g[r];
          }
        } else {
          const int64_t c = pa.value.dim(2);
          for (int64_t i = 0; i < n.value.dim(0); ++i)
            for (int64_t j = 0; j < c; ++j)
              da.at(i, n.aux_i[static_cast<size_t>(i * c + j)], j) += g.at(i, j);
        }
        break;
      }

      case OpKind::kReduceSum:
      case OpKind::kReduceMean: {
        Node& pa = nodes_[static_cast<size_t>(n.parent[0])];
        Tensor& da = ensure_grad(n.parent[0]);
        if (pa.value.rank() == 2) {
          const int64_t rows = pa.value.dim(0), cols = pa.value.dim(1);
          const double denom =
              n.op == OpKind::kReduceMean ? static_cast<double>(n.axis == 0 ? rows : cols) : 1.0;
          if (n.axis == 0) {
            for (int64_t r = 0; r < rows; ++r)
              for (int64_t c = 0; c < cols; ++c) da.at(r, c) += g[c] / denom;
          } else {
            for (int64_t r = 0; r < rows; ++r)
              for (int64_t c = 0; c < cols; ++c) da.at(r, c) += g[r] / denom;
          }
        } else {
          const int64_t k = pa.value.dim(1);
          const double denom = n.op == OpKind::kReduceMean ? static_cast<double>(k) : 1.0;
          for (int64_t i = 0; i < pa.value.dim(0); ++i)
            for (int64_t q = 0; q < k; ++q)
              for (int64_t c = 0; c < pa.value.dim(2); ++c)
                da.at(i, q, c) += g.at(i, c) / denom;
        }
        break;
      }

      case OpKind::kSumAll: {
        Tensor& da = ensure_grad(n.parent[0]);
        const double gv = g[0];
        for (int64_t e = 0; e < da.size(); ++e) da[e] += gv;
        break;
      }
      case OpKind::kMeanAll: {
        Tensor& da = ensure_grad(n.parent[0]);
        const double gv = g[0] / static_cast<double>(da.size());
        for (int64_t e = 0; e < da.size(); ++e) da[e] += gv;
        break;
      }
      case OpKind::kL2Norm: {
        Node& pa = nodes_[static_cast<size_t>(n.parent[0])];
        Tensor& da = ensure_grad(n.parent[0]);
        const double nv = std::max(n.value[0], 1e-12);
        const double gv = g[0];
        for (int64_t e = 0; e < da.size(); ++e) da[e] += gv * pa.value[e] / nv;
        break;
      }

      case OpKind::kSsmScan: {
        Node& px = nodes_[static_cast<size_t>(n.parent[0])];
        Node& pa = nodes_[static_cast<size_t>(n.parent[1])];
        Node& pb = nodes_[static_cast<size_t>(n.parent[2])];
        Node& pc = nodes_[static_cast<size_t>(n.parent[3])];
        Tensor& dx = ensure_grad(n.parent[0]);
        Tensor& dav = ensure_grad(n.parent[1]);
        Tensor& db = ensure_grad(n.parent[2]);
        Tensor& dc = ensure_grad(n.parent[3]);
        const Tensor& tx = px.value;
        const int64_t batch = tx.rank() == 3 ? tx.dim(0) : 1;
        const int64_t t_len = tx.rank() == 3 ? tx.dim(1) : tx.dim(0);
        const int64_t ch = tx.dim(tx.rank() - 1);
        const bool dense = pa.value.rank() == 2;
        const int64_t s_dim = dense ? pa.value.dim(0) : pa.value.size();
        if (dense)
          kern::scan_dense_grad(tx.data(), pa.value.data(), pb.value.data(), pc.value.data(),
                                g.data(), dx.data(), dav.data(), db.data(), dc.data(),
                                batch, t_len, ch, s_dim);
        else
          kern::scan_grad(tx.data(), pa.value.data(), pb.value.data(), pc.value.data(),
                          g.data(), dx.data(), dav.data(), db.data(), dc.data(),
                          batch, t_len, ch, s_dim);
        break;
      }
    }
  }

  for (auto& [slot, idx] : bound_) {
    const Tensor& g = nodes_[static_cast<size_t>(idx)].grad;
    if (g.size() != slot->grad.size()) continue;  // unreached parameter
    for (int64_t e = 0; e < g.size(); ++e) slot->grad[e] += g[e];
  }
}

}  // namespace radon::ad
