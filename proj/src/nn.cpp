#include "radon/nn.hpp"

#include <cmath>

namespace radon::nn {

ad::Tensor xavier(std::vector<int64_t> dims, Rng& rng, double gain) {
  ad::Tensor t(dims);
  const double fan_in = static_cast<double>(t.dim(0));
  const double fan_out = static_cast<double>(t.rank() > 1 ? t.dim(1) : 1);
  const double s = gain * std::sqrt(6.0 / (fan_in + fan_out));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-s, s);
  return t;
}

void register_linear(ad::ParamStore& store, const std::string& prefix, int64_t in, int64_t out,
                     Rng& rng, double gain) {
  store.create(prefix + "/w", xavier({in, out}, rng, gain));
  // small positive bias keeps relu units off their kink for degenerate
  // (all-zero) inputs, e.g. isolated anchors whose region is just themselves
  store.create(prefix + "/b", ad::Tensor::full({out}, 0.01));
}

ad::Value linear(ad::Tape& tape, ad::ParamStore& store, const std::string& prefix, ad::Value x) {
  return tape.add(tape.matmul(x, tape.param(store.at(prefix + "/w"))),
                  tape.param(store.at(prefix + "/b")));
}

void register_mlp(ad::ParamStore& store, const std::string& prefix, int64_t in, int64_t hidden,
                  int64_t out, Rng& rng) {
  register_linear(store, prefix + "/l1", in, hidden, rng);
  register_linear(store, prefix + "/l2", hidden, out, rng);
}

ad::Value mlp(ad::Tape& tape, ad::ParamStore& store, const std::string& prefix, ad::Value x,
              bool relu_out) {
  ad::Value h = tape.relu(linear(tape, store, prefix + "/l1", x));
  ad::Value y = linear(tape, store, prefix + "/l2", h);
  return relu_out ? tape.relu(y) : y;
}

void register_ln(ad::ParamStore& store, const std::string& prefix, int64_t dim) {
  store.create(prefix + "/gamma", ad::Tensor::full({dim}, 1.0));
  store.create(prefix + "/beta", ad::Tensor::zeros({dim}));
}

ad::Value ln(ad::Tape& tape, ad::ParamStore& store, const std::string& prefix, ad::Value x) {
  ad::Value y = tape.layer_norm(x);
  return tape.add(tape.mul(y, tape.param(store.at(prefix + "/gamma"))),
                  tape.param(store.at(prefix + "/beta")));
}

}  // namespace radon::nn
