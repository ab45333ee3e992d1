#include "radon/cam.hpp"

#include <algorithm>
#include <cmath>

#include "radon/errors.hpp"
#include "radon/nn.hpp"
#include "radon/pointops.hpp"

namespace radon::cam {

void register_cam_params(ad::ParamStore& store, const CamConfig& cfg, Rng& rng) {
  const int64_t c = cfg.channels;
  nn::register_mlp(store, "cam/h_mlp", 3 * (3 + c), c, c, rng);
  nn::register_mlp(store, "cam/wd_mlp", 3, c, c, rng);
  nn::register_mlp(store, "cam/wf_mlp", cfg.cosine_feature_weight ? 1 : c, c, c, rng);
  store.create("cam/beta_raw", ad::Tensor::scalar(0.5));
  nn::register_linear(store, "cam/bal/in", c, c, rng);
  nn::register_linear(store, "cam/bal/gate", c, c, rng);
  nn::register_linear(store, "cam/bal/out", c, c, rng);
  ad::Tensor a({c}), b({c}), cv({c});
  const double s = 1.0 / std::sqrt(static_cast<double>(c));
  for (int64_t i = 0; i < c; ++i) {
    a[i] = rng.uniform(0.5, 0.95);
    b[i] = rng.normal(0.0, s);
    cv[i] = rng.normal(0.0, s);
  }
  store.create("cam/bal/ssm_a", std::move(a));
  store.create("cam/bal/ssm_b", std::move(b));
  store.create("cam/bal/ssm_c", std::move(cv));
  nn::register_mlp(store, "cam/agg_mlp", 2 * c, c, c, rng);
}

ad::Value learned_beta(ad::Tape& tape, ad::ParamStore& store) {
  return tape.sigmoid(tape.param(store.at("cam/beta_raw")));
}

MatchGroups normalize_diffs(ad::Tape& tape, const CloudNodes& src, const CloudNodes& tgt,
                            const CamConfig& cfg) {
  const int64_t s_rows = src.coords.dim(0);
  const int64_t t_rows = tgt.coords.dim(0);
  if (s_rows < 1 || t_rows < 1) throw NumericError("normalize_diffs: empty cloud");
  const int k = cfg.k;
  if (static_cast<int64_t>(k) * s_rows == 0) throw NumericError("normalize_diffs: zero elements");

  MatchGroups g;
  g.nbr = pointops::knn(src.coords.val(), tgt.coords.val(), k);

  std::vector<int64_t> rep(static_cast<size_t>(s_rows * k));
  for (int64_t i = 0; i < s_rows; ++i)
    for (int j = 0; j < k; ++j) rep[static_cast<size_t>(i * k + j)] = i;

  ad::Value src_all = tape.concat({src.coords, src.feats}, 1);
  ad::Value tgt_all = tape.concat({tgt.coords, tgt.feats}, 1);
  g.src_rep = tape.gather_rows(src_all, rep);
  g.tgt_gath = tape.gather_rows(tgt_all, g.nbr);

  ad::Value raw = tape.sub(g.src_rep, g.tgt_gath);
  g.sigma = tape.sqrt(tape.mean_all(tape.mul(raw, raw)));
  g.diffs = tape.mul(raw, tape.reciprocal(tape.add_const(g.sigma, cfg.eps)));
  return g;
}

ad::Value resilience_register(ad::Tape& tape, ad::ParamStore& store, const MatchGroups& g,
                              ad::Value beta, const CamConfig& cfg) {
  const int64_t c = cfg.channels;
  const int64_t rows = g.diffs.dim(0);
  const int64_t s_rows = rows / cfg.k;

  ad::Value h = nn::mlp(tape, store, "cam/h_mlp", tape.concat({g.diffs, g.src_rep, g.tgt_gath}, 1));

  ad::Value xdiff = tape.slice(tape.sub(g.src_rep, g.tgt_gath), 1, 0, 3);
  ad::Value wd = nn::mlp(tape, store, "cam/wd_mlp", xdiff);

  ad::Value fs = tape.slice(g.src_rep, 1, 3, 3 + c);
  ad::Value ft = tape.slice(g.tgt_gath, 1, 3, 3 + c);
  ad::Value wf_in;
  if (cfg.cosine_feature_weight) {
    ad::Value prod = tape.reduce_sum(tape.mul(fs, ft), 1);  // rows x 1
    ad::Value denom = tape.clamp_min(tape.mul(tape.rownorm(fs), tape.rownorm(ft)), 1e-12);
    wf_in = tape.mul(prod, tape.reciprocal(denom));
  } else {
    wf_in = tape.mul(fs, ft);
  }
  ad::Value wf = nn::mlp(tape, store, "cam/wf_mlp", wf_in);

  ad::Value sum_f = tape.reduce_sum(tape.reshape(tape.mul(h, wf), {s_rows, cfg.k, c}), 1);
  ad::Value sum_d = tape.reduce_sum(tape.reshape(tape.mul(h, wd), {s_rows, cfg.k, c}), 1);
  ad::Value one_minus = tape.sub(tape.constant(ad::Tensor::scalar(1.0)), beta);
  return tape.add(tape.mul(sum_f, beta), tape.mul(sum_d, one_minus));
}

std::vector<int64_t> axis_sort(const ad::Tensor& coords, const std::vector<int64_t>& nbr) {
  if (nbr.empty()) throw BadInput("axis_sort: empty neighborhood");
  std::vector<int64_t> out;
  out.reserve(nbr.size() * 3);
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<int64_t> order = nbr;
    std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
      const double ca = coords.at(a, axis), cb = coords.at(b, axis);
      return ca < cb || (ca == cb && a < b);
    });
    out.insert(out.end(), order.begin(), order.end());
  }
  return out;
}

ad::Value balance(ad::Tape& tape, ad::ParamStore& store, ad::Value seq, const CamConfig& cfg) {
  if (seq.rank() != 3) throw ShapeError("balance: rank-3 sequence batch required");
  const int64_t a = seq.dim(0), t = seq.dim(1), c = seq.dim(2);
  ad::Value flat = tape.reshape(seq, {a * t, c});
  ad::Value u = tape.reshape(nn::linear(tape, store, "cam/bal/in", flat), {a, t, c});
  ad::Value scanned = tape.ssm_scan(u, tape.param(store.at("cam/bal/ssm_a")),
                                    tape.param(store.at("cam/bal/ssm_b")),
                                    tape.param(store.at("cam/bal/ssm_c")), cfg.scan_form);
  ad::Value gate = tape.sigmoid(nn::linear(tape, store, "cam/bal/gate", flat));
  ad::Value gated = tape.mul(tape.reshape(scanned, {a * t, c}), gate);
  return tape.reshape(nn::linear(tape, store, "cam/bal/out", gated), {a, t, c});
}

ad::Value aggregate(ad::Tape& tape, ad::ParamStore& store, const CloudNodes& src,
                    const std::vector<int64_t>& seq_idx, ad::Value balanced, ad::Value e,
                    const CamConfig& cfg) {
  const int64_t a = balanced.dim(0), t = balanced.dim(1), c = balanced.dim(2);
  std::vector<int64_t> rep(static_cast<size_t>(a * t));
  for (int64_t i = 0; i < a; ++i)
    for (int64_t j = 0; j < t; ++j) rep[static_cast<size_t>(i * t + j)] = i;

  ad::Value diff = tape.sub(tape.gather_rows(src.coords, seq_idx), tape.gather_rows(src.coords, rep));
  ad::Value w = tape.reciprocal(tape.clamp_min(tape.rownorm(diff), cfg.dist_clamp));
  ad::Value weighted = tape.mul(tape.reshape(balanced, {a * t, c}), w);
  ad::Value pooled = tape.reduce_sum(tape.reshape(weighted, {a, t, c}), 1);
  return nn::mlp(tape, store, "cam/agg_mlp", tape.concat({pooled, e}, 1));
}

ad::Value embed_scale(ad::Tape& tape, ad::ParamStore& store, const CloudNodes& src,
                      const CloudNodes& tgt, const CamConfig& cfg) {
  const MatchGroups groups = normalize_diffs(tape, src, tgt, cfg);
  ad::Value e = resilience_register(tape, store, groups, learned_beta(tape, store), cfg);

  // self-neighborhoods within the source, excluding each point itself
  const int64_t rows = src.coords.dim(0);
  const int want = std::min<int64_t>(cfg.k + 1, rows);
  const std::vector<int64_t> self_nn = pointops::knn(src.coords.val(), src.coords.val(), want);
  const ad::Tensor& coords = src.coords.val();

  std::vector<int64_t> seq_idx;
  seq_idx.reserve(static_cast<size_t>(rows * 3 * cfg.k));
  for (int64_t i = 0; i < rows; ++i) {
    std::vector<int64_t> nbr;
    nbr.reserve(static_cast<size_t>(cfg.k));
    for (int j = 0; j < want && static_cast<int>(nbr.size()) < cfg.k; ++j) {
      const int64_t cand = self_nn[static_cast<size_t>(i * want + j)];
      if (cand == i) continue;
      nbr.push_back(cand);
    }
    while (static_cast<int>(nbr.size()) < cfg.k) nbr.push_back(nbr.empty() ? i : nbr.back());
    const std::vector<int64_t> sorted = axis_sort(coords, nbr);
    seq_idx.insert(seq_idx.end(), sorted.begin(), sorted.end());
  }

  const int64_t t = 3 * cfg.k;
  ad::Value seq = tape.reshape(tape.gather_rows(e, seq_idx), {rows, t, cfg.channels});
  ad::Value balanced = balance(tape, store, seq, cfg);
  return aggregate(tape, store, src, seq_idx, balanced, e, cfg);
}

ad::Value cam_forward(ad::Tape& tape, ad::ParamStore& store, const CloudNodes& q1,
                      const CloudNodes& q2, const CamConfig& cfg) {
  if (q1.coords.dim(0) != q2.coords.dim(0))
    throw ShapeError("cam_forward: point sets must be the same size");
  if (cfg.w_coarse > q1.coords.dim(0)) throw BadInput("cam_forward: W exceeds cloud size");

  ad::Value fine = embed_scale(tape, store, q1, q2, cfg);

  const std::vector<int64_t> r1 = pointops::fps(q1.coords.val(), cfg.w_coarse);
  const std::vector<int64_t> r2 = pointops::fps(q2.coords.val(), cfg.w_coarse);
  const CloudNodes c1{tape.gather_rows(q1.coords, r1), tape.gather_rows(q1.feats, r1)};
  const CloudNodes c2{tape.gather_rows(q2.coords, r2), tape.gather_rows(q2.feats, r2)};
  ad::Value coarse = embed_scale(tape, store, c1, c2, cfg);

  return tape.concat({fine, coarse}, 0);
}

}  // namespace radon::cam
