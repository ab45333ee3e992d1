#include "radon/lcm.hpp"

#include <cmath>

#include "radon/errors.hpp"
#include "radon/nn.hpp"

namespace radon::lcm {

void register_lcm_params(ad::ParamStore& store, const LcmConfig& cfg, Rng& rng) {
  if (cfg.neighbor_softmax_gate)
    throw BadInput("lcm: neighbor-axis softmax gate is reserved and not implemented");
  const int64_t c = cfg.channels;
  nn::register_mlp(store, "lcm/feat_mlp", c, c, c, rng);
  nn::register_ln(store, "lcm/ln_q", c);
  nn::register_ln(store, "lcm/ln_k", c);
  store.create("lcm/wq", nn::xavier({c, c}, rng));
  store.create("lcm/wk", nn::xavier({c, c}, rng));
}

Regions build_regions(const ad::Tensor& coords, int64_t m, const LcmConfig& cfg) {
  Regions r;
  r.anchors = pointops::fps(coords, m);
  r.groups = pointops::ball_group(r.anchors, coords, cfg.radius, cfg.k);
  return r;
}

RegionStats region_stats(ad::Tape& tape, ad::ParamStore& store, ad::Value coords, ad::Value feats,
                         const Regions& regions, const LcmConfig& cfg) {
  const int64_t m = static_cast<int64_t>(regions.anchors.size());
  const int64_t k = cfg.k;
  const int64_t c = cfg.channels;

  ad::Value f_anchor = tape.gather_rows(feats, regions.anchors);
  ad::Value x_anchor = tape.gather_rows(coords, regions.anchors);

  ad::Value f_region = tape.gather_rows(feats, regions.groups.idx);
  ad::Value f_pooled = tape.reduce_max(tape.reshape(f_region, {m, k, c}), 1);
  RegionStats out;
  out.dfeat = nn::mlp(tape, store, "lcm/feat_mlp", tape.sub(f_anchor, f_pooled));

  ad::Value x_region = tape.gather_rows(coords, regions.groups.idx);
  ad::Value x_mean = tape.reduce_mean(tape.reshape(x_region, {m, k, 3}), 1);
  out.dxhat = tape.sub(x_anchor, x_mean);
  return out;
}

ad::Value offset_attention(ad::Tape& tape, ad::ParamStore& store, ad::Value dfeat,
                           ad::Value anchor_feats, ad::Value dxhat, const LcmConfig& cfg) {
  ad::Value q = tape.matmul(nn::ln(tape, store, "lcm/ln_q", dfeat), tape.param(store.at("lcm/wq")));
  ad::Value key =
      tape.matmul(nn::ln(tape, store, "lcm/ln_k", anchor_feats), tape.param(store.at("lcm/wk")));
  ad::Value dot = tape.reduce_sum(tape.mul(q, key), 1);  // M x 1
  ad::Value gate = tape.sigmoid(tape.scale(dot, 1.0 / std::sqrt(static_cast<double>(cfg.channels))));
  return tape.mul(dxhat, gate);
}

Completed complete(ad::Tape& tape, ad::ParamStore& store, ad::Value coords, ad::Value feats,
                   int64_t m, const LcmConfig& cfg) {
  if (m > coords.dim(0)) throw BadInput("lcm: m exceeds cloud size");
  const Regions regions = build_regions(coords.val(), m, cfg);

  const RegionStats stats = region_stats(tape, store, coords, feats, regions, cfg);
  ad::Value f_anchor = tape.gather_rows(feats, regions.anchors);
  ad::Value x_anchor = tape.gather_rows(coords, regions.anchors);
  ad::Value dx = offset_attention(tape, store, stats.dfeat, f_anchor, stats.dxhat, cfg);

  Completed out;
  out.coords = tape.concat({coords, tape.add(x_anchor, dx)}, 0);
  out.feats = tape.concat({feats, tape.add(f_anchor, stats.dfeat)}, 0);
  return out;
}

}  // namespace radon::lcm
