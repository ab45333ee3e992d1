#pragma once

#include <vector>

#include "radon/pointops.hpp"
#include "radon/tape.hpp"

namespace radon::lcm {

struct LcmConfig {
  int k = 8;            // region size
  double radius = 3.0;  // ball-query radius, meters
  int channels = 64;
  bool neighbor_softmax_gate = false;  // reserved alternative; not implemented
};

void register_lcm_params(ad::ParamStore& store, const LcmConfig& cfg, Rng& rng);

/// Anchor regions: M anchors with K in-frame neighbors each.
struct Regions {
  std::vector<int64_t> anchors;   // rows into the cloud
  pointops::GroupIndex groups;    // M*K neighbor rows
};

Regions build_regions(const ad::Tensor& coords, int64_t m, const LcmConfig& cfg);

struct RegionStats {
  ad::Value dfeat;  // M x C feature offsets
  ad::Value dxhat;  // M x 3 initial positional offsets (anchor - region mean)
};

/// dfeat = MLP(f_anchor - maxpool(F_region)); dxhat = x_anchor - avgpool(X_region).
RegionStats region_stats(ad::Tape& tape, ad::ParamStore& store, ad::Value coords, ad::Value feats,
                         const Regions& regions, const LcmConfig& cfg);

/// Gated differential attention on the initial offset: the normalized
/// feature offset and anchor feature are projected to query/key, their
/// scaled dot product squashed to (0,1) and applied to dxhat.
ad::Value offset_attention(ad::Tape& tape, ad::ParamStore& store, ad::Value dfeat,
                           ad::Value anchor_feats, ad::Value dxhat, const LcmConfig& cfg);

struct Completed {
  ad::Value coords;  // (N+M) x 3; first N rows identical to the input
  ad::Value feats;   // (N+M) x C
};

/// Synthesizes m offset points at farthest-point-sampled anchors and
/// appends them to the cloud.
Completed complete(ad::Tape& tape, ad::ParamStore& store, ad::Value coords, ad::Value feats,
                   int64_t m, const LcmConfig& cfg);

}  // namespace radon::lcm
