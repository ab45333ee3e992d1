#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "radon/dataio.hpp"
#include "radon/tape.hpp"
#include "radon/tensor.hpp"

namespace radon::pointops {

/// Point coordinates paired with per-point features (and raw radar
/// attributes where they exist). Plain tensors; the learnable pipeline
/// carries tape handles alongside.
struct FeatCloud {
  ad::Tensor coords;  // N x 3
  ad::Tensor feats;   // N x C
};

enum class FpsSeed { kFirstIndex, kLexicographicMin };

/// Greedy farthest point sampling. Ties break toward the lowest index.
std::vector<int64_t> fps_serial(const ad::Tensor& coords, int64_t m, FpsSeed seed);
std::vector<int64_t> fps_parallel(const ad::Tensor& coords, int64_t m, FpsSeed seed);
std::vector<int64_t> fps(const ad::Tensor& coords, int64_t m, FpsSeed seed = FpsSeed::kFirstIndex);

struct BallQueryResult {
  std::vector<int64_t> idx;  // k entries, ascending distance, ties by index
  bool fallback = false;     // no point within radius; global nearest repeated
};

/// Neighbors of one center within `radius`, padded to k by repeating the
/// nearest found index.
BallQueryResult ball_query(const std::array<double, 3>& center, const ad::Tensor& coords,
                           double radius, int k);

struct GroupIndex {
  std::vector<int64_t> idx;       // anchors * k, row-major
  std::vector<uint8_t> fallback;  // per anchor
};

GroupIndex ball_group_serial(const std::vector<int64_t>& anchors, const ad::Tensor& coords,
                             double radius, int k);
GroupIndex ball_group_parallel(const std::vector<int64_t>& anchors, const ad::Tensor& coords,
                               double radius, int k);
GroupIndex ball_group(const std::vector<int64_t>& anchors, const ad::Tensor& coords, double radius,
                      int k);

/// k nearest targets per query row (ascending distance, ties by index),
/// flattened to queries * k.
std::vector<int64_t> knn_serial(const ad::Tensor& query, const ad::Tensor& target, int k);
std::vector<int64_t> knn_parallel(const ad::Tensor& query, const ad::Tensor& target, int k);
std::vector<int64_t> knn(const ad::Tensor& query, const ad::Tensor& target, int k);

struct BackboneConfig {
  int n_points = 256;
  int channels = 64;
  int k = 16;
  double radius1 = 2.0;
  double radius2 = 4.0;
};

/// Registers the two set-abstraction MLPs plus the rcs/rrv standardization
/// stats (non-trainable) under "backbone/...".
void register_backbone_params(ad::ParamStore& store, const BackboneConfig& cfg, Rng& rng);

struct EncodedCloud {
  std::vector<int64_t> point_indices;  // rows of the input frame backing each output point
  ad::Value coords;                    // N x 3 (constant)
  ad::Value feats;                     // N x C
};

/// Selects exactly N points (farthest point sampling with a
/// lexicographic-minimum seed; uniform resampling with replacement when the
/// frame is smaller) and encodes them through two grouped MLP + max-pool
/// levels over (relative xyz, rcs, rrv, prior feature).
EncodedCloud encode_backbone(ad::Tape& tape, ad::ParamStore& store, const dataio::Frame& frame,
                             const BackboneConfig& cfg);

}  // namespace radon::pointops
