#pragma once

#include <vector>

#include "radon/rng.hpp"
#include "radon/tape.hpp"

namespace radon::cam {

struct CamConfig {
  int k = 8;  // matching and aggregation neighbors
  int channels = 64;
  int w_coarse = 64;
  double eps = 1e-6;         // normalization guard
  double dist_clamp = 1e-3;  // meters; floor for 1/distance weights
  bool cosine_feature_weight = false;
  ad::ScanForm scan_form = ad::ScanForm::kKernel;
};

void register_cam_params(ad::ParamStore& store, const CamConfig& cfg, Rng& rng);

/// Point cloud view used by the matcher: coordinates + features as tape
/// values (rows of the same cloud).
struct CloudNodes {
  ad::Value coords;  // S x 3
  ad::Value feats;   // S x C
};

struct MatchGroups {
  std::vector<int64_t> nbr;  // S*K rows into the target
  ad::Value diffs;           // (S*K) x (3+C): (q_i - q_{i,j}) / (sigma + eps)
  ad::Value src_rep;         // (S*K) x (3+C)
  ad::Value tgt_gath;        // (S*K) x (3+C)
  ad::Value sigma;           // scalar
};

/// kNN match groups plus globally normalized point differences (sigma is
/// the RMS over every group element and channel).
MatchGroups normalize_diffs(ad::Tape& tape, const CloudNodes& src, const CloudNodes& tgt,
                            const CamConfig& cfg);

/// Soft registration: contrastive features weighted by learned distance and
/// feature-similarity weights, blended by beta in (0,1). Pass beta
/// explicitly to pin the blend (tests); production uses sigmoid of the
/// stored parameter.
ad::Value resilience_register(ad::Tape& tape, ad::ParamStore& store, const MatchGroups& g,
                              ad::Value beta, const CamConfig& cfg);
ad::Value learned_beta(ad::Tape& tape, ad::ParamStore& store);

/// Stable sort of one neighborhood along x, then y, then z; returns the 3K
/// concatenated global indices. Ties resolve by index order.
std::vector<int64_t> axis_sort(const ad::Tensor& coords, const std::vector<int64_t>& nbr);

/// Gated SSM pass over each anchor's sorted neighbor sequence.
/// seq is (A, T, C); returns the balanced (A, T, C).
ad::Value balance(ad::Tape& tape, ad::ParamStore& store, ad::Value seq, const CamConfig& cfg);

/// Inverse-distance aggregation of balanced embeddings into the refreshed
/// per-point correlation embedding (A x C). seq_idx holds each anchor's 3K
/// sorted neighbor rows (flat, A*3K) into src.
ad::Value aggregate(ad::Tape& tape, ad::ParamStore& store, const CloudNodes& src,
                    const std::vector<int64_t>& seq_idx, ad::Value balanced, ad::Value e,
                    const CamConfig& cfg);

/// One scale of the matcher: register, sort, balance, aggregate.
ad::Value embed_scale(ad::Tape& tape, ad::ParamStore& store, const CloudNodes& src,
                      const CloudNodes& tgt, const CamConfig& cfg);

/// Hierarchical association: fine (Q1 -> Q2) over all rows plus coarse
/// (R1 -> R2) over W farthest-point-sampled rows; G = rows(fine) ++ rows(coarse).
ad::Value cam_forward(ad::Tape& tape, ad::ParamStore& store, const CloudNodes& q1,
                      const CloudNodes& q2, const CamConfig& cfg);

}  // namespace radon::cam
