#pragma once

#include "radon/cam.hpp"
#include "radon/com.hpp"
#include "radon/dataio.hpp"
#include "radon/lcm.hpp"
#include "radon/pointops.hpp"

namespace radon::model {

struct NetConfig {
  int n_points = 256;     // N raw points per frame
  int m_completion = 64;  // M synthetic points
  int w_coarse = 64;      // W coarse-scale points
  int window = 5;         // L clip-window capacity
  int channels = 64;      // C feature width
  int k_backbone = 16;
  int k_lcm = 8;
  int k_match = 8;
  double sa1_radius = 2.0;
  double sa2_radius = 4.0;
  double lcm_radius = 3.0;
  int ssm_blocks = 2;
  bool dense_ssm = false;
  bool cosine_feature_weight = false;
  bool neighbor_softmax_gate = false;
  ad::ScanForm scan_form = ad::ScanForm::kKernel;

  pointops::BackboneConfig backbone_cfg() const {
    return {n_points, channels, k_backbone, sa1_radius, sa2_radius};
  }
  lcm::LcmConfig lcm_cfg() const { return {k_lcm, lcm_radius, channels, neighbor_softmax_gate}; }
  cam::CamConfig cam_cfg() const {
    return {k_match, channels, w_coarse, 1e-6, 1e-3, cosine_feature_weight, scan_form};
  }
  com::ComConfig com_cfg() const { return {channels, window, ssm_blocks, dense_ssm, scan_form}; }
};

/// Registers every learnable block in a fixed order (deterministic for a
/// given seed).
void register_params(ad::ParamStore& store, const NetConfig& cfg, Rng& rng);

/// Full per-pair forward: encode both frames, densify, associate, pool the
/// state into the clip window, optimize the window, regress the pose of
/// frame b expressed in frame a.
com::PoseEstimate forward_pair(ad::Tape& tape, ad::ParamStore& store, const NetConfig& cfg,
                               const dataio::Frame& a, const dataio::Frame& b,
                               com::StateWindow& window, int64_t pair_index);

}  // namespace radon::model
