#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radon/dataio.hpp"
#include "radon/geom.hpp"

namespace radon::synth {

struct SynthConfig {
  int n_frames = 200;
  int points_per_frame = 256;
  double noise_sigma = 0.05;   // meters, on point positions
  double outlier_rate = 0.05;  // fraction of uniform ghost returns
  std::string turn_profile = "mixed";  // straight | turns | mixed
  double speed_min = 8.0;              // m/s
  double speed_max = 14.0;
  double dt = 0.1;  // seconds between frames
  double fov_half_angle_deg = 32.0;
  double max_range = 60.0;
  double height_min = -3.0;
  double height_max = 3.0;
  int walls = 12;
  int poles = 40;
  int boxes = 8;

  static SynthConfig from_file(const std::string& path);
};

struct SynthResult {
  std::vector<dataio::Frame> frames;  // sensor-frame points, gt poses attached
  geom::Trajectory gt;
};

/// Ground-truth-known scene: static walls/poles/boxes scattered along a
/// piecewise constant-speed, constant-yaw-rate ride. Per frame, surface
/// points are sampled inside the sensor frustum; each static return
/// carries rrv = -(v_ego . u) for the true ray u, then position noise and
/// uniform outliers are applied.
SynthResult generate(const SynthConfig& cfg, uint64_t seed);

/// Writes frames/ (csv or rfrm), poses.txt and manifest.toml under dir.
void write_sequence(const std::string& dir, const SynthResult& result, const SynthConfig& cfg,
                    const std::string& id, bool binary_frames = false);

}  // namespace radon::synth
