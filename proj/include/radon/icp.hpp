#pragma once

#include <vector>

#include "radon/dataio.hpp"
#include "radon/geom.hpp"

namespace radon::harness {

struct IcpConfig {
  int max_iterations = 30;
  double tolerance = 1e-6;  // convergence on the incremental update
};

struct IcpResult {
  geom::Pose pose;  // maps source (later frame) points into the target frame
  int iterations = 0;
  bool degenerate = false;  // fewer than 3 correspondences
};

/// Point-to-point ICP: nearest-neighbor correspondences, SVD pose solve.
IcpResult icp_point2point(const std::vector<dataio::RadarPoint>& source,
                          const std::vector<dataio::RadarPoint>& target,
                          const IcpConfig& cfg = {});

/// Chains per-pair ICP estimates into an absolute trajectory.
geom::Trajectory icp_baseline(const std::vector<dataio::Frame>& frames, const IcpConfig& cfg = {});

}  // namespace radon::harness
