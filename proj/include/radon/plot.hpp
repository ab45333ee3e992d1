#pragma once

#include <string>
#include <vector>

#include "radon/geom.hpp"
#include "radon/harness.hpp"

namespace radon::harness {

struct NamedTrajectory {
  std::string name;
  const geom::Trajectory* traj;
};

/// Top-down (x, y) overlay of the trajectories as SVG polylines.
void plot_trajectories_svg(const std::string& path, const std::vector<NamedTrajectory>& trajs);

/// Per-length errors averaged over the report's sequences, one row per
/// length: length_m,t_rel,r_rel.
void write_per_length_csv(const std::string& path, const EvalReport& report);

}  // namespace radon::harness
