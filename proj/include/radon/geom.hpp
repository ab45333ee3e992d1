#pragma once

#include <array>
#include <string>
#include <vector>

namespace radon::geom {

using Vec3 = std::array<double, 3>;
using Quat = std::array<double, 4>;  // (w, x, y, z)

/// Normalizes to unit length and flips to the w >= 0 hemisphere.
/// Throws NumericError for near-zero input.
Quat quat_normalize(const Quat& q);
Quat quat_multiply(const Quat& a, const Quat& b);
Quat quat_conjugate(const Quat& q);
Quat quat_from_axis_angle(const Vec3& axis, double angle_rad);
/// Rotation angle in radians, 2*atan2(||vec||, |w|), in [0, pi].
double quat_angle(const Quat& q);
Vec3 quat_rotate(const Quat& q, const Vec3& v);
std::array<std::array<double, 3>, 3> quat_to_matrix(const Quat& q);
Quat quat_from_matrix(const std::array<std::array<double, 3>, 3>& r);

/// Rigid transform: x_parent = R(q) * x_local + t.
struct Pose {
  Quat q{1.0, 0.0, 0.0, 0.0};
  Vec3 t{0.0, 0.0, 0.0};

  static Pose identity() { return Pose{}; }
};

Pose pose_compose(const Pose& a, const Pose& b);
Pose pose_inverse(const Pose& a);
/// inverse(a) ∘ b: pose of b expressed in a's frame.
Pose relative_pose(const Pose& a, const Pose& b);

struct Trajectory {
  std::vector<Pose> poses;
  std::vector<int64_t> frame_ids;
  std::vector<double> cumulative_length;  // meters, per index

  size_t size() const { return poses.size(); }
};

/// Chains per-pair relative poses into absolute poses starting at identity
/// (or at `seed`), and fills cumulative chord lengths.
Trajectory trajectory_from_relatives(const std::vector<Pose>& relatives,
                                     const Pose& seed = Pose::identity());
Trajectory trajectory_from_absolutes(std::vector<Pose> poses);

struct RpeResult {
  double t_rel = 0.0;  // m/m, averaged over lengths
  double r_rel = 0.0;  // deg/m
  std::vector<double> lengths;
  std::vector<double> t_rel_per_length;
  std::vector<double> r_rel_per_length;
  std::vector<int64_t> segments_per_length;
};

/// Segment-based relative pose error. For every start index and every
/// length reachable in gt (endpoint = first frame at cumulative length >=
/// start + len), the error pose E = relative(gt segment, pred segment)
/// contributes ||t_E||/len and angle(E)/len; per-length RMSEs are averaged
/// over lengths. Throws NumericError when no segment is evaluable.
RpeResult rpe_rmse(const Trajectory& gt, const Trajectory& pred, const std::vector<double>& lengths);

/// KITTI odometry text format: 12 floats per line, row-major 3x4 [R|t].
void write_pose_file(const std::string& path, const Trajectory& traj);
Trajectory read_pose_file(const std::string& path);

}  // namespace radon::geom
