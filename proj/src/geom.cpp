#include "radon/geom.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "radon/errors.hpp"

namespace radon::geom {

namespace {
constexpr double kRad2Deg = 180.0 / M_PI;
}

Quat quat_normalize(const Quat& q) {
  const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (n <= 1e-12) throw NumericError("quat_normalize: near-zero quaternion");
  const double s = (q[0] < 0.0 ? -1.0 : 1.0) / n;
  return {q[0] * s, q[1] * s, q[2] * s, q[3] * s};
}

Quat quat_multiply(const Quat& a, const Quat& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

Quat quat_conjugate(const Quat& q) { return {q[0], -q[1], -q[2], -q[3]}; }

Quat quat_from_axis_angle(const Vec3& axis, double angle_rad) {
  const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (n <= 1e-12) throw NumericError("quat_from_axis_angle: zero axis");
  const double h = 0.5 * angle_rad;
  const double s = std::sin(h) / n;
  return {std::cos(h), axis[0] * s, axis[1] * s, axis[2] * s};
}

double quat_angle(const Quat& q) {
  const double vn = std::sqrt(q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  return 2.0 * std::atan2(vn, std::abs(q[0]));
}

Vec3 quat_rotate(const Quat& q, const Vec3& v) {
  // v' = v + 2w(u x v) + 2(u x (u x v))
  const Vec3 u{q[1], q[2], q[3]};
  const Vec3 uv{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  const Vec3 uuv{u[1] * uv[2] - u[2] * uv[1], u[2] * uv[0] - u[0] * uv[2],
                 u[0] * uv[1] - u[1] * uv[0]};
  return {v[0] + 2.0 * (q[0] * uv[0] + uuv[0]), v[1] + 2.0 * (q[0] * uv[1] + uuv[1]),
          v[2] + 2.0 * (q[0] * uv[2] + uuv[2])};
}

std::array<std::array<double, 3>, 3> quat_to_matrix(const Quat& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
           {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
           {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

Quat quat_from_matrix(const std::array<std::array<double, 3>, 3>& r) {
  // Shepperd's method: pick the largest diagonal combination.
  const double tr = r[0][0] + r[1][1] + r[2][2];
  Quat q;
  if (tr > 0.0) {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    q = {0.25 * s, (r[2][1] - r[1][2]) / s, (r[0][2] - r[2][0]) / s, (r[1][0] - r[0][1]) / s};
  } else if (r[0][0] > r[1][1] && r[0][0] > r[2][2]) {
    const double s = std::sqrt(1.0 + r[0][0] - r[1][1] - r[2][2]) * 2.0;
    q = {(r[2][1] - r[1][2]) / s, 0.25 * s, (r[0][1] + r[1][0]) / s, (r[0][2] + r[2][0]) / s};
  } else if (r[1][1] > r[2][2]) {
    const double s = std::sqrt(1.0 + r[1][1] - r[0][0] - r[2][2]) * 2.0;
    q = {(r[0][2] - r[2][0]) / s, (r[0][1] + r[1][0]) / s, 0.25 * s, (r[1][2] + r[2][1]) / s};
  } else {
    const double s = std::sqrt(1.0 + r[2][2] - r[0][0] - r[1][1]) * 2.0;
    q = {(r[1][0] - r[0][1]) / s, (r[0][2] + r[2][0]) / s, (r[1][2] + r[2][1]) / s, 0.25 * s};
  }
  return quat_normalize(q);
}

Pose pose_compose(const Pose& a, const Pose& b) {
  Pose out;
  out.q = quat_normalize(quat_multiply(a.q, b.q));
  const Vec3 rbt = quat_rotate(a.q, b.t);
  out.t = {a.t[0] + rbt[0], a.t[1] + rbt[1], a.t[2] + rbt[2]};
  return out;
}

Pose pose_inverse(const Pose& a) {
  Pose out;
  out.q = quat_normalize(quat_conjugate(a.q));
  const Vec3 rt = quat_rotate(out.q, a.t);
  out.t = {-rt[0], -rt[1], -rt[2]};
  return out;
}

Pose relative_pose(const Pose& a, const Pose& b) { return pose_compose(pose_inverse(a), b); }

namespace {
double chord(const Pose& a, const Pose& b) {
  const double dx = b.t[0] - a.t[0], dy = b.t[1] - a.t[1], dz = b.t[2] - a.t[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void fill_lengths(Trajectory& tr) {
  tr.cumulative_length.assign(tr.poses.size(), 0.0);
  for (size_t i = 1; i < tr.poses.size(); ++i)
    tr.cumulative_length[i] = tr.cumulative_length[i - 1] + chord(tr.poses[i - 1], tr.poses[i]);
}
}  // namespace

Trajectory trajectory_from_relatives(const std::vector<Pose>& relatives, const Pose& seed) {
  Trajectory tr;
  tr.poses.push_back(seed);
  tr.frame_ids.push_back(0);
  for (size_t i = 0; i < relatives.size(); ++i) {
    tr.poses.push_back(pose_compose(tr.poses.back(), relatives[i]));
    tr.frame_ids.push_back(static_cast<int64_t>(i + 1));
  }
  fill_lengths(tr);
  return tr;
}

Trajectory trajectory_from_absolutes(std::vector<Pose> poses) {
  Trajectory tr;
  tr.poses = std::move(poses);
  tr.frame_ids.resize(tr.poses.size());
  for (size_t i = 0; i < tr.poses.size(); ++i) tr.frame_ids[i] = static_cast<int64_t>(i);
  fill_lengths(tr);
  return tr;
}

RpeResult rpe_rmse(const Trajectory& gt, const Trajectory& pred, const std::vector<double>& lengths) {
  if (gt.size() != pred.size()) throw NumericError("rpe_rmse: frame count mismatch");
  if (gt.size() < 2) throw NumericError("rpe_rmse: need at least two poses");
  if (lengths.empty()) throw NumericError("rpe_rmse: no segment lengths");

  RpeResult res;
  res.lengths = lengths;
  const size_t n = gt.size();
  int64_t total_segments = 0;

  for (double len : lengths) {
    double t_acc = 0.0, r_acc = 0.0;
    int64_t count = 0;
    size_t end = 0;
    for (size_t start = 0; start + 1 < n; ++start) {
      const double target = gt.cumulative_length[start] + len;
      if (end < start + 1) end = start + 1;
      while (end < n && gt.cumulative_length[end] < target) ++end;
      if (end >= n) break;

      const Pose rel_gt = relative_pose(gt.poses[start], gt.poses[end]);
      const Pose rel_pred = relative_pose(pred.poses[start], pred.poses[end]);
      const Pose err = relative_pose(rel_gt, rel_pred);
      const double te = std::sqrt(err.t[0] * err.t[0] + err.t[1] * err.t[1] + err.t[2] * err.t[2]);
      const double re = quat_angle(err.q) * kRad2Deg;
      t_acc += (te / len) * (te / len);
      r_acc += (re / len) * (re / len);
      ++count;
    }
    res.segments_per_length.push_back(count);
    if (count > 0) {
      res.t_rel_per_length.push_back(std::sqrt(t_acc / static_cast<double>(count)));
      res.r_rel_per_length.push_back(std::sqrt(r_acc / static_cast<double>(count)));
      total_segments += count;
    } else {
      res.t_rel_per_length.push_back(0.0);
      res.r_rel_per_length.push_back(0.0);
    }
  }

  if (total_segments == 0) throw NumericError("rpe_rmse: no evaluable segments");

  double ts = 0.0, rs = 0.0;
  int active = 0;
  for (size_t i = 0; i < lengths.size(); ++i) {
    if (res.segments_per_length[i] == 0) continue;
    ts += res.t_rel_per_length[i];
    rs += res.r_rel_per_length[i];
    ++active;
  }
  res.t_rel = ts / active;
  res.r_rel = rs / active;
  return res;
}

void write_pose_file(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw BadInput("pose file: cannot open for write: " + path);
  os << std::setprecision(17);
  for (const Pose& p : traj.poses) {
    const auto r = quat_to_matrix(p.q);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) os << r[i][j] << ' ';
      os << p.t[i];
      if (i < 2) os << ' ';
    }
    os << '\n';
  }
  if (!os) throw BadInput("pose file: write failed: " + path);
}

Trajectory read_pose_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw BadInput("pose file: cannot open: " + path);
  std::vector<Pose> poses;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    double v[12];
    for (int i = 0; i < 12; ++i) {
      if (!(ls >> v[i])) {
        std::ostringstream os;
        os << "pose file: malformed row at " << path << ":" << lineno;
        throw BadInput(os.str());
      }
    }
    std::array<std::array<double, 3>, 3> r{{{v[0], v[1], v[2]}, {v[4], v[5], v[6]}, {v[8], v[9], v[10]}}};
    Pose p;
    p.q = quat_from_matrix(r);
    p.t = {v[3], v[7], v[11]};
    poses.push_back(p);
  }
  return trajectory_from_absolutes(std::move(poses));
}

}  // namespace radon::geom
