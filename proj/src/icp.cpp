#include "radon/icp.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace radon::harness {

namespace {

Eigen::Matrix3d quat_to_eigen(const geom::Quat& q) {
  const auto m = geom::quat_to_matrix(q);
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = m[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return r;
}

geom::Pose eigen_to_pose(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
  std::array<std::array<double, 3>, 3> m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[static_cast<size_t>(i)][static_cast<size_t>(j)] = r(i, j);
  geom::Pose p;
  p.q = geom::quat_from_matrix(m);
  p.t = {t.x(), t.y(), t.z()};
  return p;
}

}  // namespace

IcpResult icp_point2point(const std::vector<dataio::RadarPoint>& source,
                          const std::vector<dataio::RadarPoint>& target, const IcpConfig& cfg) {
  IcpResult res;
  if (source.size() < 3 || target.size() < 3) {
    res.degenerate = true;
    return res;
  }

  Eigen::MatrixXd src(3, static_cast<Eigen::Index>(source.size()));
  Eigen::MatrixXd dst(3, static_cast<Eigen::Index>(target.size()));
  for (size_t i = 0; i < source.size(); ++i)
    src.col(static_cast<Eigen::Index>(i)) << source[i].x, source[i].y, source[i].z;
  for (size_t i = 0; i < target.size(); ++i)
    dst.col(static_cast<Eigen::Index>(i)) << target[i].x, target[i].y, target[i].z;

  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  Eigen::Vector3d trans = Eigen::Vector3d::Zero();

  for (int it = 0; it < cfg.max_iterations; ++it) {
    res.iterations = it + 1;
    const Eigen::MatrixXd moved = (rot * src).colwise() + trans;

    Eigen::MatrixXd matched(3, moved.cols());
    for (Eigen::Index i = 0; i < moved.cols(); ++i) {
      Eigen::Index best = 0;
      (dst.colwise() - moved.col(i)).colwise().squaredNorm().minCoeff(&best);
      matched.col(i) = dst.col(best);
    }

    const Eigen::Vector3d mu_m = moved.rowwise().mean();
    const Eigen::Vector3d mu_d = matched.rowwise().mean();
    const Eigen::Matrix3d cov =
        (matched.colwise() - mu_d) * (moved.colwise() - mu_m).transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2, 2) = -1.0;
    const Eigen::Matrix3d dr = svd.matrixU() * d * svd.matrixV().transpose();
    const Eigen::Vector3d dt = mu_d - dr * mu_m;

    rot = dr * rot;
    trans = dr * trans + dt;

    const double step = dt.norm() + std::acos(std::clamp((dr.trace() - 1.0) / 2.0, -1.0, 1.0));
    if (step < cfg.tolerance) break;
  }

  res.pose = eigen_to_pose(rot, trans);
  return res;
}

geom::Trajectory icp_baseline(const std::vector<dataio::Frame>& frames, const IcpConfig& cfg) {
  std::vector<geom::Pose> rels;
  for (size_t i = 0; i + 1 < frames.size(); ++i) {
    const IcpResult r = icp_point2point(frames[i + 1].points, frames[i].points, cfg);
    rels.push_back(r.degenerate ? geom::Pose::identity() : r.pose);
  }
  return geom::trajectory_from_relatives(rels);
}

}  // namespace radon::harness
