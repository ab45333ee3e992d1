#include "radon/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "radon/config.hpp"
#include "radon/errors.hpp"
#include "radon/rng.hpp"

namespace fs = std::filesystem;

namespace radon::synth {

SynthConfig SynthConfig::from_file(const std::string& path) {
  const config::KvFile kv = config::KvFile::parse(path);
  SynthConfig c;
  c.n_frames = static_cast<int>(kv.get_int_or("n_frames", c.n_frames));
  c.points_per_frame = static_cast<int>(kv.get_int_or("points_per_frame", c.points_per_frame));
  c.noise_sigma = kv.get_double_or("noise_sigma", c.noise_sigma);
  c.outlier_rate = kv.get_double_or("outlier_rate", c.outlier_rate);
  c.turn_profile = kv.get_string_or("turn_profile", c.turn_profile);
  c.speed_min = kv.get_double_or("speed_min", c.speed_min);
  c.speed_max = kv.get_double_or("speed_max", c.speed_max);
  c.dt = kv.get_double_or("dt", c.dt);
  c.fov_half_angle_deg = kv.get_double_or("fov_half_angle_deg", c.fov_half_angle_deg);
  c.max_range = kv.get_double_or("max_range", c.max_range);
  c.height_min = kv.get_double_or("height_min", c.height_min);
  c.height_max = kv.get_double_or("height_max", c.height_max);
  c.walls = static_cast<int>(kv.get_int_or("walls", c.walls));
  c.poles = static_cast<int>(kv.get_int_or("poles", c.poles));
  c.boxes = static_cast<int>(kv.get_int_or("boxes", c.boxes));
  return c;
}

namespace {

struct Surface {
  // rectangle spanned by origin + s*edge_u (s in [0,1]) + h*[0,0,1] (h in [z0,z1])
  geom::Vec3 origin;
  geom::Vec3 edge_u;
  double z0, z1;
  double rcs_mean, rcs_sigma;
};

struct Ride {
  std::vector<geom::Pose> poses;
  std::vector<geom::Vec3> velocities;  // world frame, instantaneous
};

Ride make_ride(const SynthConfig& cfg, Rng& rng) {
  Ride ride;
  double x = 0, y = 0, yaw = 0;
  int span_left = 0;
  double v = 0, omega = 0;
  for (int t = 0; t < cfg.n_frames; ++t) {
    if (span_left == 0) {
      span_left = static_cast<int>(rng.uniform_int(30, 60));
      v = rng.uniform(cfg.speed_min, cfg.speed_max);
      if (cfg.turn_profile == "straight") {
        omega = 0.0;
      } else if (cfg.turn_profile == "turns") {
        omega = (rng.uniform(0, 1) < 0.5 ? -1 : 1) * rng.uniform(4.0, 12.0) * M_PI / 180.0;
      } else {
        omega = rng.uniform(0, 1) < 0.5
                    ? 0.0
                    : (rng.uniform(0, 1) < 0.5 ? -1 : 1) * rng.uniform(4.0, 12.0) * M_PI / 180.0;
      }
    }
    --span_left;

    geom::Pose p;
    p.q = geom::quat_from_axis_angle({0, 0, 1}, yaw);
    p.t = {x, y, 0.0};
    ride.poses.push_back(p);
    ride.velocities.push_back({v * std::cos(yaw), v * std::sin(yaw), 0.0});

    // exact constant-twist step
    if (std::abs(omega) < 1e-12) {
      x += v * cfg.dt * std::cos(yaw);
      y += v * cfg.dt * std::sin(yaw);
    } else {
      const double yaw2 = yaw + omega * cfg.dt;
      x += v / omega * (std::sin(yaw2) - std::sin(yaw));
      y -= v / omega * (std::cos(yaw2) - std::cos(yaw));
      yaw = yaw2;
    }
  }
  return ride;
}

std::vector<Surface> make_world(const SynthConfig& cfg, const Ride& ride, Rng& rng) {
  std::vector<Surface> world;
  auto place = [&](double lateral_lo, double lateral_hi) {
    const size_t t0 = static_cast<size_t>(rng.uniform_int(0, cfg.n_frames - 1));
    const geom::Pose& p = ride.poses[t0];
    const double side = rng.uniform(0, 1) < 0.5 ? -1.0 : 1.0;
    const geom::Vec3 local{rng.uniform(0.0, 25.0), side * rng.uniform(lateral_lo, lateral_hi), 0.0};
    const geom::Vec3 r = geom::quat_rotate(p.q, local);
    return std::pair<geom::Vec3, geom::Quat>{{p.t[0] + r[0], p.t[1] + r[1], 0.0}, p.q};
  };

  for (int i = 0; i < cfg.walls; ++i) {
    auto [pos, q] = place(6.0, 18.0);
    const double len = rng.uniform(8.0, 25.0);
    const double ang = rng.uniform(-0.3, 0.3);
    const geom::Vec3 dir = geom::quat_rotate(geom::quat_multiply(q, geom::quat_from_axis_angle({0, 0, 1}, ang)),
                                             {1, 0, 0});
    Surface s;
    s.origin = {pos[0] - 0.5 * len * dir[0], pos[1] - 0.5 * len * dir[1], 0.0};
    s.edge_u = {len * dir[0], len * dir[1], 0.0};
    s.z0 = -0.8;
    s.z1 = 2.6;
    s.rcs_mean = rng.normal(5.0, 1.0);
    s.rcs_sigma = 2.0;
    world.push_back(s);
  }
  for (int i = 0; i < cfg.poles; ++i) {
    auto [pos, q] = place(2.5, 14.0);
    (void)q;
    Surface s;
    s.origin = {pos[0], pos[1], 0.0};
    s.edge_u = {rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), 0.0};
    s.z0 = -0.8;
    s.z1 = rng.uniform(1.5, 2.9);
    s.rcs_mean = rng.normal(15.0, 2.0);
    s.rcs_sigma = 3.0;
    world.push_back(s);
  }
  for (int i = 0; i < cfg.boxes; ++i) {
    auto [pos, q] = place(3.0, 12.0);
    const double sx = rng.uniform(1.0, 4.0), sy = rng.uniform(1.0, 4.0);
    const geom::Vec3 ux = geom::quat_rotate(q, {sx, 0, 0});
    const geom::Vec3 uy = geom::quat_rotate(q, {0, sy, 0});
    const double z1 = rng.uniform(0.6, 2.2);
    const double rcs = rng.normal(10.0, 2.0);
    // four vertical faces
    const geom::Vec3 corner{pos[0] - 0.5 * (ux[0] + uy[0]), pos[1] - 0.5 * (ux[1] + uy[1]), 0.0};
    const geom::Vec3 cx{corner[0] + ux[0], corner[1] + ux[1], 0.0};
    const geom::Vec3 cy{corner[0] + uy[0], corner[1] + uy[1], 0.0};
    world.push_back({corner, ux, -0.8, z1, rcs, 3.0});
    world.push_back({corner, uy, -0.8, z1, rcs, 3.0});
    world.push_back({cy, ux, -0.8, z1, rcs, 3.0});
    world.push_back({cx, uy, -0.8, z1, rcs, 3.0});
  }
  return world;
}

}  // namespace

SynthResult generate(const SynthConfig& cfg, uint64_t seed) {
  if (cfg.n_frames < 2) throw BadInput("synth: n_frames must be >= 2");
  if (cfg.points_per_frame < 1) throw BadInput("synth: degenerate config (zero points)");
  Rng rng(seed);

  SynthResult out;
  const Ride ride = make_ride(cfg, rng);
  const std::vector<Surface> world = make_world(cfg, ride, rng);
  if (world.empty()) throw BadInput("synth: degenerate config (empty world)");

  const double fov = cfg.fov_half_angle_deg * M_PI / 180.0;
  const int n_outliers =
      static_cast<int>(std::lround(cfg.outlier_rate * static_cast<double>(cfg.points_per_frame)));
  const int n_surface = cfg.points_per_frame - n_outliers;

  for (int t = 0; t < cfg.n_frames; ++t) {
    const geom::Pose& pose = ride.poses[static_cast<size_t>(t)];
    const geom::Pose inv = geom::pose_inverse(pose);
    const geom::Vec3 v_sensor = geom::quat_rotate(inv.q, ride.velocities[static_cast<size_t>(t)]);

    dataio::Frame frame;
    frame.id = t;
    frame.gt_pose = pose;

    int accepted = 0;
    const int max_attempts = 60 * cfg.points_per_frame;
    for (int attempt = 0; attempt < max_attempts && accepted < n_surface; ++attempt) {
      const Surface& s = world[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(world.size()) - 1))];
      const double u = rng.uniform(0.0, 1.0);
      const double z = rng.uniform(s.z0, s.z1);
      const geom::Vec3 pw{s.origin[0] + u * s.edge_u[0], s.origin[1] + u * s.edge_u[1], z};
      const geom::Vec3 rel{pw[0] - pose.t[0], pw[1] - pose.t[1], pw[2] - pose.t[2]};
      const geom::Vec3 ps = geom::quat_rotate(inv.q, rel);
      const double range = std::sqrt(ps[0] * ps[0] + ps[1] * ps[1] + ps[2] * ps[2]);
      if (range < 1.0 || range > cfg.max_range) continue;
      if (std::abs(std::atan2(ps[1], ps[0])) > fov) continue;
      if (ps[2] < cfg.height_min || ps[2] > cfg.height_max) continue;

      const geom::Vec3 ray{ps[0] / range, ps[1] / range, ps[2] / range};
      const double rrv = -(v_sensor[0] * ray[0] + v_sensor[1] * ray[1] + v_sensor[2] * ray[2]);

      dataio::RadarPoint p;
      p.x = static_cast<float>(ps[0] + rng.normal(0.0, cfg.noise_sigma));
      p.y = static_cast<float>(ps[1] + rng.normal(0.0, cfg.noise_sigma));
      p.z = static_cast<float>(ps[2] + rng.normal(0.0, cfg.noise_sigma));
      p.rcs = static_cast<float>(rng.normal(s.rcs_mean, s.rcs_sigma));
      p.rrv = static_cast<float>(rrv);
      frame.points.push_back(p);
      ++accepted;
    }
    if (frame.points.empty()) throw NumericError("synth: frame with zero visible points");

    for (int o = 0; o < n_outliers; ++o) {
      const double az = rng.uniform(-fov, fov);
      const double r = rng.uniform(1.0, cfg.max_range);
      dataio::RadarPoint p;
      p.x = static_cast<float>(r * std::cos(az));
      p.y = static_cast<float>(r * std::sin(az));
      p.z = static_cast<float>(rng.uniform(cfg.height_min, cfg.height_max));
      p.rcs = static_cast<float>(rng.uniform(-10.0, 30.0));
      p.rrv = static_cast<float>(rng.uniform(-25.0, 25.0));
      frame.points.push_back(p);
    }

    std::shuffle(frame.points.begin(), frame.points.end(), rng.engine());
    out.frames.push_back(std::move(frame));
  }

  std::vector<geom::Pose> poses;
  poses.reserve(ride.poses.size());
  for (const geom::Pose& p : ride.poses) poses.push_back(p);
  out.gt = geom::trajectory_from_absolutes(std::move(poses));
  return out;
}

void write_sequence(const std::string& dir, const SynthResult& result, const SynthConfig& cfg,
                    const std::string& id, bool binary_frames) {
  fs::create_directories(fs::path(dir) / "frames");
  dataio::SequenceManifest m;
  m.id = id;
  m.pose_file = "poses.txt";
  m.fov_half_angle_deg = cfg.fov_half_angle_deg;
  m.height_min = cfg.height_min;
  m.height_max = cfg.height_max;

  for (size_t i = 0; i < result.frames.size(); ++i) {
    std::ostringstream name;
    name << "frames/" << std::setw(6) << std::setfill('0') << i
         << (binary_frames ? ".rfrm" : ".csv");
    const std::string rel = name.str();
    if (binary_frames)
      dataio::write_frame_bin((fs::path(dir) / rel).string(), result.frames[i]);
    else
      dataio::write_frame_csv((fs::path(dir) / rel).string(), result.frames[i]);
    m.frame_files.push_back(rel);
  }
  geom::write_pose_file((fs::path(dir) / m.pose_file).string(), result.gt);
  dataio::write_manifest((fs::path(dir) / "manifest.toml").string(), m);
}

}  // namespace radon::synth
