#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "radon/geom.hpp"
#include "radon/rng.hpp"

namespace radon::dataio {

/// One radar return. Stored at sensor precision (float32), matching the
/// binary frame format bit for bit.
struct RadarPoint {
  float x = 0, y = 0, z = 0;  // meters, sensor frame
  float rcs = 0;              // dBsm
  float rrv = 0;              // m/s, radial relative velocity
};

struct Frame {
  int64_t id = 0;
  std::vector<RadarPoint> points;
  std::optional<geom::Pose> gt_pose;
};

struct SequenceManifest {
  std::string id;
  std::vector<std::string> frame_files;  // relative to the manifest directory
  std::string pose_file;                 // empty -> no ground truth
  double fov_half_angle_deg = 32.0;
  double height_min = -3.0;
  double height_max = 3.0;
};

// ---- frame files ----
// CSV: header "x,y,z,rcs,rrv", one point per row.
// Binary (.rfrm): magic "RFRM", u32 count, then count x 5 little-endian float32.
Frame read_frame(const std::string& path);
void write_frame_csv(const std::string& path, const Frame& f);
void write_frame_bin(const std::string& path, const Frame& f);

// ---- manifest + sequence ----
SequenceManifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const SequenceManifest& m);
/// Loads frames listed by the manifest at `dir`/manifest.toml and attaches
/// poses when the manifest names a pose file.
std::vector<Frame> load_sequence(const std::string& dir);
SequenceManifest manifest_of(const std::string& dir);

// ---- filtering & augmentation ----
/// Keeps points with z in [height_min, height_max] (closed) and
/// |atan2(y,x)| <= fov half-angle.
Frame filter_points(const Frame& f, double fov_half_angle_deg, double height_min, double height_max);

/// Reverses frame order (re-numbering ids), negating per-point radial
/// velocities; absolute gt poses travel with their frames, so per-pair
/// relative poses invert. Involution up to float round-trip.
std::vector<Frame> augment_flip(const std::vector<Frame>& seq);

/// Gaussian offsets on point coordinates plus a small random rigid
/// perturbation composed onto the gt pose.
void augment_jitter(Frame& f, double sigma_point_m, double sigma_pose_m, double sigma_pose_deg,
                    Rng& rng);

}  // namespace radon::dataio
