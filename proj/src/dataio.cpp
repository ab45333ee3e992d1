#include "radon/dataio.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "radon/config.hpp"
#include "radon/errors.hpp"

namespace fs = std::filesystem;

namespace radon::dataio {

namespace {
constexpr char kFrameMagic[4] = {'R', 'F', 'R', 'M'};

[[noreturn]] void parse_fail(const std::string& path, size_t line, const char* what) {
  std::ostringstream os;
  os << "frame file: " << what << " at " << path << ":" << line;
  throw BadInput(os.str());
}
}  // namespace

Frame read_frame(const std::string& path) {
  Frame f;
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".rfrm") {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw BadInput("frame file: cannot open: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kFrameMagic, 4) != 0)
      throw BadInput("frame file: bad magic: " + path);
    uint32_t count = 0;
    if (!is.read(reinterpret_cast<char*>(&count), 4)) throw BadInput("frame file: truncated count: " + path);
    f.points.resize(count);
    if (count && !is.read(reinterpret_cast<char*>(f.points.data()),
                          static_cast<std::streamsize>(count * sizeof(RadarPoint))))
      throw BadInput("frame file: truncated payload: " + path);
    return f;
  }

  std::ifstream is(path);
  if (!is) throw BadInput("frame file: cannot open: " + path);
  std::string line;
  size_t lineno = 0;
  if (!std::getline(is, line)) parse_fail(path, 1, "missing header");
  ++lineno;
  if (line != "x,y,z,rcs,rrv") parse_fail(path, 1, "bad header");
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    RadarPoint p;
    char comma;
    if (!(ls >> p.x >> comma >> p.y >> comma >> p.z >> comma >> p.rcs >> comma >> p.rrv))
      parse_fail(path, lineno, "malformed row");
    f.points.push_back(p);
  }
  return f;
}

void write_frame_csv(const std::string& path, const Frame& f) {
  std::ofstream os(path);
  if (!os) throw BadInput("frame file: cannot open for write: " + path);
  os << "x,y,z,rcs,rrv\n" << std::setprecision(9);
  for (const RadarPoint& p : f.points)
    os << p.x << ',' << p.y << ',' << p.z << ',' << p.rcs << ',' << p.rrv << '\n';
  if (!os) throw BadInput("frame file: write failed: " + path);
}

void write_frame_bin(const std::string& path, const Frame& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw BadInput("frame file: cannot open for write: " + path);
  os.write(kFrameMagic, 4);
  const uint32_t count = static_cast<uint32_t>(f.points.size());
  os.write(reinterpret_cast<const char*>(&count), 4);
  os.write(reinterpret_cast<const char*>(f.points.data()),
           static_cast<std::streamsize>(f.points.size() * sizeof(RadarPoint)));
  if (!os) throw BadInput("frame file: write failed: " + path);
}

SequenceManifest read_manifest(const std::string& path) {
  const config::KvFile kv = config::KvFile::parse(path);
  SequenceManifest m;
  m.id = kv.get_string("id");
  m.frame_files = kv.get_string_list("frames");
  m.pose_file = kv.get_string_or("pose_file", "");
  m.fov_half_angle_deg = kv.get_double_or("fov_half_angle_deg", 32.0);
  m.height_min = kv.get_double_or("height_min", -3.0);
  m.height_max = kv.get_double_or("height_max", 3.0);
  if (m.frame_files.empty()) throw BadInput("manifest: empty frame list: " + path);
  return m;
}

void write_manifest(const std::string& path, const SequenceManifest& m) {
  std::ofstream os(path);
  if (!os) throw BadInput("manifest: cannot open for write: " + path);
  os << "id = \"" << m.id << "\"\n";
  os << "pose_file = \"" << m.pose_file << "\"\n";
  os << std::setprecision(17);
  os << "fov_half_angle_deg = " << m.fov_half_angle_deg << "\n";
  os << "height_min = " << m.height_min << "\n";
  os << "height_max = " << m.height_max << "\n";
  os << "frames = [";
  for (size_t i = 0; i < m.frame_files.size(); ++i) {
    if (i) os << ", ";
    os << '"' << m.frame_files[i] << '"';
  }
  os << "]\n";
  if (!os) throw BadInput("manifest: write failed: " + path);
}

SequenceManifest manifest_of(const std::string& dir) {
  return read_manifest((fs::path(dir) / "manifest.toml").string());
}

std::vector<Frame> load_sequence(const std::string& dir) {
  const SequenceManifest m = manifest_of(dir);
  std::vector<Frame> frames;
  frames.reserve(m.frame_files.size());
  for (size_t i = 0; i < m.frame_files.size(); ++i) {
    Frame f = read_frame((fs::path(dir) / m.frame_files[i]).string());
    f.id = static_cast<int64_t>(i);
    for (const RadarPoint& p : f.points)
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
        throw BadInput("frame file: non-finite coordinate in " + m.frame_files[i]);
    frames.push_back(std::move(f));
  }

  if (!m.pose_file.empty()) {
    const geom::Trajectory gt = geom::read_pose_file((fs::path(dir) / m.pose_file).string());
    if (gt.size() != frames.size()) {
      std::ostringstream os;
      os << "sequence " << m.id << ": " << frames.size() << " frames but " << gt.size() << " poses";
      throw BadInput(os.str());
    }
    for (size_t i = 0; i < frames.size(); ++i) frames[i].gt_pose = gt.poses[i];
  }
  return frames;
}

Frame filter_points(const Frame& f, double fov_half_angle_deg, double height_min, double height_max) {
  if (!(fov_half_angle_deg > 0.0 && fov_half_angle_deg <= 90.0))
    throw BadInput("filter_points: fov half-angle must be in (0, 90] degrees");
  const double half_rad = fov_half_angle_deg * M_PI / 180.0;
  Frame out;
  out.id = f.id;
  out.gt_pose = f.gt_pose;
  for (const RadarPoint& p : f.points) {
    if (p.z < height_min || p.z > height_max) continue;
    if (std::abs(std::atan2(static_cast<double>(p.y), static_cast<double>(p.x))) > half_rad) continue;
    out.points.push_back(p);
  }
  return out;
}

std::vector<Frame> augment_flip(const std::vector<Frame>& seq) {
  std::vector<Frame> out(seq.rbegin(), seq.rend());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i].id = static_cast<int64_t>(i);
    for (RadarPoint& p : out[i].points) p.rrv = -p.rrv;
  }
  return out;
}

void augment_jitter(Frame& f, double sigma_point_m, double sigma_pose_m, double sigma_pose_deg,
                    Rng& rng) {
  if (sigma_point_m < 0 || sigma_pose_m < 0 || sigma_pose_deg < 0)
    throw BadInput("augment_jitter: negative sigma");
  for (RadarPoint& p : f.points) {
    p.x += static_cast<float>(rng.normal(0.0, sigma_point_m));
    p.y += static_cast<float>(rng.normal(0.0, sigma_point_m));
    p.z += static_cast<float>(rng.normal(0.0, sigma_point_m));
  }
  if (f.gt_pose && (sigma_pose_m > 0 || sigma_pose_deg > 0)) {
    geom::Pose delta;
    delta.t = {rng.normal(0.0, sigma_pose_m), rng.normal(0.0, sigma_pose_m),
               rng.normal(0.0, sigma_pose_m)};
    const double ang = rng.normal(0.0, sigma_pose_deg * M_PI / 180.0);
    const geom::Vec3 axis{rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1)};
    const double an = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
    if (an > 1e-12 && std::abs(ang) > 0.0) delta.q = geom::quat_from_axis_angle(axis, ang);
    f.gt_pose = geom::pose_compose(*f.gt_pose, delta);
  }
}

}  // namespace radon::dataio
