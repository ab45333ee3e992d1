#include "radon/plot.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

#include "radon/errors.hpp"

namespace radon::harness {

void plot_trajectories_svg(const std::string& path, const std::vector<NamedTrajectory>& trajs) {
  if (trajs.empty()) throw BadInput("plot: no trajectories");
  for (const NamedTrajectory& nt : trajs)
    if (!nt.traj || nt.traj->poses.empty()) throw BadInput("plot: empty trajectory");

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const NamedTrajectory& nt : trajs)
    for (const geom::Pose& p : nt.traj->poses) {
      xmin = std::min(xmin, p.t[0]);
      xmax = std::max(xmax, p.t[0]);
      ymin = std::min(ymin, p.t[1]);
      ymax = std::max(ymax, p.t[1]);
    }
  const double span = std::max({xmax - xmin, ymax - ymin, 1.0});
  const double w = 820.0, margin = 40.0;
  const double scale = (w - 2 * margin) / span;
  auto sx = [&](double x) { return margin + (x - xmin) * scale; };
  auto sy = [&](double y) { return w - margin - (y - ymin) * scale; };

  static const char* kColors[] = {"#111111", "#d62728", "#1f77b4", "#2ca02c", "#9467bd"};

  std::ofstream os(path);
  if (!os) throw BadInput("plot: cannot open for write: " + path);
  os << std::setprecision(8);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << w
     << "\" viewBox=\"0 0 " << w << " " << w << "\">\n";
  os << "  <rect width=\"" << w << "\" height=\"" << w << "\" fill=\"white\"/>\n";
  for (size_t i = 0; i < trajs.size(); ++i) {
    const char* color = kColors[i % 5];
    os << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const geom::Pose& p : trajs[i].traj->poses) os << sx(p.t[0]) << ',' << sy(p.t[1]) << ' ';
    os << "\"/>\n";
    os << "  <text x=\"" << margin << "\" y=\"" << margin / 2.0 + 14.0 * static_cast<double>(i)
       << "\" fill=\"" << color << "\" font-size=\"12\">" << trajs[i].name << "</text>\n";
  }
  os << "</svg>\n";
  if (!os) throw BadInput("plot: write failed: " + path);
}

void write_per_length_csv(const std::string& path, const EvalReport& report) {
  std::ofstream os(path);
  if (!os) throw BadInput("plot: cannot open for write: " + path);
  os << "length_m,t_rel,r_rel\n" << std::setprecision(12);
  for (size_t i = 0; i < report.lengths.size(); ++i) {
    double ts = 0, rs = 0;
    for (const SequenceEval& s : report.sequences) {
      ts += s.rpe.t_rel_per_length[i];
      rs += s.rpe.r_rel_per_length[i];
    }
    const double n = static_cast<double>(report.sequences.size());
    os << report.lengths[i] << ',' << ts / n << ',' << rs / n << '\n';
  }
}

}  // namespace radon::harness
