#include "radon/pointops.hpp"

#include <algorithm>
#include <cmath>

#include "radon/errors.hpp"
#include "radon/kernels.hpp"
#include "radon/nn.hpp"

namespace radon::pointops {

namespace {

double sqdist(const double* a, const double* b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

int64_t seed_index(const ad::Tensor& coords, FpsSeed seed) {
  if (seed == FpsSeed::kFirstIndex) return 0;
  int64_t best = 0;
  for (int64_t i = 1; i < coords.dim(0); ++i) {
    const double* p = coords.data() + i * 3;
    const double* q = coords.data() + best * 3;
    if (std::lexicographical_compare(p, p + 3, q, q + 3)) best = i;
  }
  return best;
}

template <bool Parallel>
std::vector<int64_t> fps_impl(const ad::Tensor& coords, int64_t m, FpsSeed seed) {
  const int64_t n = coords.dim(0);
  if (coords.rank() != 2 || coords.dim(1) != 3) throw ShapeError("fps: coords must be Nx3");
  if (m < 1 || m > n) throw BadInput("fps: m out of range");

  std::vector<int64_t> out;
  out.reserve(static_cast<size_t>(m));
  std::vector<double> mind(static_cast<size_t>(n), std::numeric_limits<double>::infinity());

  int64_t cur = seed_index(coords, seed);
  out.push_back(cur);
  for (int64_t step = 1; step < m; ++step) {
    const double* cp = coords.data() + cur * 3;
#pragma omp parallel for schedule(static) if (Parallel && n > 256)
    for (int64_t i = 0; i < n; ++i) {
      const double d = sqdist(coords.data() + i * 3, cp);
      if (d < mind[static_cast<size_t>(i)]) mind[static_cast<size_t>(i)] = d;
    }
    // argmax with lowest-index tie rule; serial scan keeps it deterministic
    int64_t best = -1;
    double bestd = -1.0;
    for (int64_t i = 0; i < n; ++i) {
      const double d = mind[static_cast<size_t>(i)];
      if (d > bestd) {
        bestd = d;
        best = i;
      }
    }
    cur = best;
    out.push_back(cur);
  }
  return out;
}

struct Cand {
  double d2;
  int64_t idx;
  bool operator<(const Cand& o) const { return d2 < o.d2 || (d2 == o.d2 && idx < o.idx); }
};

void ball_one(const double* center, const ad::Tensor& coords, double radius, int k,
              int64_t* out_idx, uint8_t* out_fallback) {
  const int64_t n = coords.dim(0);
  const double r2 = radius * radius;
  std::vector<Cand> in;
  Cand nearest{std::numeric_limits<double>::infinity(), -1};
  for (int64_t i = 0; i < n; ++i) {
    const double d2 = sqdist(coords.data() + i * 3, center);
    if (d2 <= r2) in.push_back({d2, i});
    if (Cand{d2, i} < nearest) nearest = {d2, i};
  }
  *out_fallback = in.empty() ? 1 : 0;
  if (in.empty()) {
    for (int j = 0; j < k; ++j) out_idx[j] = nearest.idx;
    return;
  }
  std::sort(in.begin(), in.end());
  for (int j = 0; j < k; ++j)
    out_idx[j] = j < static_cast<int>(in.size()) ? in[static_cast<size_t>(j)].idx : in[0].idx;
}

template <bool Parallel>
GroupIndex ball_group_impl(const std::vector<int64_t>& anchors, const ad::Tensor& coords,
                           double radius, int k) {
  if (coords.dim(0) < 1) throw BadInput("ball_query: empty cloud");
  if (radius <= 0 || k < 1) throw BadInput("ball_query: radius and k must be positive");
  GroupIndex g;
  const int64_t m = static_cast<int64_t>(anchors.size());
  g.idx.resize(static_cast<size_t>(m * k));
  g.fallback.resize(static_cast<size_t>(m));
#pragma omp parallel for schedule(static) if (Parallel && m > 8)
  for (int64_t a = 0; a < m; ++a) {
    const double* c = coords.data() + anchors[static_cast<size_t>(a)] * 3;
    ball_one(c, coords, radius, k, g.idx.data() + a * k, g.fallback.data() + a);
  }
  return g;
}

template <bool Parallel>
std::vector<int64_t> knn_impl(const ad::Tensor& query, const ad::Tensor& target, int k) {
  const int64_t nq = query.dim(0), nt = target.dim(0);
  if (nt < 1) throw BadInput("knn: empty target");
  if (k < 1 || k > nt) throw BadInput("knn: k out of range");
  std::vector<int64_t> out(static_cast<size_t>(nq * k));
#pragma omp parallel for schedule(static) if (Parallel && nq > 8)
  for (int64_t q = 0; q < nq; ++q) {
    const double* qp = query.data() + q * 3;
    std::vector<Cand> cands(static_cast<size_t>(nt));
    for (int64_t i = 0; i < nt; ++i) cands[static_cast<size_t>(i)] = {sqdist(target.data() + i * 3, qp), i};
    std::partial_sort(cands.begin(), cands.begin() + k, cands.end());
    for (int j = 0; j < k; ++j) out[static_cast<size_t>(q * k + j)] = cands[static_cast<size_t>(j)].idx;
  }
  return out;
}

uint64_t fnv1a(const void* data, size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::vector<int64_t> fps_serial(const ad::Tensor& coords, int64_t m, FpsSeed seed) {
  return fps_impl<false>(coords, m, seed);
}
std::vector<int64_t> fps_parallel(const ad::Tensor& coords, int64_t m, FpsSeed seed) {
  return fps_impl<true>(coords, m, seed);
}
std::vector<int64_t> fps(const ad::Tensor& coords, int64_t m, FpsSeed seed) {
  return kern::parallel_enabled() ? fps_parallel(coords, m, seed) : fps_serial(coords, m, seed);
}

BallQueryResult ball_query(const std::array<double, 3>& center, const ad::Tensor& coords,
                           double radius, int k) {
  if (coords.dim(0) < 1) throw BadInput("ball_query: empty cloud");
  if (radius <= 0 || k < 1) throw BadInput("ball_query: radius and k must be positive");
  BallQueryResult r;
  r.idx.resize(static_cast<size_t>(k));
  uint8_t fb = 0;
  ball_one(center.data(), coords, radius, k, r.idx.data(), &fb);
  r.fallback = fb != 0;
  return r;
}

GroupIndex ball_group_serial(const std::vector<int64_t>& anchors, const ad::Tensor& coords,
                             double radius, int k) {
  return ball_group_impl<false>(anchors, coords, radius, k);
}
GroupIndex ball_group_parallel(const std::vector<int64_t>& anchors, const ad::Tensor& coords,
                               double radius, int k) {
  return ball_group_impl<true>(anchors, coords, radius, k);
}
GroupIndex ball_group(const std::vector<int64_t>& anchors, const ad::Tensor& coords, double radius,
                      int k) {
  return kern::parallel_enabled() ? ball_group_parallel(anchors, coords, radius, k)
                                  : ball_group_serial(anchors, coords, radius, k);
}

std::vector<int64_t> knn_serial(const ad::Tensor& query, const ad::Tensor& target, int k) {
  return knn_impl<false>(query, target, k);
}
std::vector<int64_t> knn_parallel(const ad::Tensor& query, const ad::Tensor& target, int k) {
  return knn_impl<true>(query, target, k);
}
std::vector<int64_t> knn(const ad::Tensor& query, const ad::Tensor& target, int k) {
  return kern::parallel_enabled() ? knn_parallel(query, target, k) : knn_serial(query, target, k);
}

// ---- backbone ----

void register_backbone_params(ad::ParamStore& store, const BackboneConfig& cfg, Rng& rng) {
  const int64_t c = cfg.channels;
  nn::register_mlp(store, "backbone/sa1", 5, c, c, rng);
  nn::register_mlp(store, "backbone/sa2", 5 + c, c, c, rng);
  ad::Tensor rcs_stats({2});
  rcs_stats[1] = 1.0;  // (mean, std)
  ad::Tensor rrv_stats({2});
  rrv_stats[1] = 1.0;
  store.create("backbone/rcs_stats", std::move(rcs_stats), /*trainable=*/false);
  store.create("backbone/rrv_stats", std::move(rrv_stats), /*trainable=*/false);
}

EncodedCloud encode_backbone(ad::Tape& tape, ad::ParamStore& store, const dataio::Frame& frame,
                             const BackboneConfig& cfg) {
  const int64_t n_in = static_cast<int64_t>(frame.points.size());
  if (n_in < 8) throw NumericError("encode_backbone: frame has fewer than 8 points");
  const int64_t n = cfg.n_points;
  const int k = cfg.k;

  ad::Tensor raw({n_in, 3});
  for (int64_t i = 0; i < n_in; ++i) {
    raw.at(i, 0) = frame.points[static_cast<size_t>(i)].x;
    raw.at(i, 1) = frame.points[static_cast<size_t>(i)].y;
    raw.at(i, 2) = frame.points[static_cast<size_t>(i)].z;
  }

  EncodedCloud out;
  if (n_in >= n) {
    out.point_indices = fps(raw, n, FpsSeed::kLexicographicMin);
  } else {
    out.point_indices.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n_in; ++i) out.point_indices[static_cast<size_t>(i)] = i;
    // content-seeded resample keeps duplicate frames bit-identical
    Rng resample(fnv1a(frame.points.data(), frame.points.size() * sizeof(dataio::RadarPoint)));
    for (int64_t i = n_in; i < n; ++i)
      out.point_indices[static_cast<size_t>(i)] = resample.uniform_int(0, n_in - 1);
  }

  const ad::Tensor& rcs_stats = store.at("backbone/rcs_stats").value;
  const ad::Tensor& rrv_stats = store.at("backbone/rrv_stats").value;
  const double rcs_mu = rcs_stats[0], rcs_sd = std::max(rcs_stats[1], 1e-6);
  const double rrv_mu = rrv_stats[0], rrv_sd = std::max(rrv_stats[1], 1e-6);

  ad::Tensor coords({n, 3});
  ad::Tensor attr({n, 2});  // standardized (rcs, rrv)
  for (int64_t i = 0; i < n; ++i) {
    const dataio::RadarPoint& p = frame.points[static_cast<size_t>(out.point_indices[static_cast<size_t>(i)])];
    coords.at(i, 0) = p.x;
    coords.at(i, 1) = p.y;
    coords.at(i, 2) = p.z;
    attr.at(i, 0) = (p.rcs - rcs_mu) / rcs_sd;
    attr.at(i, 1) = (p.rrv - rrv_mu) / rrv_sd;
  }

  std::vector<int64_t> all(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;

  // Level 1: grouped (rel xyz, rcs, rrv) -> MLP -> max-pool. The group
  // input is parameter-independent, so it enters the tape as a constant.
  const GroupIndex g1 = ball_group(all, coords, cfg.radius1, k);
  ad::Tensor in1({n * k, 5});
  for (int64_t a = 0; a < n; ++a)
    for (int j = 0; j < k; ++j) {
      const int64_t src = g1.idx[static_cast<size_t>(a * k + j)];
      const int64_t r = a * k + j;
      in1.at(r, 0) = coords.at(src, 0) - coords.at(a, 0);
      in1.at(r, 1) = coords.at(src, 1) - coords.at(a, 1);
      in1.at(r, 2) = coords.at(src, 2) - coords.at(a, 2);
      in1.at(r, 3) = attr.at(src, 0);
      in1.at(r, 4) = attr.at(src, 1);
    }
  ad::Value h1 = nn::mlp(tape, store, "backbone/sa1", tape.constant(std::move(in1)), true);
  ad::Value f1 = tape.reduce_max(tape.reshape(h1, {n, k, cfg.channels}), 1);

  // Level 2: wider radius, neighbor feature appended.
  const GroupIndex g2 = ball_group(all, coords, cfg.radius2, k);
  ad::Tensor in2c({n * k, 5});
  std::vector<int64_t> gather2(static_cast<size_t>(n * k));
  for (int64_t a = 0; a < n; ++a)
    for (int j = 0; j < k; ++j) {
      const int64_t src = g2.idx[static_cast<size_t>(a * k + j)];
      const int64_t r = a * k + j;
      gather2[static_cast<size_t>(r)] = src;
      in2c.at(r, 0) = coords.at(src, 0) - coords.at(a, 0);
      in2c.at(r, 1) = coords.at(src, 1) - coords.at(a, 1);
      in2c.at(r, 2) = coords.at(src, 2) - coords.at(a, 2);
      in2c.at(r, 3) = attr.at(src, 0);
      in2c.at(r, 4) = attr.at(src, 1);
    }
  ad::Value in2 = tape.concat({tape.constant(std::move(in2c)), tape.gather_rows(f1, gather2)}, 1);
  ad::Value h2 = nn::mlp(tape, store, "backbone/sa2", in2, true);
  ad::Value f2 = tape.reduce_max(tape.reshape(h2, {n, k, cfg.channels}), 1);

  out.coords = tape.constant(std::move(coords));
  out.feats = f2;
  return out;
}

}  // namespace radon::pointops
