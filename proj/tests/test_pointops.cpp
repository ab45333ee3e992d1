#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "radon/errors.hpp"
#include "radon/pointops.hpp"
#include "radon/rng.hpp"

using namespace radon;
using ad::Tensor;

namespace {

Tensor random_cloud(int64_t n, Rng& rng, double extent = 30.0) {
  Tensor t({n, 3});
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-extent, extent);
  return t;
}

double sqd(const Tensor& c, int64_t a, int64_t b) {
  double s = 0;
  for (int64_t d = 0; d < 3; ++d) {
    const double diff = c.at(a, d) - c.at(b, d);
    s += diff * diff;
  }
  return s;
}

// Exhaustive greedy max-min selection, written independently of the library path.
std::vector<int64_t> fps_oracle(const Tensor& c, int64_t m, int64_t seed_idx) {
  std::vector<int64_t> chosen{seed_idx};
  while (static_cast<int64_t>(chosen.size()) < m) {
    int64_t best = -1;
    double best_d = -1;
    for (int64_t i = 0; i < c.dim(0); ++i) {
      double nearest = 1e300;
      for (int64_t s : chosen) nearest = std::min(nearest, sqd(c, i, s));
      if (nearest > best_d) {
        best_d = nearest;
        best = i;
      }
    }
    chosen.push_back(best);
  }
  return chosen;
}

dataio::Frame frame_from(const Tensor& coords, Rng& rng) {
  dataio::Frame f;
  for (int64_t i = 0; i < coords.dim(0); ++i) {
    dataio::RadarPoint p;
    p.x = static_cast<float>(coords.at(i, 0));
    p.y = static_cast<float>(coords.at(i, 1));
    p.z = static_cast<float>(coords.at(i, 2));
    p.rcs = static_cast<float>(rng.normal(8, 4));
    p.rrv = static_cast<float>(rng.normal(0, 5));
    f.points.push_back(p);
  }
  return f;
}

}  // namespace

TEST_CASE("fps selects extremes on a collinear cloud") {
  Tensor c({10, 3});
  for (int64_t i = 0; i < 10; ++i) c.at(i, 0) = static_cast<double>(i);
  const auto idx = pointops::fps(c, 2, pointops::FpsSeed::kFirstIndex);
  REQUIRE(idx.size() == 2);
  CHECK(idx[0] == 0);
  CHECK(idx[1] == 9);
}

TEST_CASE("fps with m = N covers all points") {
  Rng rng(3);
  const Tensor c = random_cloud(17, rng);
  auto idx = pointops::fps(c, 17);
  std::sort(idx.begin(), idx.end());
  for (int64_t i = 0; i < 17; ++i) CHECK(idx[static_cast<size_t>(i)] == i);
}

TEST_CASE("fps rejects m > N") {
  Rng rng(4);
  const Tensor c = random_cloud(5, rng);
  CHECK_THROWS_AS(pointops::fps(c, 6), BadInput);
}

TEST_CASE("fps matches the greedy oracle on random clouds") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t n = 16 + rng.uniform_int(0, 48);
    const Tensor c = random_cloud(n, rng);
    const int64_t m = 4 + rng.uniform_int(0, n / 2 - 4);
    const auto got = pointops::fps(c, m, pointops::FpsSeed::kFirstIndex);
    const auto want = fps_oracle(c, m, 0);
    CHECK(got == want);
  }
}

TEST_CASE("fps serial and parallel agree") {
  Rng rng(6);
  const Tensor c = random_cloud(300, rng);
  CHECK(pointops::fps_serial(c, 64, pointops::FpsSeed::kLexicographicMin) ==
        pointops::fps_parallel(c, 64, pointops::FpsSeed::kLexicographicMin));
}

TEST_CASE("ball query returns the coincident point first") {
  Rng rng(7);
  Tensor c = random_cloud(20, rng);
  c.at(4, 0) = 1.0;
  c.at(4, 1) = 2.0;
  c.at(4, 2) = 3.0;
  const auto r = pointops::ball_query({1.0, 2.0, 3.0}, c, 0.1, 4);
  CHECK(r.idx[0] == 4);
}

TEST_CASE("ball query falls back to the global nearest when empty") {
  Tensor c({3, 3});
  c.at(0, 0) = 100;
  c.at(1, 0) = 50;
  c.at(2, 0) = 80;
  const auto r = pointops::ball_query({0, 0, 0}, c, 1.0, 3);
  CHECK(r.fallback);
  for (int j = 0; j < 3; ++j) CHECK(r.idx[static_cast<size_t>(j)] == 1);
}

TEST_CASE("ball query matches an exhaustive distance sort") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor c = random_cloud(64, rng, 10.0);
    const std::array<double, 3> center{rng.uniform(-10, 10), rng.uniform(-10, 10),
                                       rng.uniform(-10, 10)};
    const double radius = rng.uniform(3.0, 12.0);
    const int k = 6;
    const auto got = pointops::ball_query(center, c, radius, k);

    std::vector<std::pair<double, int64_t>> all;
    for (int64_t i = 0; i < 64; ++i) {
      double s = 0;
      for (int64_t d = 0; d < 3; ++d) {
        const double diff = c.at(i, d) - center[static_cast<size_t>(d)];
        s += diff * diff;
      }
      if (s <= radius * radius) all.emplace_back(s, i);
    }
    std::sort(all.begin(), all.end());
    if (all.empty()) {
      CHECK(got.fallback);
      continue;
    }
    for (int j = 0; j < k; ++j) {
      const int64_t want =
          j < static_cast<int>(all.size()) ? all[static_cast<size_t>(j)].second : all[0].second;
      CHECK(got.idx[static_cast<size_t>(j)] == want);
    }
  }
}

TEST_CASE("knn finds self when query equals target") {
  Rng rng(9);
  const Tensor c = random_cloud(30, rng);
  const auto idx = pointops::knn(c, c, 1);
  for (int64_t i = 0; i < 30; ++i) CHECK(idx[static_cast<size_t>(i)] == i);
}

TEST_CASE("knn never crosses well-separated clusters") {
  Rng rng(10);
  Tensor c({40, 3});
  for (int64_t i = 0; i < 40; ++i) {
    c.at(i, 0) = rng.uniform(-1, 1) + (i < 20 ? 0.0 : 1000.0);
    c.at(i, 1) = rng.uniform(-1, 1);
    c.at(i, 2) = rng.uniform(-1, 1);
  }
  const auto idx = pointops::knn(c, c, 8);
  for (int64_t i = 0; i < 40; ++i)
    for (int j = 0; j < 8; ++j)
      CHECK((idx[static_cast<size_t>(i * 8 + j)] < 20) == (i < 20));
}

TEST_CASE("knn matches an exhaustive sort oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor q = random_cloud(40, rng);
    const Tensor t = random_cloud(128, rng);
    const int k = 8;
    const auto got = pointops::knn(q, t, k);
    for (int64_t i = 0; i < 40; ++i) {
      std::vector<std::pair<double, int64_t>> all;
      for (int64_t j = 0; j < 128; ++j) {
        double s = 0;
        for (int64_t d = 0; d < 3; ++d) {
          const double diff = t.at(j, d) - q.at(i, d);
          s += diff * diff;
        }
        all.emplace_back(s, j);
      }
      std::sort(all.begin(), all.end());
      for (int j = 0; j < k; ++j)
        CHECK(got[static_cast<size_t>(i * k + j)] == all[static_cast<size_t>(j)].second);
    }
  }
}

TEST_CASE("knn serial and parallel agree") {
  Rng rng(12);
  const Tensor q = random_cloud(100, rng);
  const Tensor t = random_cloud(100, rng);
  CHECK(pointops::knn_serial(q, t, 8) == pointops::knn_parallel(q, t, 8));
}

TEST_CASE("backbone emits exactly N points with C channels") {
  Rng rng(13);
  ad::ParamStore store;
  pointops::BackboneConfig cfg;
  cfg.n_points = 64;
  cfg.channels = 16;
  cfg.k = 8;
  pointops::register_backbone_params(store, cfg, rng);

  const Tensor c = random_cloud(150, rng, 20.0);
  const dataio::Frame f = frame_from(c, rng);
  ad::Tape tape;
  const auto enc = pointops::encode_backbone(tape, store, f, cfg);
  CHECK(enc.coords.dim(0) == 64);
  CHECK(enc.coords.dim(1) == 3);
  CHECK(enc.feats.dim(0) == 64);
  CHECK(enc.feats.dim(1) == 16);
  CHECK(enc.feats.val().all_finite());
}

TEST_CASE("backbone resamples small frames with replacement") {
  Rng rng(14);
  ad::ParamStore store;
  pointops::BackboneConfig cfg;
  cfg.n_points = 64;
  cfg.channels = 16;
  cfg.k = 8;
  pointops::register_backbone_params(store, cfg, rng);

  const Tensor c = random_cloud(20, rng, 10.0);
  const dataio::Frame f = frame_from(c, rng);
  ad::Tape tape;
  const auto enc = pointops::encode_backbone(tape, store, f, cfg);
  CHECK(enc.coords.dim(0) == 64);
  CHECK(enc.point_indices.size() == 64);
  for (int64_t i : enc.point_indices) CHECK(i < 20);
}

TEST_CASE("backbone rejects frames below 8 points") {
  Rng rng(15);
  ad::ParamStore store;
  pointops::BackboneConfig cfg;
  pointops::register_backbone_params(store, cfg, rng);
  const Tensor c = random_cloud(5, rng);
  const dataio::Frame f = frame_from(c, rng);
  ad::Tape tape;
  CHECK_THROWS_AS(pointops::encode_backbone(tape, store, f, cfg), NumericError);
}

TEST_CASE("duplicate frames encode identically") {
  Rng rng(16);
  ad::ParamStore store;
  pointops::BackboneConfig cfg;
  cfg.n_points = 48;
  cfg.channels = 16;
  cfg.k = 8;
  pointops::register_backbone_params(store, cfg, rng);
  const Tensor c = random_cloud(30, rng, 15.0);  // < N exercises the resample path
  const dataio::Frame f = frame_from(c, rng);

  ad::Tape t1, t2;
  const auto e1 = pointops::encode_backbone(t1, store, f, cfg);
  const auto e2 = pointops::encode_backbone(t2, store, f, cfg);
  REQUIRE(e1.point_indices == e2.point_indices);
  for (int64_t i = 0; i < e1.feats.size(); ++i) CHECK(e1.feats.val()[i] == e2.feats.val()[i]);
}

TEST_CASE("backbone is permutation invariant with the lexicographic seed") {
  Rng rng(17);
  ad::ParamStore store;
  pointops::BackboneConfig cfg;
  cfg.n_points = 32;
  cfg.channels = 16;
  cfg.k = 8;
  pointops::register_backbone_params(store, cfg, rng);

  const Tensor c = random_cloud(80, rng, 15.0);
  dataio::Frame f = frame_from(c, rng);
  dataio::Frame shuffled = f;
  std::shuffle(shuffled.points.begin(), shuffled.points.end(), rng.engine());

  ad::Tape t1, t2;
  const auto e1 = pointops::encode_backbone(t1, store, f, cfg);
  const auto e2 = pointops::encode_backbone(t2, store, shuffled, cfg);
  for (int64_t i = 0; i < e1.feats.size(); ++i) CHECK(e1.feats.val()[i] == e2.feats.val()[i]);
  for (int64_t i = 0; i < e1.coords.size(); ++i) CHECK(e1.coords.val()[i] == e2.coords.val()[i]);
}

TEST_CASE("rigidly transformed frame keeps grouping and rotates rel-coords") {
  Rng rng(18);
  ad::ParamStore store;
  pointops::BackboneConfig cfg;
  cfg.n_points = 32;
  cfg.channels = 16;
  cfg.k = 8;
  pointops::register_backbone_params(store, cfg, rng);

  const Tensor c = random_cloud(60, rng, 12.0);
  const dataio::Frame f = frame_from(c, rng);

  const geom::Quat rot = geom::quat_from_axis_angle({0, 0, 1}, 0.05);
  const geom::Vec3 shift{2.0, -1.0, 0.5};
  dataio::Frame moved = f;
  for (auto& p : moved.points) {
    const geom::Vec3 v = geom::quat_rotate(rot, {p.x, p.y, p.z});
    p.x = static_cast<float>(v[0] + shift[0]);
    p.y = static_cast<float>(v[1] + shift[1]);
    p.z = static_cast<float>(v[2] + shift[2]);
  }

  // precondition for comparable selections: the seed point survives the move
  auto lexmin = [](const dataio::Frame& fr) {
    size_t best = 0;
    for (size_t i = 1; i < fr.points.size(); ++i) {
      const auto& p = fr.points[i];
      const auto& q = fr.points[best];
      if (std::tie(p.x, p.y, p.z) < std::tie(q.x, q.y, q.z)) best = i;
    }
    return best;
  };
  REQUIRE(lexmin(f) == lexmin(moved));

  ad::Tape t1, t2;
  const auto e1 = pointops::encode_backbone(t1, store, f, cfg);
  const auto e2 = pointops::encode_backbone(t2, store, moved, cfg);
  REQUIRE(e1.point_indices == e2.point_indices);

  // coords transform rigidly (float32 storage bounds the error)
  for (int64_t i = 0; i < e1.coords.dim(0); ++i) {
    const geom::Vec3 v = geom::quat_rotate(
        rot, {e1.coords.val().at(i, 0), e1.coords.val().at(i, 1), e1.coords.val().at(i, 2)});
    CHECK(e2.coords.val().at(i, 0) == doctest::Approx(v[0] + shift[0]).epsilon(1e-4));
    CHECK(e2.coords.val().at(i, 1) == doctest::Approx(v[1] + shift[1]).epsilon(1e-4));
    CHECK(e2.coords.val().at(i, 2) == doctest::Approx(v[2] + shift[2]).epsilon(1e-4));
  }
}
