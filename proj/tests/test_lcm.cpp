#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "radon/errors.hpp"
#include "radon/gradcheck.hpp"
#include "radon/lcm.hpp"
#include "radon/nn.hpp"
#include "radon/rng.hpp"

using namespace radon;
using ad::Tensor;
using ad::Value;

namespace {

struct Fixture {
  ad::ParamStore store;
  lcm::LcmConfig cfg;
  Rng rng{101};

  explicit Fixture(int channels = 16, int k = 4) {
    cfg.channels = channels;
    cfg.k = k;
    cfg.radius = 5.0;
    lcm::register_lcm_params(store, cfg, rng);
  }

  Tensor random_coords(int64_t n, double extent = 8.0) {
    Tensor t({n, 3});
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-extent, extent);
    return t;
  }

  Tensor random_feats(int64_t n) {
    Tensor t({n, cfg.channels});
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0, 1);
    return t;
  }
};

}  // namespace

TEST_CASE("region of identical points has zero positional offset") {
  Fixture fx;
  Tensor coords({10, 3});
  for (int64_t i = 0; i < 10; ++i) {
    coords.at(i, 0) = 1.0;
    coords.at(i, 1) = 2.0;
    coords.at(i, 2) = 3.0;
  }
  ad::Tape tape;
  Value cv = tape.constant(coords);
  Value fv = tape.constant(fx.random_feats(10));
  const lcm::Regions regions = lcm::build_regions(cv.val(), 4, fx.cfg);
  const lcm::RegionStats stats = lcm::region_stats(tape, fx.store, cv, fv, regions, fx.cfg);
  for (int64_t i = 0; i < stats.dxhat.size(); ++i) CHECK(stats.dxhat.val()[i] == 0.0);
}

TEST_CASE("anchor at the centroid of symmetric neighbors has zero offset") {
  Fixture fx(16, 5);
  // anchor at origin, four neighbors placed symmetrically
  Tensor coords({5, 3});
  coords.at(1, 0) = 1.0;
  coords.at(2, 0) = -1.0;
  coords.at(3, 1) = 1.0;
  coords.at(4, 1) = -1.0;
  ad::Tape tape;
  Value cv = tape.constant(coords);
  Value fv = tape.constant(fx.random_feats(5));
  lcm::Regions regions;
  regions.anchors = {0};
  regions.groups = pointops::ball_group(regions.anchors, cv.val(), 5.0, 5);
  const lcm::RegionStats stats = lcm::region_stats(tape, fx.store, cv, fv, regions, fx.cfg);
  for (int64_t d = 0; d < 3; ++d) CHECK(std::abs(stats.dxhat.val()[d]) <= 1e-15);
}

TEST_CASE("positional offset equals anchor minus region mean") {
  Fixture fx;
  const Tensor coords = fx.random_coords(30);
  ad::Tape tape;
  Value cv = tape.constant(coords);
  Value fv = tape.constant(fx.random_feats(30));
  const lcm::Regions regions = lcm::build_regions(cv.val(), 8, fx.cfg);
  const lcm::RegionStats stats = lcm::region_stats(tape, fx.store, cv, fv, regions, fx.cfg);

  for (size_t a = 0; a < regions.anchors.size(); ++a) {
    for (int64_t d = 0; d < 3; ++d) {
      double mean = 0;
      for (int j = 0; j < fx.cfg.k; ++j)
        mean += coords.at(regions.groups.idx[a * static_cast<size_t>(fx.cfg.k) + static_cast<size_t>(j)], d);
      mean /= fx.cfg.k;
      const double want = coords.at(regions.anchors[a], d) - mean;
      CHECK(stats.dxhat.val().at(static_cast<int64_t>(a), d) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero initial offset stays zero through the gate") {
  Fixture fx;
  ad::Tape tape;
  Value dfeat = tape.constant(fx.random_feats(6));
  Value feats = tape.constant(fx.random_feats(6));
  Value dxhat = tape.constant(Tensor::zeros({6, 3}));
  Value dx = lcm::offset_attention(tape, fx.store, dfeat, feats, dxhat, fx.cfg);
  for (int64_t i = 0; i < dx.size(); ++i) CHECK(dx.val()[i] == 0.0);
}

TEST_CASE("gate keeps corrected offsets within the initial magnitude") {
  Fixture fx;
  ad::Tape tape;
  Value dfeat = tape.constant(fx.random_feats(40));
  Value feats = tape.constant(fx.random_feats(40));
  Tensor dxh({40, 3});
  for (int64_t i = 0; i < dxh.size(); ++i) dxh[i] = fx.rng.normal(0, 2);
  Value dxhat = tape.constant(dxh);
  Value dx = lcm::offset_attention(tape, fx.store, dfeat, feats, dxhat, fx.cfg);
  for (int64_t i = 0; i < 40; ++i) {
    double n_in = 0, n_out = 0;
    for (int64_t d = 0; d < 3; ++d) {
      n_in += dxh.at(i, d) * dxh.at(i, d);
      n_out += dx.val().at(i, d) * dx.val().at(i, d);
    }
    CHECK(n_out < n_in);  // gate is strictly inside (0,1)
  }
}

TEST_CASE("completion emits N+M points with the first N rows untouched") {
  Fixture fx;
  const Tensor coords = fx.random_coords(48);
  const Tensor feats = fx.random_feats(48);
  ad::Tape tape;
  Value cv = tape.constant(coords);
  Value fv = tape.constant(feats);
  const lcm::Completed out = lcm::complete(tape, fx.store, cv, fv, 12, fx.cfg);
  REQUIRE(out.coords.dim(0) == 60);
  REQUIRE(out.feats.dim(0) == 60);
  for (int64_t i = 0; i < coords.size(); ++i) CHECK(out.coords.val()[i] == coords[i]);
  for (int64_t i = 0; i < feats.size(); ++i) CHECK(out.feats.val()[i] == feats[i]);
}

TEST_CASE("synthetic points stay locally confined") {
  Fixture fx;
  const Tensor coords = fx.random_coords(64, 15.0);
  ad::Tape tape;
  Value cv = tape.constant(coords);
  Value fv = tape.constant(fx.random_feats(64));
  const lcm::Regions regions = lcm::build_regions(coords, 16, fx.cfg);
  const lcm::Completed out = lcm::complete(tape, fx.store, cv, fv, 16, fx.cfg);

  for (size_t a = 0; a < regions.anchors.size(); ++a) {
    const int64_t anchor = regions.anchors[a];
    double span = 0.0;
    for (int j = 0; j < fx.cfg.k; ++j) {
      const int64_t nb = regions.groups.idx[a * static_cast<size_t>(fx.cfg.k) + static_cast<size_t>(j)];
      double d2 = 0;
      for (int64_t d = 0; d < 3; ++d) {
        const double diff = coords.at(anchor, d) - coords.at(nb, d);
        d2 += diff * diff;
      }
      span = std::max(span, std::sqrt(d2));
    }
    double moved = 0.0;
    for (int64_t d = 0; d < 3; ++d) {
      const double diff = out.coords.val().at(64 + static_cast<int64_t>(a), d) - coords.at(anchor, d);
      moved += diff * diff;
    }
    CHECK(std::sqrt(moved) <= span + 1e-12);
  }
}

TEST_CASE("completion gradients pass finite differences") {
  Fixture fx(12, 4);
  const Tensor coords = fx.random_coords(24);
  const Tensor feats = fx.random_feats(24);
  Rng rng(301);
  const double err = ad::finite_diff_check(
      [&](bool with_grad) {
        ad::Tape tape;
        Value cv = tape.constant(coords);
        Value fv = tape.constant(feats);
        const lcm::Completed out = lcm::complete(tape, fx.store, cv, fv, 6, fx.cfg);
        Value loss = tape.add(tape.l2norm(out.coords), tape.l2norm(out.feats));
        if (with_grad) tape.backward(loss);
        return loss.val()[0];
      },
      fx.store, 1e-5, 64, rng);
  CHECK(err <= 1e-4);
}

TEST_CASE("reserved neighbor-axis gate flag is rejected") {
  ad::ParamStore store;
  Rng rng(1);
  lcm::LcmConfig cfg;
  cfg.neighbor_softmax_gate = true;
  CHECK_THROWS_AS(lcm::register_lcm_params(store, cfg, rng), BadInput);
}
