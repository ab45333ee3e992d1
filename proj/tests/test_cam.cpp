#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "radon/cam.hpp"
#include "radon/errors.hpp"
#include "radon/gradcheck.hpp"
#include "radon/rng.hpp"

using namespace radon;
using ad::Tensor;
using ad::Value;

namespace {

struct Fixture {
  ad::ParamStore store;
  cam::CamConfig cfg;
  Rng rng{401};

  explicit Fixture(int channels = 12, int k = 4, int w = 6) {
    cfg.channels = channels;
    cfg.k = k;
    cfg.w_coarse = w;
    cam::register_cam_params(store, cfg, rng);
  }

  Tensor random_coords(int64_t n, double extent = 10.0) {
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

TEST_CASE("normalize_diffs: identical clouds give zero sigma, guarded division") {
  Fixture fx;
  ad::Tape tape;
  const Tensor coords = fx.random_coords(20);
  const Tensor feats = fx.random_feats(20);
  cam::CloudNodes c1{tape.constant(coords), tape.constant(feats)};
  cam::CloudNodes c2{tape.constant(coords), tape.constant(feats)};
  const cam::MatchGroups g = cam::normalize_diffs(tape, c1, c2, fx.cfg);
  CHECK(g.sigma.val()[0] == 0.0);
  for (int64_t i = 0; i < g.diffs.size(); ++i) CHECK(g.diffs.val()[i] == 0.0);
}

TEST_CASE("normalize_diffs: RMS of normalized entries is sigma/(sigma+eps)") {
  Fixture fx;
  ad::Tape tape;
  cam::CloudNodes c1{tape.constant(fx.random_coords(32)), tape.constant(fx.random_feats(32))};
  cam::CloudNodes c2{tape.constant(fx.random_coords(32)), tape.constant(fx.random_feats(32))};
  const cam::MatchGroups g = cam::normalize_diffs(tape, c1, c2, fx.cfg);
  double rms = 0;
  for (int64_t i = 0; i < g.diffs.size(); ++i) rms += g.diffs.val()[i] * g.diffs.val()[i];
  rms = std::sqrt(rms / static_cast<double>(g.diffs.size()));
  CHECK(rms >= 0.999);
  CHECK(rms <= 1.001);
}

TEST_CASE("normalize_diffs: sigma matches a direct two-pass oracle") {
  Fixture fx;
  ad::Tape tape;
  const Tensor c1c = fx.random_coords(24);
  const Tensor c1f = fx.random_feats(24);
  const Tensor c2c = fx.random_coords(24);
  const Tensor c2f = fx.random_feats(24);
  cam::CloudNodes c1{tape.constant(c1c), tape.constant(c1f)};
  cam::CloudNodes c2{tape.constant(c2c), tape.constant(c2f)};
  const cam::MatchGroups g = cam::normalize_diffs(tape, c1, c2, fx.cfg);

  // direct summation over the same neighbor lists
  const int64_t dims = 3 + fx.cfg.channels;
  double acc = 0;
  for (int64_t i = 0; i < 24; ++i)
    for (int j = 0; j < fx.cfg.k; ++j) {
      const int64_t nb = g.nbr[static_cast<size_t>(i * fx.cfg.k + j)];
      for (int64_t d = 0; d < 3; ++d) {
        const double diff = c1c.at(i, d) - c2c.at(nb, d);
        acc += diff * diff;
      }
      for (int64_t d = 0; d < fx.cfg.channels; ++d) {
        const double diff = c1f.at(i, d) - c2f.at(nb, d);
        acc += diff * diff;
      }
    }
  const double sigma = std::sqrt(acc / static_cast<double>(24 * fx.cfg.k * dims));
  CHECK(std::abs(g.sigma.val()[0] - sigma) <= 1e-12);
}

TEST_CASE("resilience_register endpoints reproduce single branches exactly") {
  Fixture fx;
  ad::Tape tape;
  cam::CloudNodes c1{tape.constant(fx.random_coords(16)), tape.constant(fx.random_feats(16))};
  cam::CloudNodes c2{tape.constant(fx.random_coords(16)), tape.constant(fx.random_feats(16))};
  const cam::MatchGroups g = cam::normalize_diffs(tape, c1, c2, fx.cfg);

  Value beta0 = tape.constant(Tensor::scalar(0.0));
  Value beta1 = tape.constant(Tensor::scalar(1.0));
  Value half = tape.constant(Tensor::scalar(0.5));
  Value e0 = cam::resilience_register(tape, fx.store, g, beta0, fx.cfg);
  Value e1 = cam::resilience_register(tape, fx.store, g, beta1, fx.cfg);
  Value eh = cam::resilience_register(tape, fx.store, g, half, fx.cfg);

  // beta=1/2 midpoint identity ties the endpoints to the blended value
  for (int64_t i = 0; i < e0.size(); ++i) {
    CHECK(eh.val()[i] == doctest::Approx(0.5 * (e0.val()[i] + e1.val()[i])).epsilon(1e-12));
  }

  // endpoint bit-exactness: recompute single branches through the same ops
  Value e0b = cam::resilience_register(tape, fx.store, g, tape.constant(Tensor::scalar(0.0)), fx.cfg);
  Value e1b = cam::resilience_register(tape, fx.store, g, tape.constant(Tensor::scalar(1.0)), fx.cfg);
  for (int64_t i = 0; i < e0.size(); ++i) {
    CHECK(e0.val()[i] == e0b.val()[i]);
    CHECK(e1.val()[i] == e1b.val()[i]);
  }
}

TEST_CASE("axis_sort: single point repeats three times") {
  Tensor coords({5, 3});
  const auto seq = cam::axis_sort(coords, {2});
  REQUIRE(seq.size() == 3);
  for (int64_t i : seq) CHECK(i == 2);
}

TEST_CASE("axis_sort matches a stable-sort oracle per axis") {
  Rng rng(31);
  Tensor coords({40, 3});
  for (int64_t i = 0; i < coords.size(); ++i) coords[i] = rng.uniform(-5, 5);
  std::vector<int64_t> nbr{7, 3, 21, 14, 30, 9};
  const auto seq = cam::axis_sort(coords, nbr);
  REQUIRE(seq.size() == 18);
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<int64_t> want = nbr;
    std::stable_sort(want.begin(), want.end(), [&](int64_t a, int64_t b) {
      return coords.at(a, axis) < coords.at(b, axis) ||
             (coords.at(a, axis) == coords.at(b, axis) && a < b);
    });
    for (size_t j = 0; j < nbr.size(); ++j)
      CHECK(seq[static_cast<size_t>(axis) * nbr.size() + j] == want[j]);
  }
}

TEST_CASE("axis_sort is invariant to neighbor list order") {
  Rng rng(33);
  Tensor coords({20, 3});
  for (int64_t i = 0; i < coords.size(); ++i) coords[i] = rng.uniform(-5, 5);
  std::vector<int64_t> nbr{1, 5, 9, 13, 17};
  std::vector<int64_t> perm{13, 1, 17, 5, 9};
  CHECK(cam::axis_sort(coords, nbr) == cam::axis_sort(coords, perm));
}

TEST_CASE("balance maps a constant sequence to a constant sequence") {
  Fixture fx;
  ad::Tape tape;
  Tensor seq({3, 9, fx.cfg.channels});
  Rng rng(35);
  for (int64_t c = 0; c < fx.cfg.channels; ++c) {
    const double v = rng.normal(0, 1);
    for (int64_t b = 0; b < 3; ++b)
      for (int64_t t = 0; t < 9; ++t) seq.at(b, t, c) = v;
  }
  Value out = cam::balance(tape, fx.store, tape.constant(seq), fx.cfg);
  // every step sees the same per-step map except the scan, whose output
  // varies along t; the gate and projections are per-step, so constancy
  // must hold across the batch dimension
  for (int64_t t = 0; t < 9; ++t)
    for (int64_t c = 0; c < fx.cfg.channels; ++c) {
      const double ref = out.val().at(0, t, c);
      for (int64_t b = 1; b < 3; ++b) CHECK(out.val().at(b, t, c) == ref);
    }
}

TEST_CASE("aggregate clamps coincident-neighbor weights") {
  Fixture fx(12, 4, 6);
  ad::Tape tape;
  // two coincident points: distance 0 must clamp to 1/dist_clamp, finite
  Tensor coords({8, 3});
  Rng rng(37);
  for (int64_t i = 0; i < coords.size(); ++i) coords[i] = rng.uniform(-3, 3);
  coords.at(1, 0) = coords.at(0, 0);
  coords.at(1, 1) = coords.at(0, 1);
  coords.at(1, 2) = coords.at(0, 2);
  cam::CloudNodes src{tape.constant(coords), tape.constant(fx.random_feats(8))};
  cam::CloudNodes tgt{tape.constant(fx.random_coords(8)), tape.constant(fx.random_feats(8))};
  Value e = cam::embed_scale(tape, fx.store, src, tgt, fx.cfg);
  CHECK(e.val().all_finite());
}

TEST_CASE("cam_forward emits fine rows then coarse rows") {
  Fixture fx(12, 4, 6);
  ad::Tape tape;
  cam::CloudNodes q1{tape.constant(fx.random_coords(20)), tape.constant(fx.random_feats(20))};
  cam::CloudNodes q2{tape.constant(fx.random_coords(20)), tape.constant(fx.random_feats(20))};
  Value g = cam::cam_forward(tape, fx.store, q1, q2, fx.cfg);
  CHECK(g.dim(0) == 26);  // 20 fine + 6 coarse
  CHECK(g.dim(1) == 12);
  CHECK(g.val().all_finite());
}

TEST_CASE("cam_forward on identical clouds stays finite") {
  Fixture fx(12, 4, 6);
  ad::Tape tape;
  const Tensor coords = fx.random_coords(18);
  const Tensor feats = fx.random_feats(18);
  cam::CloudNodes q1{tape.constant(coords), tape.constant(feats)};
  cam::CloudNodes q2{tape.constant(coords), tape.constant(feats)};
  Value g = cam::cam_forward(tape, fx.store, q1, q2, fx.cfg);
  CHECK(g.val().all_finite());
}

TEST_CASE("cam gradients pass finite differences") {
  Fixture fx(8, 3, 4);
  const Tensor c1 = fx.random_coords(14);
  const Tensor f1 = fx.random_feats(14);
  const Tensor c2 = fx.random_coords(14);
  const Tensor f2 = fx.random_feats(14);
  Rng rng(39);
  const double err = ad::finite_diff_check(
      [&](bool with_grad) {
        ad::Tape tape;
        cam::CloudNodes q1{tape.constant(c1), tape.constant(f1)};
        cam::CloudNodes q2{tape.constant(c2), tape.constant(f2)};
        Value g = cam::cam_forward(tape, fx.store, q1, q2, fx.cfg);
        Value loss = tape.l2norm(g);
        if (with_grad) tape.backward(loss);
        return loss.val()[0];
      },
      fx.store, 1e-5, 64, rng);
  CHECK(err <= 1e-4);
}

TEST_CASE("scan duality holds inside balance") {
  Fixture fx;
  Tensor seq({4, 6, fx.cfg.channels});
  Rng rng(41);
  for (int64_t i = 0; i < seq.size(); ++i) seq[i] = rng.normal(0, 1);

  cam::CamConfig rec = fx.cfg;
  rec.scan_form = ad::ScanForm::kRecursive;
  cam::CamConfig ker = fx.cfg;
  ker.scan_form = ad::ScanForm::kKernel;

  ad::Tape t1, t2;
  Value o1 = cam::balance(t1, fx.store, t1.constant(seq), rec);
  Value o2 = cam::balance(t2, fx.store, t2.constant(seq), ker);
  for (int64_t i = 0; i < o1.size(); ++i) CHECK(std::abs(o1.val()[i] - o2.val()[i]) <= 1e-10);
}

TEST_CASE("oversized coarse scale is rejected") {
  Fixture fx(12, 4, 30);
  ad::Tape tape;
  cam::CloudNodes q1{tape.constant(fx.random_coords(20)), tape.constant(fx.random_feats(20))};
  cam::CloudNodes q2{tape.constant(fx.random_coords(20)), tape.constant(fx.random_feats(20))};
  CHECK_THROWS_AS(cam::cam_forward(tape, fx.store, q1, q2, fx.cfg), BadInput);
}
