#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "radon/errors.hpp"
#include "radon/gradcheck.hpp"
#include "radon/kernels.hpp"
#include "radon/nn.hpp"
#include "radon/params.hpp"
#include "radon/tape.hpp"

using namespace radon;
using ad::Tensor;
using ad::Value;

namespace {

Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const int64_t r = static_cast<int64_t>(rows.size());
  const int64_t c = static_cast<int64_t>(rows.begin()->size());
  Tensor t({r, c});
  int64_t i = 0;
  for (const auto& row : rows)
    for (double v : row) t[i++] = v;
  return t;
}

Tensor vec(std::initializer_list<double> xs) {
  Tensor t({static_cast<int64_t>(xs.size())});
  int64_t i = 0;
  for (double v : xs) t[i++] = v;
  return t;
}

}  // namespace

TEST_CASE("matmul identity") {
  ad::Tape tape;
  Value a = tape.constant(matrix({{1, 2}, {3, 4}}));
  Value eye = tape.constant(matrix({{1, 0}, {0, 1}}));
  Value y = tape.matmul(a, eye);
  CHECK(y.val().at(0, 0) == 1.0);
  CHECK(y.val().at(0, 1) == 2.0);
  CHECK(y.val().at(1, 0) == 3.0);
  CHECK(y.val().at(1, 1) == 4.0);
}

TEST_CASE("matmul shape error names op and shapes") {
  ad::Tape tape;
  Value a = tape.constant(Tensor::zeros({2, 3}));
  Value b = tape.constant(Tensor::zeros({4, 2}));
  try {
    tape.matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("4x2") != std::string::npos);
  }
}

TEST_CASE("softmax of constant row is uniform") {
  ad::Tape tape;
  Value y = tape.softmax(tape.constant(vec({0, 0, 0})));
  for (int i = 0; i < 3; ++i) CHECK(y.val()[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("layer norm of constant vector is zero pre-affine") {
  ad::Tape tape;
  Value y = tape.layer_norm(tape.constant(vec({5, 5, 5, 5})));
  for (int i = 0; i < 4; ++i) CHECK(y.val()[i] == 0.0);
}

TEST_CASE("backward of sum gives ones") {
  ad::Tape tape;
  Value x = tape.constant(vec({1, 2, 3}));
  tape.backward(tape.sum_all(x));
  for (int i = 0; i < 3; ++i) CHECK(x.grad()[i] == 1.0);
}

TEST_CASE("backward of squared L2 norm") {
  ad::Tape tape;
  Value x = tape.constant(vec({3, 4}));
  Value n = tape.l2norm(x);
  tape.backward(tape.mul(n, n));
  CHECK(x.grad()[0] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(x.grad()[1] == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("backward rejects non-scalar root") {
  ad::Tape tape;
  Value x = tape.constant(vec({1, 2}));
  CHECK_THROWS_AS(tape.backward(x), ShapeError);
}

TEST_CASE("repeated backward recomputes instead of accumulating") {
  ad::ParamStore store;
  ad::ParamSlot& w = store.create("w", vec({2, 5}));
  ad::Tape tape;
  Value x = tape.param(w);
  Value loss = tape.sum_all(tape.mul(x, x));
  tape.backward(loss);
  CHECK(w.grad[0] == doctest::Approx(4.0));
  tape.backward(loss);
  CHECK(w.grad[0] == doctest::Approx(4.0));  // zeroed on entry, not doubled
}

TEST_CASE("quadratic finite-diff check is tight") {
  ad::ParamStore store;
  Rng init(7);
  Tensor w0({4});
  for (int i = 0; i < 4; ++i) w0[i] = init.normal(0, 1);
  store.create("w", std::move(w0));
  Rng rng(11);
  const double err = ad::finite_diff_check(
      [&](bool with_grad) {
        ad::Tape tape;
        Value w = tape.param(store.at("w"));
        Value loss = tape.sum_all(tape.mul(w, w));
        if (with_grad) tape.backward(loss);
        return loss.val()[0];
      },
      store, 1e-5, 64, rng);
  CHECK(err <= 1e-8);
}

TEST_CASE("gather/sort backward uses the permutation inverse") {
  ad::ParamStore store;
  store.create("w", matrix({{1, 10}, {2, 20}, {3, 30}}));
  ad::Tape tape;
  Value w = tape.param(store.at("w"));
  Value g = tape.gather_rows(w, {2, 0, 1});
  Value sel = tape.mul(g, tape.constant(matrix({{1, 0}, {0, 0}, {0, 1}})));
  tape.backward(tape.sum_all(sel));
  CHECK(store.at("w").grad.at(2, 0) == 1.0);
  CHECK(store.at("w").grad.at(1, 1) == 1.0);
  CHECK(store.at("w").grad.at(0, 0) == 0.0);
}

TEST_CASE("broadcast add/mul gradients reduce over the broadcast dims") {
  ad::ParamStore store;
  store.create("bias", vec({1, 2}));
  store.create("col", matrix({{3}, {4}}));
  ad::Tape tape;
  Value x = tape.constant(matrix({{1, 1}, {1, 1}}));
  Value y = tape.add(x, tape.param(store.at("bias")));
  Value z = tape.mul(y, tape.param(store.at("col")));
  tape.backward(tape.sum_all(z));
  CHECK(store.at("bias").grad[0] == doctest::Approx(7.0));  // 3 + 4
  CHECK(store.at("bias").grad[1] == doctest::Approx(7.0));
  CHECK(store.at("col").grad[0] == doctest::Approx(5.0));  // row sum of x + bias
  CHECK(store.at("col").grad[1] == doctest::Approx(5.0));
}

TEST_CASE("composite ops finite-diff to 1e-4") {
  ad::ParamStore store;
  Rng init(3);
  store.create("w1", nn::xavier({5, 6}, init));
  store.create("w2", nn::xavier({6, 3}, init));
  store.create("s", Tensor::scalar(0.4));
  Rng rng(5);
  const double err = ad::finite_diff_check(
      [&](bool with_grad) {
        ad::Tape tape;
        Value x = tape.constant(matrix({{0.3, -1.2, 0.7, 0.1, -0.5},
                                        {1.1, 0.4, -0.9, 0.8, 0.2},
                                        {-0.6, 0.9, 0.5, -1.4, 1.3}}));
        Value h = tape.relu(tape.matmul(x, tape.param(store.at("w1"))));
        Value s = tape.softmax(tape.layer_norm(h));
        Value y = tape.matmul(tape.sigmoid(s), tape.param(store.at("w2")));
        Value pooled = tape.reduce_max(y, 0);
        Value scaled = tape.mul(pooled, tape.exp(tape.param(store.at("s"))));
        Value loss = tape.l2norm(tape.concat({scaled, tape.reduce_mean(y, 0)}, 1));
        if (with_grad) tape.backward(loss);
        return loss.val()[0];
      },
      store, 1e-5, 96, rng);
  CHECK(err <= 1e-4);
}

TEST_CASE("ssm_scan recursion matches kernel evaluation") {
  Rng rng(17);
  for (int draw = 0; draw < 20; ++draw) {
    const int64_t t_len = 1 + static_cast<int64_t>(rng.uniform_int(0, 4));
    const int64_t ch = 3, s_dim = 4;
    Tensor x({t_len, ch}), a({s_dim}), b({s_dim}), c({s_dim});
    for (int64_t i = 0; i < x.size(); ++i) x[i] = rng.normal(0, 1);
    for (int64_t i = 0; i < s_dim; ++i) {
      a[i] = rng.uniform(-0.95, 0.95);
      b[i] = rng.normal(0, 1);
      c[i] = rng.normal(0, 1);
    }
    ad::Tape tape;
    Value xv = tape.constant(x), av = tape.constant(a), bv = tape.constant(b), cv = tape.constant(c);
    Value rec = tape.ssm_scan(xv, av, bv, cv, ad::ScanForm::kRecursive);
    Value ker = tape.ssm_scan(xv, av, bv, cv, ad::ScanForm::kKernel);
    for (int64_t i = 0; i < rec.size(); ++i)
      CHECK(std::abs(rec.val()[i] - ker.val()[i]) <= 1e-10);
  }
}

TEST_CASE("ssm_scan T=1 reduces to c.b * x") {
  ad::Tape tape;
  Value x = tape.constant(matrix({{2.0, -3.0}}));
  Value a = tape.constant(vec({0.5, 0.25}));
  Value b = tape.constant(vec({1.0, 2.0}));
  Value c = tape.constant(vec({3.0, 0.5}));
  Value y = tape.ssm_scan(x, a, b, c);
  const double k0 = 3.0 * 1.0 + 0.5 * 2.0;
  CHECK(y.val()[0] == doctest::Approx(k0 * 2.0).epsilon(1e-14));
  CHECK(y.val()[1] == doctest::Approx(k0 * -3.0).epsilon(1e-14));
}

TEST_CASE("ssm_scan with zero transition is memoryless") {
  Rng rng(23);
  Tensor x({4, 2});
  for (int64_t i = 0; i < x.size(); ++i) x[i] = rng.normal(0, 1);
  ad::Tape tape;
  Value y = tape.ssm_scan(tape.constant(x), tape.constant(vec({0, 0, 0})),
                          tape.constant(vec({1, 0.5, 2})), tape.constant(vec({0.2, 1, 0.1})));
  const double k0 = 0.2 * 1 + 1 * 0.5 + 0.1 * 2;
  for (int64_t t = 0; t < 4; ++t)
    for (int64_t ch = 0; ch < 2; ++ch)
      CHECK(y.val().at(t, ch) == doctest::Approx(k0 * x.at(t, ch)).epsilon(1e-14));
}

TEST_CASE("ssm_scan gradients, diagonal and dense") {
  for (const bool dense : {false, true}) {
    ad::ParamStore store;
    Rng init(41);
    const int64_t s_dim = 3;
    if (dense) {
      Tensor a({s_dim, s_dim});
      for (int64_t i = 0; i < a.size(); ++i) a[i] = init.normal(0, 0.3);
      store.create("a", std::move(a));
    } else {
      Tensor a({s_dim});
      for (int64_t i = 0; i < s_dim; ++i) a[i] = init.uniform(0.2, 0.9);
      store.create("a", std::move(a));
    }
    Tensor b({s_dim}), c({s_dim}), x({5, 2});
    for (int64_t i = 0; i < s_dim; ++i) {
      b[i] = init.normal(0, 1);
      c[i] = init.normal(0, 1);
    }
    for (int64_t i = 0; i < x.size(); ++i) x[i] = init.normal(0, 1);
    store.create("b", std::move(b));
    store.create("c", std::move(c));
    store.create("x", std::move(x));

    Rng rng(43);
    const double err = ad::finite_diff_check(
        [&](bool with_grad) {
          ad::Tape tape;
          Value y = tape.ssm_scan(tape.param(store.at("x")), tape.param(store.at("a")),
                                  tape.param(store.at("b")), tape.param(store.at("c")));
          Value loss = tape.l2norm(y);
          if (with_grad) tape.backward(loss);
          return loss.val()[0];
        },
        store, 1e-5, 64, rng);
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  ad::ParamStore store;
  Rng init(29);
  store.create("block/w", nn::xavier({7, 5}, init));
  store.create("block/b", nn::xavier({5}, init));
  store.create("scalar", Tensor::scalar(-2.5));

  const std::string path =
      (std::filesystem::temp_directory_path() / "radon_ckpt_test.caor").string();
  store.save(path);

  ad::ParamStore loaded;
  loaded.load(path);
  REQUIRE(loaded.count() == store.count());
  for (const ad::ParamSlot* s : std::as_const(store).slots()) {
    const ad::ParamSlot* l = std::as_const(loaded).find(s->path);
    REQUIRE(l != nullptr);
    REQUIRE(l->value.dims() == s->value.dims());
    for (int64_t i = 0; i < s->value.size(); ++i) CHECK(l->value[i] == s->value[i]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("duplicate parameter paths are rejected") {
  ad::ParamStore store;
  store.create("p", Tensor::scalar(1.0));
  CHECK_THROWS_AS(store.create("p", Tensor::scalar(2.0)), BadInput);
}

TEST_CASE("adam step with lr decay schedule") {
  ad::ParamStore store;
  store.create("w", Tensor::scalar(1.0));
  store.at("w").grad[0] = 1.0;
  store.adam_step(1e-3);
  // bias-corrected first step moves by exactly lr
  CHECK(store.at("w").value[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-9));
}

TEST_CASE("parallel kernels match serial bit for bit") {
  Rng rng(31);
  const int64_t m = 37, k = 23, n = 19;
  Tensor a({m, k}), b({k, n});
  for (int64_t i = 0; i < a.size(); ++i) a[i] = rng.normal(0, 1);
  for (int64_t i = 0; i < b.size(); ++i) b[i] = rng.normal(0, 1);
  Tensor c1({m, n}), c2({m, n});
  kern::matmul_serial(a.data(), b.data(), c1.data(), m, k, n);
  kern::matmul_parallel(a.data(), b.data(), c2.data(), m, k, n);
  for (int64_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == c2[i]);

  Tensor g({m, n}), da1({m, k}), da2({m, k}), db1({k, n}), db2({k, n});
  for (int64_t i = 0; i < g.size(); ++i) g[i] = rng.normal(0, 1);
  kern::matmul_grad_lhs_serial(g.data(), b.data(), da1.data(), m, k, n);
  kern::matmul_grad_lhs_parallel(g.data(), b.data(), da2.data(), m, k, n);
  kern::matmul_grad_rhs_serial(a.data(), g.data(), db1.data(), m, k, n);
  kern::matmul_grad_rhs_parallel(a.data(), g.data(), db2.data(), m, k, n);
  for (int64_t i = 0; i < da1.size(); ++i) CHECK(da1[i] == da2[i]);
  for (int64_t i = 0; i < db1.size(); ++i) CHECK(db1[i] == db2[i]);

  Tensor x({8 * 6, 4});
  for (int64_t i = 0; i < x.size(); ++i) x[i] = rng.normal(0, 1);
  Tensor sa({5}), sb({5}), sc({5});
  for (int64_t i = 0; i < 5; ++i) {
    sa[i] = rng.uniform(-0.9, 0.9);
    sb[i] = rng.normal(0, 1);
    sc[i] = rng.normal(0, 1);
  }
  Tensor y1({8 * 6, 4}), y2({8 * 6, 4});
  kern::scan_kernel_serial(x.data(), sa.data(), sb.data(), sc.data(), y1.data(), 8, 6, 4, 5);
  kern::scan_kernel_parallel(x.data(), sa.data(), sb.data(), sc.data(), y2.data(), 8, 6, 4, 5);
  for (int64_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);
}

TEST_CASE("identical seeds give bit-identical forward results") {
  auto run = [] {
    Rng init(99);
    ad::ParamStore store;
    store.create("w", nn::xavier({6, 6}, init));
    ad::Tape tape;
    Value x = tape.constant(Tensor::full({2, 6}, 0.5));
    Value y = tape.l2norm(tape.relu(tape.matmul(x, tape.param(store.at("w")))));
    return y.val()[0];
  };
  const double a = run();
  const double b = run();
  CHECK(a == b);
}
