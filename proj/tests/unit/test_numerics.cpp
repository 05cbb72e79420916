#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "../common/toy.hpp"
#include "pmmm/error.hpp"
#include "pmmm/finite_diff.hpp"
#include "pmmm/matrix.hpp"
#include "pmmm/optim.hpp"
#include "pmmm/rng.hpp"
#include "pmmm/tape.hpp"

using namespace pmmm;
using pmmm::testing::check_gradients;
using pmmm::testing::random_adjacency;
using pmmm::testing::random_dense;

TEST_CASE("rng streams are reproducible and tag sensitive") {
  Rng a(42, {1, 2}), b(42, {1, 2}), c(42, {2, 1});
  std::vector<std::uint64_t> va, vb, vc;
  for (int i = 0; i < 8; ++i) {
    va.push_back(a.next_u64());
    vb.push_back(b.next_u64());
    vc.push_back(c.next_u64());
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("rng index is in range and roughly uniform") {
  Rng r(7);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) ++counts[r.index(5)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 400);
  CHECK_THROWS(r.index(0));
}

TEST_CASE("sample without replacement returns distinct sorted-free subset") {
  Rng r(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = r.sample_without_replacement(10, 4);
    REQUIRE(s.size() == 4);
    std::set<std::size_t> u(s.begin(), s.end());
    CHECK(u.size() == 4);
    CHECK(*u.rbegin() < 10);
  }
  CHECK_THROWS(r.sample_without_replacement(3, 4));
}

TEST_CASE("normal variates have unit moments") {
  Rng r(11);
  double s = 0, s2 = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.03);
  CHECK(std::abs(s2 / n - 1.0) < 0.03);
}

TEST_CASE("sparse matrix construction and validation") {
  auto m = SparseMat::from_triplets(3, 2, {{2, 1, 1.0}, {0, 0, 1.0}, {1, 0, 1.0}});
  CHECK(m.nnz() == 3);
  CHECK(m.contains(2, 1));
  CHECK_FALSE(m.contains(2, 0));
  CHECK_THROWS(SparseMat::from_triplets(3, 2, {{5, 0, 1.0}}));
  CHECK_THROWS(SparseMat::from_triplets(3, 2, {{0, 0, 1.0}, {0, 0, 1.0}}));
}

TEST_CASE("row normalization") {
  auto m = SparseMat::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 1, 1.0}}).row_normalized();
  const DenseMat d = m.to_dense();
  CHECK(d(0, 0) == doctest::Approx(0.5));
  CHECK(d(0, 1) == doctest::Approx(0.5));
  CHECK(d(1, 0) == 0.0);
  CHECK(d(1, 1) == doctest::Approx(1.0));

  auto three = SparseMat::from_triplets(2, 3, {{0, 0, 1.0}, {0, 1, 1.0}, {0, 2, 1.0}}).row_normalized().to_dense();
  for (std::size_t c = 0; c < 3; ++c) CHECK(three(0, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  for (std::size_t c = 0; c < 3; ++c) CHECK(three(1, c) == 0.0);
}

TEST_CASE("spmm of identity is the input; transposed product matches dense") {
  Rng r(5);
  const DenseMat x = random_dense(3, 4, r);
  CHECK(spmm(SparseMat::identity(3), x) == x);

  const SparseMat a = random_adjacency(4, 3, 0.5, r);
  const DenseMat g = random_dense(4, 2, r);
  const DenseMat via_sparse = spmm_transposed(a, g);
  const DenseMat via_dense = matmul_at_b(a.to_dense(), g);
  for (std::size_t i = 0; i < via_dense.size(); ++i) CHECK(via_sparse[i] == doctest::Approx(via_dense[i]));
  CHECK_THROWS_AS(spmm(a, random_dense(4, 2, r)), ShapeError);
}

TEST_CASE("mean aggregation rows are convex combinations") {
  Rng r(9);
  for (int trial = 0; trial < 20; ++trial) {
    const SparseMat a = random_adjacency(6, 5, 0.4, r).row_normalized();
    const DenseMat h = random_dense(5, 3, r);
    const DenseMat out = spmm(a, h);
    for (std::size_t i = 0; i < 6; ++i) {
      const auto cols = a.row_cols(i);
      for (std::size_t c = 0; c < 3; ++c) {
        if (cols.empty()) {
          CHECK(out(i, c) == 0.0);
          continue;
        }
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t k : cols) {
          lo = std::min(lo, h(k, c));
          hi = std::max(hi, h(k, c));
        }
        CHECK(out(i, c) >= lo - 1e-12);
        CHECK(out(i, c) <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("matmul shape errors name the operation") {
  try {
    (void)matmul(DenseMat(2, 3), DenseMat(2, 3));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("matmul") != std::string::npos);
    CHECK(std::string(e.what()).find("2x3") != std::string::npos);
  }
}

TEST_CASE("relu forward and gradient mask") {
  Tape t;
  Var x = t.parameter(DenseMat::row_vector({-1.0, 2.0}));
  Var y = ops::relu(t, x);
  CHECK(t.value(y)(0, 0) == 0.0);
  CHECK(t.value(y)(0, 1) == 2.0);
  t.backward(ops::sum(t, y));
  CHECK(t.grad(x)(0, 0) == 0.0);
  CHECK(t.grad(x)(0, 1) == 1.0);

  Tape u;
  Var n = ops::relu(u, u.constant(DenseMat::row_vector({std::numeric_limits<double>::quiet_NaN()})));
  CHECK(std::isnan(u.value(n)(0, 0)));
}

TEST_CASE("softmax of [ln 2, 0] is [2/3, 1/3]") {
  Tape t;
  Var s = ops::softmax_vector(t, t.constant(DenseMat::row_vector({std::log(2.0), 0.0})));
  CHECK(t.value(s)(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(t.value(s)(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax sums to one and is shift invariant") {
  Rng r(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(1 + r.index(8));
    for (double& v : x) v = 5.0 * r.normal();
    auto p = softmax(x);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : p) {
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
    }
    const double shift = 10.0 * r.normal();
    for (double& v : x) v += shift;
    auto q = softmax(x);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) < 1e-9);
  }
}

TEST_CASE("sum backward gives ones") {
  Tape t;
  Var x = t.parameter(DenseMat::row_vector({1, 2, 3, 4}));
  t.backward(ops::sum(t, x));
  for (std::size_t i = 0; i < 4; ++i) CHECK(t.grad(x)[i] == 1.0);
}

TEST_CASE("cross entropy on uniform logits") {
  Tape t;
  Var z = t.parameter(DenseMat::row_vector({0.0, 0.0}));
  Var loss = ops::cross_entropy(t, z, {0});
  CHECK(t.value(loss)(0, 0) == doctest::Approx(std::log(2.0)));
  t.backward(loss);
  CHECK(t.grad(z)(0, 0) == doctest::Approx(-0.5));
  CHECK(t.grad(z)(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("backward rejects non-scalar loss; unreachable leaves get zeros") {
  Tape t;
  Var x = t.parameter(DenseMat(2, 2, 1.0));
  Var unused = t.parameter(DenseMat(3, 1, 1.0));
  CHECK_THROWS_AS(t.backward(x), ShapeError);
  t.backward(ops::sum(t, x));
  CHECK(t.grad(unused) == DenseMat(3, 1));
}

TEST_CASE("every primitive matches finite differences") {
  Rng r(17);
  using V = std::vector<Var>;
  const SparseMat a = random_adjacency(4, 3, 0.5, r).row_normalized();
  for (int trial = 0; trial < 10; ++trial) {
    const DenseMat x = random_dense(3, 2, r), w = random_dense(2, 3, r), y = random_dense(3, 2, r);
    const DenseMat s = random_dense(1, 1, r), v = random_dense(1, 5, r), b = random_dense(1, 3, r);
    const DenseMat x4 = random_dense(4, 2, r);

    SUBCASE("matmul") { CHECK(check_gradients([](Tape& t, const V& p) { return ops::sum(t, ops::matmul(t, p[0], p[1])); }, {x, w}).failures == 0); }
    SUBCASE("spmm") {
      CHECK(check_gradients([&](Tape& t, const V& p) { return ops::sum(t, ops::relu(t, ops::spmm(t, a, p[0]))); }, {x}).failures == 0);
    }
    SUBCASE("add, scale, relu") {
      CHECK(check_gradients([](Tape& t, const V& p) {
              return ops::sum(t, ops::relu(t, ops::add(t, ops::scale(t, p[0], 1.5), p[1])));
            }, {x, y}).failures == 0);
    }
    SUBCASE("add_n and scale_by") {
      CHECK(check_gradients([](Tape& t, const V& p) {
              std::vector<Var> terms{p[0], ops::scale_by(t, p[2], p[1]), p[0]};
              return ops::sum(t, ops::relu(t, ops::add_n(t, terms)));
            }, {x, y, s}).failures == 0);
    }
    SUBCASE("softmax, pick, mask_gradient") {
      CHECK(check_gradients([](Tape& t, const V& p) {
              Var sm = ops::softmax_vector(t, p[0]);
              return ops::add(t, ops::scale(t, ops::pick(t, sm, 1), 3.0), ops::pick(t, sm, 4));
            }, {v}).failures == 0);
    }
    SUBCASE("row_gather, vstack, add_bias") {
      CHECK(check_gradients([](Tape& t, const V& p) {
              std::vector<Var> blocks{p[0], p[1]};
              Var st = ops::vstack(t, blocks);
              Var g = ops::row_gather(t, st, {5, 0, 2, 0});
              return ops::sum(t, ops::relu(t, ops::add_bias(t, ops::matmul(t, g, p[2]), p[3])));
            }, {x, y, w, b}).failures == 0);
    }
    SUBCASE("rowwise_dot and bce") {
      CHECK(check_gradients([](Tape& t, const V& p) {
              return ops::bce_logits(t, ops::rowwise_dot(t, p[0], p[1]), {1.0, 0.0, 1.0});
            }, {x, y}).failures == 0);
    }
    SUBCASE("cross entropy") {
      CHECK(check_gradients([](Tape& t, const V& p) {
              return ops::cross_entropy(t, ops::matmul(t, p[0], p[1]), {2, 0, 1, 1});
            }, {x4, w}).failures == 0);
    }
  }
}

TEST_CASE("mask_gradient blocks gradient of masked entries only") {
  Tape t;
  Var x = t.parameter(DenseMat::row_vector({0.3, -0.2, 0.5}));
  Var y = ops::mask_gradient(t, x, {true, false, true});
  CHECK(t.value(y) == t.value(x));
  t.backward(ops::pick(t, ops::softmax_vector(t, y), 0));
  CHECK(t.grad(x)(0, 1) == 0.0);
  CHECK(t.grad(x)(0, 0) != 0.0);
  CHECK(t.grad(x)(0, 2) != 0.0);
}

TEST_CASE("finite difference basics") {
  auto sq = [](std::span<const double> x) { return x[0] * x[0]; };
  std::vector<double> p{3.0};
  CHECK(std::abs(finite_difference(sq, p, 1e-5)[0] - 6.0) < 1e-6);
  auto cst = [](std::span<const double>) { return 4.0; };
  std::vector<double> q{1.0, 2.0, 3.0};
  for (double g : finite_difference(cst, q, 1e-5)) CHECK(g == 0.0);
  CHECK_THROWS(finite_difference(sq, p, 0.0));
  auto bad = [](std::span<const double> x) { return x[0] > 3.0 ? NAN : 0.0; };
  CHECK_THROWS(finite_difference(bad, p, 1e-3));
}

TEST_CASE("adam: zero gradient leaves params; first step moves by lr") {
  std::vector<DenseMat> p{DenseMat::scalar(1.0)};
  AdamState adam(AdamConfig{}, p);
  adam.step(p, std::vector<DenseMat>{DenseMat::scalar(0.0)});
  CHECK(p[0](0, 0) == 1.0);
  CHECK(adam.steps() == 1);

  std::vector<DenseMat> q{DenseMat::scalar(1.0)};
  AdamState adam2(AdamConfig{}, q);
  adam2.step(q, std::vector<DenseMat>{DenseMat::scalar(1.0)});
  CHECK(q[0](0, 0) == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
  adam2.step(q, std::vector<DenseMat>{DenseMat::scalar(1.0)});
  CHECK(adam2.steps() == 2);
}

TEST_CASE("adam: decoupled weight decay and masking") {
  std::vector<DenseMat> p{DenseMat::row_vector({2.0, 2.0})};
  AdamConfig cfg;
  cfg.weight_decay = 0.5;
  AdamState adam(cfg, p);
  ParamMask mask{{true, false}};
  adam.step(p, std::vector<DenseMat>{DenseMat::row_vector({0.0, 1.0})}, &mask);
  CHECK(p[0](0, 0) == doctest::Approx(2.0 - 0.01 * 0.5 * 2.0));
  CHECK(p[0](0, 1) == 2.0);
  CHECK(adam.second_moment()[0](0, 1) == 0.0);
  CHECK_THROWS_AS(adam.step(p, std::vector<DenseMat>{DenseMat(2, 2)}), ShapeError);
}
