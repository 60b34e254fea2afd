#include <doctest.h>

#include "homopt/oracle.hpp"
#include "homopt/problem.hpp"
#include "homopt/rng.hpp"
#include "support.hpp"

using namespace homopt;
using namespace testsupport;

namespace {

Problem nuclear_problem(Tensor y, double lambda) {
  const index_t d1 = y.shape().extent(0), d2 = y.shape().extent(1);
  return Problem(HomogeneousMap::matrix_product(d1, d2),
                 Regularizer::norm_product({NormKind::L2, NormKind::L2}),
                 Loss::squared_frobenius(std::move(y)), QTerm::absent(), lambda);
}

}  // namespace

TEST_CASE("objective at the origin is the loss of zero") {
  Rng rng(1);
  const Tensor y = rng.uniform_tensor(Shape({4, 3}), -1, 1);
  const double half_norm_sq = 0.5 * frobenius_norm(y) * frobenius_norm(y);
  const Problem prob = nuclear_problem(y, 0.7);
  const FactorSet zeros = prob.map().zero_factor_set(2);
  CHECK(prob.objective_factored(zeros, std::nullopt) == doctest::Approx(half_norm_sq));
}

TEST_CASE("rank-one exact fit pays only the regularization") {
  // Y = sigma u v^T with unit vectors; U = sqrt(sigma) u, V = sqrt(sigma) v
  const double sigma = 3.0;
  Rng rng(2);
  Tensor u = rng.normal_tensor(Shape({5}));
  Tensor v = rng.normal_tensor(Shape({4}));
  const double nu = frobenius_norm(u), nv = frobenius_norm(v);
  for (index_t i = 0; i < u.size(); ++i) u[i] /= nu;
  for (index_t i = 0; i < v.size(); ++i) v[i] /= nv;
  Tensor y(Shape({5, 4}));
  for (index_t i = 0; i < 5; ++i) {
    for (index_t j = 0; j < 4; ++j) y[i * 4 + j] = sigma * u[i] * v[j];
  }
  const double lambda = 0.9;
  const Problem prob = nuclear_problem(y, lambda);
  FactorSet fs({Tensor(Shape({5, 1}), std::vector<double>(u.data(), u.data() + 5)),
                Tensor(Shape({4, 1}), std::vector<double>(v.data(), v.data() + 4))});
  fs.factor(0) = scale(fs.factor(0), std::sqrt(sigma));
  fs.factor(1) = scale(fs.factor(1), std::sqrt(sigma));
  CHECK(prob.objective_factored(fs, std::nullopt) == doctest::Approx(lambda * sigma).epsilon(1e-10));
}

TEST_CASE("objective dominates the loss term") {
  Rng rng(3);
  const Tensor y = rng.uniform_tensor(Shape({4, 3}), -1, 1);
  const Problem prob = nuclear_problem(y, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    const FactorSet fs = random_factor_set(prob.map(), 3, 100 + trial);
    const double obj = prob.objective_factored(fs, std::nullopt);
    const double ell = prob.loss().eval(eval_full(prob.map(), fs), nullptr);
    CHECK(obj >= ell - 1e-12);
  }
}

TEST_CASE("smooth gradient matches finite differences") {
  Rng rng(4);
  const Tensor y = rng.uniform_tensor(Shape({3, 3}), -1, 1);
  const Problem prob = nuclear_problem(y, 0.4);
  for (int trial = 0; trial < 5; ++trial) {
    const FactorSet fs = random_factor_set(prob.map(), 2, 55 + trial);
    const auto [gf, gq] = prob.grad_factored(fs, std::nullopt);
    const FactorSet fd = fd_factor_gradient(
        [&](const FactorSet& f) {
          return prob.loss().eval(eval_full(prob.map(), f), nullptr);
        },
        fs);
    for (index_t k = 0; k < 2; ++k) {
      for (index_t j = 0; j < gf.factor(k).size(); ++j) {
        CHECK(std::abs(gf.factor(k)[j] - fd.factor(k)[j]) <= 1e-5);
      }
    }
    CHECK_FALSE(gq.has_value());
  }
}

TEST_CASE("gradient vanishes at an exact fit and ignores lambda") {
  Rng rng(5);
  const auto map = HomogeneousMap::matrix_product(4, 3);
  const FactorSet fs = random_factor_set(map, 2, 7);
  const Tensor y = eval_full(map, fs);
  const Problem p1 = nuclear_problem(y, 0.3);
  const Problem p2 = nuclear_problem(y, 0.6);
  const auto [g1, q1] = p1.grad_factored(fs, std::nullopt);
  const auto [g2, q2] = p2.grad_factored(fs, std::nullopt);
  for (index_t k = 0; k < 2; ++k) {
    CHECK(max_abs(g1.factor(k)) <= 1e-12);
    for (index_t j = 0; j < g1.factor(k).size(); ++j) {
      CHECK(g1.factor(k)[j] == g2.factor(k)[j]);  // lambda only scales the nonsmooth term
    }
  }
}

TEST_CASE("dual variable identities") {
  Rng rng(6);
  const Tensor y = rng.uniform_tensor(Shape({4, 3}), -1, 1);
  const Problem prob = nuclear_problem(y, 2.0);
  const FactorSet zeros = prob.map().zero_factor_set(1);
  const Tensor w = prob.dual_variable(zeros, std::nullopt);
  for (index_t i = 0; i < w.size(); ++i) CHECK(w[i] == doctest::Approx(y[i] / 2.0));

  const FactorSet fit = random_factor_set(prob.map(), 2, 9);
  const Problem exact = nuclear_problem(eval_full(prob.map(), fit), 1.0);
  CHECK(max_abs(exact.dual_variable(fit, std::nullopt)) <= 1e-12);

  const Problem twice = nuclear_problem(y, 4.0);
  const Tensor w2 = twice.dual_variable(zeros, std::nullopt);
  for (index_t i = 0; i < w.size(); ++i) CHECK(w2[i] == doctest::Approx(0.5 * w[i]));
}

TEST_CASE("factored objective upper-bounds the convex objective") {
  Rng rng(7);
  const Tensor y = rng.uniform_tensor(Shape({5, 4}), -1, 1);
  const double lambda = 0.6;
  const Problem prob = nuclear_problem(y, lambda);
  for (int trial = 0; trial < 20; ++trial) {
    const FactorSet fs = random_factor_set(prob.map(), 1 + trial % 5, 300 + trial);
    const Tensor x = eval_full(prob.map(), fs);
    const double f_convex = prob.loss().eval(x, nullptr) + lambda * nuclear_norm(x);
    const double f_factored = prob.objective_factored(fs, std::nullopt);
    CHECK(f_factored - f_convex >= -1e-9);
  }
}

TEST_CASE("loss midpoint convexity probe") {
  Rng rng(8);
  const Tensor y = rng.uniform_tensor(Shape({3, 3}), -1, 1);
  Tensor ylog(Shape({3, 3}));
  for (index_t i = 0; i < 9; ++i) ylog[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const Loss sqf = Loss::squared_frobenius(y);
  const Loss log = Loss::logistic(ylog);
  for (const Loss* loss : {&sqf, &log}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Tensor x1 = rng.uniform_tensor(Shape({3, 3}), -2, 2);
      const Tensor x2 = rng.uniform_tensor(Shape({3, 3}), -2, 2);
      const Tensor q1 = rng.uniform_tensor(Shape({3, 3}), -1, 1);
      const Tensor q2 = rng.uniform_tensor(Shape({3, 3}), -1, 1);
      Tensor xm = add(x1, x2), qm = add(q1, q2);
      xm = scale(xm, 0.5);
      qm = scale(qm, 0.5);
      const double mid = loss->eval(xm, &qm);
      const double avg = 0.5 * (loss->eval(x1, &q1) + loss->eval(x2, &q2));
      CHECK(mid <= avg + 1e-12);
    }
  }
}

TEST_CASE("logistic gradient entries are bounded by one") {
  Rng rng(9);
  Tensor ylog(Shape({4, 2}));
  for (index_t i = 0; i < 8; ++i) ylog[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const Loss log = Loss::logistic(ylog);
  const Tensor x = rng.uniform_tensor(Shape({4, 2}), -3, 3);
  const Tensor g = log.grad_x(x, nullptr);
  for (index_t i = 0; i < g.size(); ++i) CHECK(std::abs(g[i]) < 1.0);
  CHECK_THROWS_AS(Loss::logistic(Tensor(Shape({2}), {1.0, 0.5})), std::invalid_argument);
}

TEST_CASE("q term prox and coupling") {
  const QTerm l1 = QTerm::l1(0.5);
  const Tensor v(Shape({3}), {1.0, -0.2, 0.05});
  const Tensor p = l1.prox(v, 1.0);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.0));
  CHECK(p[2] == doctest::Approx(0.0));

  const QTerm sq = QTerm::squared_l2(1.0);
  const Tensor p2 = sq.prox(v, 1.0);
  CHECK(p2[0] == doctest::Approx(0.5));

  Rng rng(10);
  const Tensor y = rng.uniform_tensor(Shape({3, 2}), -1, 1);
  const Problem prob(HomogeneousMap::matrix_product(3, 2),
                     Regularizer::norm_product({NormKind::L2, NormKind::L2}),
                     Loss::squared_frobenius(y), QTerm::l1(0.1), 0.5);
  const FactorSet fs = random_factor_set(prob.map(), 2, 12);
  const Tensor q = rng.uniform_tensor(Shape({3, 2}), -1, 1);
  const auto [gf, gq] = prob.grad_factored(fs, q);
  REQUIRE(gq.has_value());
  // additive coupling: dL/dQ equals the X gradient
  const Tensor gx = prob.loss().grad_x(eval_full(prob.map(), fs), &q);
  for (index_t i = 0; i < gx.size(); ++i) CHECK((*gq)[i] == gx[i]);
}

TEST_CASE("problem construction rejects bad inputs") {
  Rng rng(11);
  const Tensor y = rng.uniform_tensor(Shape({3, 2}), -1, 1);
  CHECK_THROWS_AS(nuclear_problem(y, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(nuclear_problem(y, -1.0), std::invalid_argument);
  // degree mismatch: cp map with K=3 vs two-factor regularizer
  CHECK_THROWS_AS(Problem(HomogeneousMap::cp_outer_product({3, 2, 2}),
                          Regularizer::norm_product({NormKind::L2, NormKind::L2}),
                          Loss::squared_frobenius(rng.uniform_tensor(Shape({3, 2, 2}), -1, 1)),
                          QTerm::absent(), 1.0),
                  std::invalid_argument);
}
