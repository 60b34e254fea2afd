#include <doctest.h>

#include "homopt/descent.hpp"
#include "homopt/oracle.hpp"
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

TEST_CASE("an oracle-factored optimum is recognized as stationary at iteration zero") {
  Rng rng(21);
  const Tensor y = rng.uniform_tensor(Shape({6, 5}), -1, 1);
  const double lambda = 0.3 * sigma_max(y);
  const OracleResult oracle = solve_convex_nuclear(y, lambda, 1e-14, 0.5, 2000);
  const FactorSet init = factor_oracle_solution(oracle.xstar);
  const Problem prob = nuclear_problem(y, lambda);
  DescentConfig cfg;
  cfg.stationarity_tol = 1e-6;
  const DescentResult res = descend(prob, init, std::nullopt, cfg);
  CHECK(res.iterations == 0);
  CHECK(res.stop == DescentStop::Stationary);
  CHECK(res.stationarity_residual <= cfg.stationarity_tol);
}

TEST_CASE("rank-one data converges to the convex optimum") {
  Tensor y(Shape({6, 5}));
  y[0] = 3.0;  // Y = 3 e1 e1^T
  const double lambda = 0.5;
  const Problem prob = nuclear_problem(y, lambda);
  const FactorSet init = random_init(prob.map(), prob.reg(), 1, 77);
  DescentConfig cfg;
  const DescentResult res = descend(prob, init, std::nullopt, cfg);
  const OracleResult oracle = solve_convex_nuclear(y, lambda, 1e-14, 0.5, 2000);
  CHECK(rel_err(res.objective, oracle.objective) <= 1e-6);
  CHECK(res.stop == DescentStop::Stationary);
}

TEST_CASE("all-zero factors are a fixed point above the spectral threshold") {
  Rng rng(22);
  const Tensor y = rng.uniform_tensor(Shape({4, 3}), -1, 1);
  const double smax = sigma_max(y);
  const Problem prob = nuclear_problem(y, 1.2 * smax);
  const FactorSet zeros = prob.map().zero_factor_set(2);
  DescentConfig cfg;
  const DescentResult res = descend(prob, zeros, std::nullopt, cfg);
  CHECK(res.iterations == 0);
  for (index_t k = 0; k < 2; ++k) CHECK(max_abs(res.factors.factor(k)) == 0.0);
}

TEST_CASE("traces are monotone non-increasing") {
  Rng rng(23);
  const Tensor y = rng.uniform_tensor(Shape({6, 4}), -1, 1);
  const Problem prob = nuclear_problem(y, 0.35 * sigma_max(y));
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const FactorSet init = random_init(prob.map(), prob.reg(), 3, seed);
    const DescentResult res = descend(prob, init, std::nullopt, DescentConfig{});
    for (size_t i = 1; i < res.trace.size(); ++i) {
      CHECK(res.trace[i].objective <= res.trace[i - 1].objective + 1e-12);
    }
  }
}

TEST_CASE("slice permutation of the init leads to the same objective") {
  Rng rng(24);
  const Tensor y = rng.uniform_tensor(Shape({5, 4}), -1, 1);
  const Problem prob = nuclear_problem(y, 0.4 * sigma_max(y));
  const FactorSet init = random_init(prob.map(), prob.reg(), 4, 5);
  const FactorSet permuted = permute_slices(init, {2, 0, 3, 1});
  const DescentResult a = descend(prob, init, std::nullopt, DescentConfig{});
  const DescentResult b = descend(prob, permuted, std::nullopt, DescentConfig{});
  CHECK(std::abs(a.objective - b.objective) <= 1e-9 * (1.0 + std::abs(a.objective)));
}

TEST_CASE("norm-product objective is invariant under slice rebalancing") {
  Rng rng(25);
  const Tensor y = rng.uniform_tensor(Shape({4, 4}), -1, 1);
  const Problem prob = nuclear_problem(y, 0.5);
  const FactorSet fs = random_factor_set(prob.map(), 3, 9);
  const double before = prob.objective_factored(fs, std::nullopt);
  for (double c : {0.5, 2.0, 7.0}) {
    FactorSet scaled = fs;
    scaled.factor(0) = scale(fs.factor(0), c);
    scaled.factor(1) = scale(fs.factor(1), 1.0 / c);
    CHECK(std::abs(prob.objective_factored(scaled, std::nullopt) - before) <=
          1e-10 * (1.0 + std::abs(before)));
  }
}

TEST_CASE("descent handles the q block") {
  Rng rng(26);
  const Tensor y = rng.uniform_tensor(Shape({4, 3}), -1, 1);
  const Problem prob(HomogeneousMap::matrix_product(4, 3),
                     Regularizer::norm_product({NormKind::L2, NormKind::L2}),
                     Loss::squared_frobenius(y), QTerm::l1(0.05), 0.8);
  const FactorSet init = random_init(prob.map(), prob.reg(), 2, 31);
  const DescentResult res = descend(prob, init, Tensor(Shape({4, 3})), DescentConfig{});
  REQUIRE(res.q.has_value());
  for (size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i].objective <= res.trace[i - 1].objective + 1e-12);
  }
}

TEST_CASE("non-finite initial objective is rejected") {
  Rng rng(27);
  const Tensor y = rng.uniform_tensor(Shape({3, 3}), -1, 1);
  const Problem prob(HomogeneousMap::matrix_product(3, 3),
                     Regularizer::conic_norm_product({NormKind::L2, NormKind::L2},
                                                     {Cone::nonneg_orthant(), std::nullopt}),
                     Loss::squared_frobenius(y), QTerm::absent(), 0.5);
  FactorSet bad = prob.map().zero_factor_set(1);
  bad.factor(0)[0] = -1.0;  // violates the orthant
  bad.factor(1)[0] = 1.0;
  CHECK_THROWS_AS(descend(prob, bad, std::nullopt, DescentConfig{}), std::invalid_argument);
}

TEST_CASE("relu descent is monotone") {
  Rng rng(28);
  const Tensor v = rng.uniform_tensor(Shape({10, 2}), -1, 1);
  Tensor labels(Shape({10, 1}));
  for (index_t i = 0; i < 10; ++i) labels[i] = v[i * 2] > 0 ? 1.0 : -1.0;
  const auto map = HomogeneousMap::relu_network(v, 1);
  const Problem prob(map, Regularizer::norm_product({NormKind::L2, NormKind::L2}),
                     Loss::logistic(labels), QTerm::absent(), 0.05);
  const FactorSet init = random_init(prob.map(), prob.reg(), 3, 41);
  DescentConfig cfg;
  cfg.max_iters = 2000;
  const DescentResult res = descend(prob, init, std::nullopt, cfg);
  for (size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i].objective <= res.trace[i - 1].objective + 1e-12);
  }
  CHECK(res.objective < prob.objective_factored(init, std::nullopt));
}

TEST_CASE("descent with a linear-equality cone keeps iterates feasible") {
  // constrain u slices to the plane sum(u) = 0
  Eigen::MatrixXd a(1, 4);
  a << 1, 1, 1, 1;
  const Cone plane = Cone::linear_equality(a);
  Rng rng(29);
  const Tensor y = rng.uniform_tensor(Shape({4, 3}), -1, 1);
  const Problem prob(HomogeneousMap::matrix_product(4, 3),
                     Regularizer::conic_norm_product({NormKind::L2, NormKind::L2},
                                                     {plane, std::nullopt}),
                     Loss::squared_frobenius(y), QTerm::absent(), 0.4);
  const FactorSet init = random_init(prob.map(), prob.reg(), 2, 13);
  REQUIRE(std::isfinite(prob.objective_factored(init, std::nullopt)));
  const DescentResult res = descend(prob, init, std::nullopt, DescentConfig{});
  for (index_t i = 0; i < res.factors.r(); ++i) {
    CHECK(plane.contains(res.factors.slice(0, i), 1e-9));
  }
  for (size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i].objective <= res.trace[i - 1].objective + 1e-12);
  }
}

TEST_CASE("deep relu chain descent is monotone") {
  Rng rng(30);
  const Tensor v = rng.uniform_tensor(Shape({8, 3}), -1, 1);
  const auto map = HomogeneousMap::relu_network(v, {2}, 1);
  REQUIRE(map.degree() == 2);
  const auto map3 = HomogeneousMap::relu_network(v, {2, 2}, 1);
  REQUIRE(map3.degree() == 3);
  const Tensor y = rng.uniform_tensor(Shape({8, 1}), -1, 1);
  const Problem prob(map3,
                     Regularizer::norm_product({NormKind::L2, NormKind::L2, NormKind::L2}),
                     Loss::squared_frobenius(y), QTerm::absent(), 0.05);
  DescentConfig cfg;
  cfg.max_iters = 500;
  const DescentResult res = descend(prob, random_init(prob.map(), prob.reg(), 2, 21),
                                    std::nullopt, cfg);
  for (size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i].objective <= res.trace[i - 1].objective + 1e-12);
  }
}
