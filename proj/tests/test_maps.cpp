#include <doctest.h>

#include "homopt/maps.hpp"
#include "homopt/rng.hpp"
#include "support.hpp"

using namespace homopt;
using namespace testsupport;

namespace {

Tensor identity_matrix(index_t n) {
  Tensor t(Shape({n, n}));
  for (index_t i = 0; i < n; ++i) t[i * n + i] = 1.0;
  return t;
}

std::vector<HomogeneousMap> builtin_maps() {
  Rng rng(77);
  return {
      HomogeneousMap::matrix_product(3, 2),
      HomogeneousMap::cp_outer_product({2, 3, 2}),
      HomogeneousMap::relu_network(rng.uniform_tensor(Shape({4, 3}), -1, 1), 2),
      HomogeneousMap::relu_network(rng.uniform_tensor(Shape({4, 2}), -1, 1), {2}, 2),
  };
}

}  // namespace

TEST_CASE("matrix elemental mapping is the outer product") {
  const auto map = HomogeneousMap::matrix_product(2, 2);
  const Tensor out = eval_elemental(map, {Tensor(Shape({2}), {1, 2}), Tensor(Shape({2}), {3, 4})});
  CHECK(out[0] == 3.0);
  CHECK(out[1] == 4.0);
  CHECK(out[2] == 6.0);
  CHECK(out[3] == 8.0);
}

TEST_CASE("three-layer relu elemental mapping rectifies the hidden unit") {
  const auto map = HomogeneousMap::relu_network(identity_matrix(2), 1);
  const Tensor out =
      eval_elemental(map, {Tensor(Shape({2}), {1, -1}), Tensor(Shape({1}), {2})});
  REQUIRE(out.shape() == Shape({2, 1}));
  CHECK(out[0] == 2.0);
  CHECK(out[1] == 0.0);
}

TEST_CASE("cp outer product of basis vectors hits one cell") {
  const auto map = HomogeneousMap::cp_outer_product({2, 2, 2});
  const Tensor e1(Shape({2}), {1, 0});
  const Tensor out = eval_elemental(map, {e1, e1, e1});
  CHECK(out[0] == 1.0);
  for (index_t i = 1; i < 8; ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("eval_full with r=1 equals the elemental value") {
  for (const auto& map : builtin_maps()) {
    const FactorSet fs = random_factor_set(map, 1, 123);
    const Tensor full = eval_full(map, fs);
    const Tensor elem = eval_elemental(map, fs.slices(0));
    for (index_t i = 0; i < full.size(); ++i) {
      CHECK(full[i] == doctest::Approx(elem[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("matrix eval_full matches the triple-loop dense product") {
  const auto map = HomogeneousMap::matrix_product(4, 5);
  Rng rng(55);
  const FactorSet fs({rng.uniform_tensor(Shape({4, 3}), -1, 1),
                      rng.uniform_tensor(Shape({5, 3}), -1, 1)});
  const Tensor fast = eval_full(map, fs);
  const Tensor slow = dense_product_oracle(fs.factor(0), fs.factor(1));
  for (index_t i = 0; i < fast.size(); ++i) {
    CHECK(std::abs(fast[i] - slow[i]) <= 1e-12 * (1.0 + std::abs(slow[i])));
  }
}

TEST_CASE("concatenation identity for scaled factor sets") {
  // Phi([aX bY]) = a^p Phi(X) + b^p Phi(Y)
  Rng rng(321);
  for (const auto& map : builtin_maps()) {
    const double p = map.degree();
    const FactorSet x = random_factor_set(map, 2, 11);
    const FactorSet y = random_factor_set(map, 3, 22);
    for (double alpha : {0.0, 0.7, 2.3}) {
      const double beta = rng.uniform(0.0, 2.0);
      std::vector<Tensor> cat;
      for (index_t k = 0; k < map.num_factors(); ++k) {
        cat.push_back(concat_last(scale(x.factor(k), alpha), scale(y.factor(k), beta)));
      }
      const Tensor lhs = eval_full(map, FactorSet(cat));
      Tensor rhs = scale(eval_full(map, x), std::pow(alpha, p));
      axpy(rhs, std::pow(beta, p), eval_full(map, y));
      const double ref = 1.0 + max_abs(rhs);
      for (index_t i = 0; i < lhs.size(); ++i) {
        CHECK(std::abs(lhs[i] - rhs[i]) <= 1e-10 * ref);
      }
    }
  }
}

TEST_CASE("degree-p homogeneity of all built-in maps") {
  for (const auto& map : builtin_maps()) {
    const double p = map.degree();
    for (double alpha : {0.0, 0.5, 1.0, 2.0, 7.3}) {
      const FactorSet fs = random_factor_set(map, 2, 99);
      FactorSet scaled = fs;
      for (index_t k = 0; k < fs.num_factors(); ++k) scaled.factor(k) = scale(fs.factor(k), alpha);
      const Tensor lhs = eval_full(map, scaled);
      const Tensor rhs = scale(eval_full(map, fs), std::pow(alpha, p));
      const double ref = 1.0 + max_abs(rhs);
      for (index_t i = 0; i < lhs.size(); ++i) {
        CHECK(std::abs(lhs[i] - rhs[i]) <= 1e-10 * ref);
      }
    }
  }
}

TEST_CASE("eval_full is additive over slice partitions") {
  for (const auto& map : builtin_maps()) {
    const FactorSet fs = random_factor_set(map, 5, 1234);
    std::vector<Tensor> left, right;
    for (index_t k = 0; k < map.num_factors(); ++k) {
      Tensor l(fs.factor(k).shape().with_last(2));
      Tensor r(fs.factor(k).shape().with_last(3));
      const index_t n = fs.factor(k).size() / 5;
      for (index_t j = 0; j < n; ++j) {
        for (index_t i = 0; i < 2; ++i) l[j * 2 + i] = fs.factor(k)[j * 5 + i];
        for (index_t i = 0; i < 3; ++i) r[j * 3 + i] = fs.factor(k)[j * 5 + 2 + i];
      }
      left.push_back(std::move(l));
      right.push_back(std::move(r));
    }
    Tensor sum = eval_full(map, FactorSet(left));
    axpy(sum, 1.0, eval_full(map, FactorSet(right)));
    const Tensor whole = eval_full(map, fs);
    for (index_t i = 0; i < whole.size(); ++i) {
      CHECK(std::abs(sum[i] - whole[i]) <= 1e-12 * (1.0 + std::abs(whole[i])));
    }
  }
}

TEST_CASE("elemental mapping vanishes at the origin") {
  for (const auto& map : builtin_maps()) {
    std::vector<Tensor> zeros;
    for (const Shape& s : map.input_shapes()) zeros.push_back(Tensor(s));
    CHECK(max_abs(eval_elemental(map, zeros)) == 0.0);
  }
}

TEST_CASE("matrix adjoint gradient is (WV, W^T U) and matches finite differences") {
  const auto map = HomogeneousMap::matrix_product(4, 3);
  Rng rng(31);
  const FactorSet fs({rng.uniform_tensor(Shape({4, 3}), -1, 1),
                      rng.uniform_tensor(Shape({3, 3}), -1, 1)});
  const Tensor w = rng.uniform_tensor(Shape({4, 3}), -1, 1);
  const FactorSet g = adjoint_grad(map, fs, w);

  // closed form
  const Tensor gu = g.factor(0);
  for (index_t i = 0; i < 4; ++i) {
    for (index_t c = 0; c < 3; ++c) {
      double s = 0.0;
      for (index_t j = 0; j < 3; ++j) s += w[i * 3 + j] * fs.factor(1)[j * 3 + c];
      CHECK(gu[i * 3 + c] == doctest::Approx(s).epsilon(1e-12));
    }
  }

  const FactorSet fd = fd_factor_gradient(
      [&](const FactorSet& f) { return inner(w, eval_full(map, f)); }, fs);
  for (index_t k = 0; k < 2; ++k) {
    for (index_t j = 0; j < g.factor(k).size(); ++j) {
      CHECK(std::abs(g.factor(k)[j] - fd.factor(k)[j]) <= 1e-5);
    }
  }
}

TEST_CASE("zero dual variable gives zero gradient") {
  for (const auto& map : builtin_maps()) {
    const FactorSet fs = random_factor_set(map, 2, 66);
    const FactorSet g = adjoint_grad(map, fs, Tensor(map.output_shape()));
    for (index_t k = 0; k < g.num_factors(); ++k) CHECK(max_abs(g.factor(k)) == 0.0);
  }
}

TEST_CASE("relu adjoints match finite differences away from kinks") {
  Rng rng(17);
  for (const auto& map : builtin_maps()) {
    if (map.kind() != MapKind::ReluNetwork) continue;
    // sample until every pre-activation is bounded away from zero
    FactorSet fs = random_factor_set(map, 2, 10);
    bool safe = false;
    for (std::uint64_t s = 0; s < 200 && !safe; ++s) {
      fs = random_factor_set(map, 2, 1000 + s);
      safe = true;
      for (index_t i = 0; i < fs.r() && safe; ++i) {
        std::vector<Tensor> sl = fs.slices(i);
        // forward through the rectified layers, checking margins
        Tensor cur = map.data();
        for (index_t k = 0; k + 1 < map.num_factors(); ++k) {
          const auto& wset = sl[static_cast<size_t>(k)];
          const index_t rows = cur.shape().extent(0);
          const index_t inner_d = cur.shape().extent(1);
          const index_t cols = wset.size() / inner_d;
          Tensor next(Shape({rows, cols}));
          for (index_t a = 0; a < rows; ++a) {
            for (index_t b = 0; b < cols; ++b) {
              double acc = 0.0;
              for (index_t c = 0; c < inner_d; ++c) {
                acc += cur[a * inner_d + c] * wset[c * cols + b];
              }
              if (std::abs(acc) < 0.1) safe = false;
              next[a * cols + b] = acc > 0 ? acc : 0.0;
            }
          }
          cur = std::move(next);
        }
      }
    }
    REQUIRE(safe);
    const Tensor w = rng.uniform_tensor(map.output_shape(), -1, 1);
    const FactorSet g = adjoint_grad(map, fs, w);
    const FactorSet fd = fd_factor_gradient(
        [&](const FactorSet& f) { return inner(w, eval_full(map, f)); }, fs);
    for (index_t k = 0; k < g.num_factors(); ++k) {
      for (index_t j = 0; j < g.factor(k).size(); ++j) {
        CHECK(std::abs(g.factor(k)[j] - fd.factor(k)[j]) <= 1e-5);
      }
    }
  }
}

TEST_CASE("cp adjoint matches finite differences") {
  const auto map = HomogeneousMap::cp_outer_product({2, 3, 2});
  Rng rng(23);
  const FactorSet fs = random_factor_set(map, 3, 42);
  const Tensor w = rng.uniform_tensor(map.output_shape(), -1, 1);
  const FactorSet g = adjoint_grad(map, fs, w);
  const FactorSet fd = fd_factor_gradient(
      [&](const FactorSet& f) { return inner(w, eval_full(map, f)); }, fs);
  for (index_t k = 0; k < g.num_factors(); ++k) {
    for (index_t j = 0; j < g.factor(k).size(); ++j) {
      CHECK(std::abs(g.factor(k)[j] - fd.factor(k)[j]) <= 1e-5);
    }
  }
}

TEST_CASE("vec_phi_matrix columns are slice images") {
  const auto map = HomogeneousMap::matrix_product(3, 2);
  Rng rng(88);
  FactorSet fs({rng.uniform_tensor(Shape({3, 3}), -1, 1),
                rng.uniform_tensor(Shape({2, 3}), -1, 1)});
  // duplicate slice 0 into slice 2
  for (index_t k = 0; k < 2; ++k) fs.set_slice(k, 2, fs.slice(k, 0));
  const Tensor m = vec_phi_matrix(map, fs);
  REQUIRE(m.shape() == Shape({6, 3}));
  for (index_t j = 0; j < 6; ++j) CHECK(m[j * 3 + 0] == m[j * 3 + 2]);

  // product with the all-ones vector reproduces vec(eval_full)
  const Tensor full = eval_full(map, fs);
  for (index_t j = 0; j < 6; ++j) {
    double s = 0.0;
    for (index_t i = 0; i < 3; ++i) s += m[j * 3 + i];
    CHECK(s == doctest::Approx(full[j]).epsilon(1e-12));
  }

  const FactorSet one = random_factor_set(map, 1, 3);
  const Tensor m1 = vec_phi_matrix(map, one);
  const Tensor e1 = eval_elemental(map, one.slices(0));
  for (index_t j = 0; j < 6; ++j) CHECK(m1[j] == doctest::Approx(e1[j]).epsilon(1e-14));
}

TEST_CASE("shape mismatches are rejected") {
  const auto map = HomogeneousMap::matrix_product(3, 2);
  CHECK_THROWS_AS(eval_elemental(map, {Tensor(Shape({2})), Tensor(Shape({2}))}),
                  std::invalid_argument);
  const FactorSet bad({Tensor(Shape({4, 2})), Tensor(Shape({2, 2}))});
  CHECK_THROWS_AS(eval_full(map, bad), std::invalid_argument);
  const FactorSet ok = random_factor_set(map, 2, 1);
  CHECK_THROWS_AS(adjoint_grad(map, ok, Tensor(Shape({2, 3}))), std::invalid_argument);
}
