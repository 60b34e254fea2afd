#pragma once

#include <optional>

#include "homopt/maps.hpp"
#include "homopt/regularizers.hpp"
#include "homopt/tensor.hpp"

namespace homopt {

/*
 * Once-differentiable losses, jointly convex in (X,Q). The optional Q
 * couples additively: the loss is evaluated at X+Q.
 */
class Loss {
 public:
  enum class Kind { SquaredFrobenius, Logistic };

  static Loss squared_frobenius(Tensor y);
  static Loss logistic(Tensor y_pm1);  // labels must be +-1

  Kind kind() const { return kind_; }
  const Tensor& target() const { return y_; }
  const Shape& output_shape() const { return y_.shape(); }

  double eval(const Tensor& x, const Tensor* q) const;
  // Gradient with respect to X; equals the Q gradient under additive coupling.
  Tensor grad_x(const Tensor& x, const Tensor* q) const;

 private:
  Loss() = default;
  Kind kind_ = Kind::SquaredFrobenius;
  Tensor y_;
};

/*
 * Convex term H(Q): absent, lambda_q*||Q||_1, or (lambda_q/2)*||Q||_F^2.
 */
class QTerm {
 public:
  enum class Kind { Absent, L1, SquaredL2 };

  static QTerm absent() { return QTerm(); }
  static QTerm l1(double weight);
  static QTerm squared_l2(double weight);

  Kind kind() const { return kind_; }
  bool present() const { return kind_ != Kind::Absent; }
  double weight() const { return weight_; }

  double eval(const Tensor& q) const;
  Tensor prox(const Tensor& v, double stepsize) const;

 private:
  QTerm() = default;
  Kind kind_ = Kind::Absent;
  double weight_ = 0.0;
};

/*
 * The factored problem
 *
 *   f_r(X^1..X^K, Q) = loss(Phi_r(X), Q) + lambda * sum_i g(X^1_i..X^K_i) + H(Q)
 *
 * Construction validates the (map, regularizer) pair and all shapes.
 */
class Problem {
 public:
  Problem(HomogeneousMap map, Regularizer reg, Loss loss, QTerm h, double lambda);

  const HomogeneousMap& map() const { return map_; }
  const Regularizer& reg() const { return reg_; }
  const Loss& loss() const { return loss_; }
  const QTerm& h() const { return h_; }
  double lambda() const { return lambda_; }

  // Sum of g over all slices; +inf on cone violation.
  double sum_g(const FactorSet& fs) const;

  // f_r; +inf iff a cone constraint is violated.
  double objective_factored(const FactorSet& fs, const std::optional<Tensor>& q) const;

  // Smooth part only: gradients of loss(Phi_r(.), .) in the factors and Q.
  std::pair<FactorSet, std::optional<Tensor>> grad_factored(
      const FactorSet& fs, const std::optional<Tensor>& q) const;

  // W = -(1/lambda) * grad_X loss(Phi_r(fs), Q).
  Tensor dual_variable(const FactorSet& fs, const std::optional<Tensor>& q) const;

 private:
  const Tensor* q_ptr(const std::optional<Tensor>& q) const;
  HomogeneousMap map_;
  Regularizer reg_;
  Loss loss_;
  QTerm h_;
  double lambda_;
};

}  // namespace homopt
