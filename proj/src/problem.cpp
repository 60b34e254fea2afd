#include "homopt/problem.hpp"

#include <cmath>
#include <stdexcept>

namespace homopt {

Loss Loss::squared_frobenius(Tensor y) {
  Loss l;
  l.kind_ = Kind::SquaredFrobenius;
  l.y_ = std::move(y);
  return l;
}

Loss Loss::logistic(Tensor y_pm1) {
  for (index_t i = 0; i < y_pm1.size(); ++i) {
    if (y_pm1[i] != 1.0 && y_pm1[i] != -1.0) {
      throw std::invalid_argument("logistic loss: labels must be +1 or -1");
    }
  }
  Loss l;
  l.kind_ = Kind::Logistic;
  l.y_ = std::move(y_pm1);
  return l;
}

double Loss::eval(const Tensor& x, const Tensor* q) const {
  if (x.shape() != y_.shape()) {
    throw std::invalid_argument("loss: argument shape " + x.shape().str() + " != data shape " +
                                y_.shape().str());
  }
  if (q && q->shape() != y_.shape()) throw std::invalid_argument("loss: Q shape mismatch");
  double s = 0.0;
  switch (kind_) {
    case Kind::SquaredFrobenius:
      for (index_t i = 0; i < x.size(); ++i) {
        const double r = x[i] + (q ? (*q)[i] : 0.0) - y_[i];
        s += r * r;
      }
      return 0.5 * s;
    case Kind::Logistic:
      for (index_t i = 0; i < x.size(); ++i) {
        const double m = -y_[i] * (x[i] + (q ? (*q)[i] : 0.0));
        // log(1+exp(m)) without overflow
        s += m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
      }
      return s;
  }
  return s;
}

Tensor Loss::grad_x(const Tensor& x, const Tensor* q) const {
  if (x.shape() != y_.shape()) throw std::invalid_argument("loss grad: shape mismatch");
  Tensor g(y_.shape());
  switch (kind_) {
    case Kind::SquaredFrobenius:
      for (index_t i = 0; i < x.size(); ++i) g[i] = x[i] + (q ? (*q)[i] : 0.0) - y_[i];
      return g;
    case Kind::Logistic:
      for (index_t i = 0; i < x.size(); ++i) {
        const double m = -y_[i] * (x[i] + (q ? (*q)[i] : 0.0));
        g[i] = -y_[i] / (1.0 + std::exp(-m));
      }
      return g;
  }
  return g;
}

QTerm QTerm::l1(double weight) {
  if (weight < 0.0) throw std::invalid_argument("QTerm: weight must be >= 0");
  QTerm t;
  t.kind_ = Kind::L1;
  t.weight_ = weight;
  return t;
}

QTerm QTerm::squared_l2(double weight) {
  if (weight < 0.0) throw std::invalid_argument("QTerm: weight must be >= 0");
  QTerm t;
  t.kind_ = Kind::SquaredL2;
  t.weight_ = weight;
  return t;
}

double QTerm::eval(const Tensor& q) const {
  switch (kind_) {
    case Kind::Absent:
      return 0.0;
    case Kind::L1: {
      double s = 0.0;
      for (index_t i = 0; i < q.size(); ++i) s += std::abs(q[i]);
      return weight_ * s;
    }
    case Kind::SquaredL2: {
      const double n = frobenius_norm(q);
      return 0.5 * weight_ * n * n;
    }
  }
  return 0.0;
}

Tensor QTerm::prox(const Tensor& v, double stepsize) const {
  switch (kind_) {
    case Kind::Absent:
      return v;
    case Kind::L1: {
      Tensor y = v;
      const double tau = weight_ * stepsize;
      for (index_t i = 0; i < y.size(); ++i) {
        const double a = std::abs(y[i]) - tau;
        y[i] = a > 0.0 ? (y[i] > 0 ? a : -a) : 0.0;
      }
      return y;
    }
    case Kind::SquaredL2:
      return scale(v, 1.0 / (1.0 + weight_ * stepsize));
  }
  return v;
}

Problem::Problem(HomogeneousMap map, Regularizer reg, Loss loss, QTerm h, double lambda)
    : map_(std::move(map)), reg_(std::move(reg)), loss_(std::move(loss)), h_(h), lambda_(lambda) {
  if (lambda_ <= 0.0) throw std::invalid_argument("Problem: lambda must be positive");
  if (loss_.output_shape() != map_.output_shape()) {
    throw std::invalid_argument("Problem: loss data shape " + loss_.output_shape().str() +
                                " != map output shape " + map_.output_shape().str());
  }
  const PairValidation v = validate_pair(map_, reg_);
  if (!v.ok) throw std::invalid_argument("Problem: invalid (map, regularizer) pair: " + v.message);
}

const Tensor* Problem::q_ptr(const std::optional<Tensor>& q) const {
  return q.has_value() ? &q.value() : nullptr;
}

double Problem::sum_g(const FactorSet& fs) const {
  double s = 0.0;
  for (index_t i = 0; i < fs.r(); ++i) {
    const double gi = reg_.eval(fs.slices(i));
    if (!std::isfinite(gi)) return gi;
    s += gi;
  }
  return s;
}

double Problem::objective_factored(const FactorSet& fs, const std::optional<Tensor>& q) const {
  map_.check_compatible(fs);
  const double g = sum_g(fs);
  if (!std::isfinite(g)) return g;
  const Tensor x = eval_full(map_, fs);
  double v = loss_.eval(x, q_ptr(q)) + lambda_ * g;
  if (q.has_value()) v += h_.eval(*q);
  return v;
}

std::pair<FactorSet, std::optional<Tensor>> Problem::grad_factored(
    const FactorSet& fs, const std::optional<Tensor>& q) const {
  const Tensor x = eval_full(map_, fs);
  const Tensor gx = loss_.grad_x(x, q_ptr(q));
  FactorSet gf = adjoint_grad(map_, fs, gx);
  // additive coupling: dL/dQ equals dL/dX
  std::optional<Tensor> gq;
  if (q.has_value()) gq = gx;
  return {std::move(gf), std::move(gq)};
}

Tensor Problem::dual_variable(const FactorSet& fs, const std::optional<Tensor>& q) const {
  const Tensor x = eval_full(map_, fs);
  return scale(loss_.grad_x(x, q_ptr(q)), -1.0 / lambda_);
}

}  // namespace homopt
