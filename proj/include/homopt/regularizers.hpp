#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "homopt/maps.hpp"
#include "homopt/tensor.hpp"

namespace homopt {

enum class NormKind { L1, L2, LInf };

NormKind parse_norm(const std::string& name);
std::string norm_name(NormKind n);
double norm_value(NormKind n, const Tensor& x);

/*
 * Conic constraint sets. Membership is scale invariant: x in C implies
 * a*x in C for all a >= 0.
 */
class Cone {
 public:
  enum class Kind { NonNegOrthant, LinearEquality, LinearInequality, SupportBound };

  static Cone nonneg_orthant();
  static Cone linear_equality(Eigen::MatrixXd a);    // {x : Ax = 0}
  static Cone linear_inequality(Eigen::MatrixXd a);  // {x : Ax >= 0}
  static Cone support_bound(index_t n);              // {x : nnz(x) <= n}

  Kind kind() const { return kind_; }
  bool contains(const Tensor& x, double tol = 1e-12) const;
  // Euclidean projection. Exact for the orthant, equality and support
  // cones; Dykstra iteration for the inequality cone.
  Tensor project(const Tensor& x) const;

  std::string str() const;

 private:
  Cone() = default;
  Kind kind_ = Kind::NonNegOrthant;
  Eigen::MatrixXd a_;
  Eigen::MatrixXd null_proj_;  // cached projector for LinearEquality
  index_t support_n_ = 0;
};

/*
 * Elemental regularization function g over one slice per factor. Built-in
 * kinds, all positively homogeneous with degree K:
 *
 *   NormProduct       prod_k ||x^k||
 *   PowerSum          (1/K) sum_k ||x^k||^K
 *   ConicNormProduct  prod_k (||x^k|| + indicator_{C_k}(x^k))
 *
 * Custom wraps an arbitrary evaluation with a declared degree; it exists so
 * that degenerate pairs can be expressed and rejected by validate_pair.
 */
class Regularizer {
 public:
  enum class Kind { NormProduct, PowerSum, ConicNormProduct, Custom };

  static Regularizer norm_product(std::vector<NormKind> norms);
  static Regularizer power_sum(std::vector<NormKind> norms);
  static Regularizer conic_norm_product(std::vector<NormKind> norms,
                                        std::vector<std::optional<Cone>> cones);
  static Regularizer custom(std::string name, int degree,
                            std::function<double(const std::vector<Tensor>&)> eval);

  Kind kind() const { return kind_; }
  int degree() const { return degree_; }
  index_t num_factors() const { return num_factors_; }
  const std::vector<NormKind>& norms() const { return norms_; }
  const std::vector<std::optional<Cone>>& cones() const { return cones_; }
  const std::string& name() const { return name_; }

  // g(slices); +inf when a conic constraint is violated.
  double eval(const std::vector<Tensor>& slices) const;

  bool has_cones() const;
  // Project every slice onto its cone (identity when unconstrained).
  std::vector<Tensor> project_cones(const std::vector<Tensor>& slices) const;
  Tensor project_cone(index_t k, const Tensor& x) const;

 private:
  Regularizer() = default;
  Kind kind_ = Kind::NormProduct;
  std::vector<NormKind> norms_;
  std::vector<std::optional<Cone>> cones_;
  int degree_ = 0;
  index_t num_factors_ = 0;
  std::string name_;
  std::function<double(const std::vector<Tensor>&)> custom_eval_;
};

double eval_g(const Regularizer& reg, const std::vector<Tensor>& slices);

/*
 * Validation of (phi, g) as a nondegenerate pair: degrees must match, and a
 * randomized rescaling probe checks that product-one per-factor rescalings
 * (which preserve phi for every built-in map) cannot drive g toward zero.
 * The probe is a heuristic aimed at the known degeneracy mode.
 */
struct PairValidation {
  bool ok = false;
  std::string message;
  int map_degree = 0;
  int reg_degree = 0;
  std::vector<double> violating_rescaling;  // per-factor scales, empty if none
};

PairValidation validate_pair(const HomogeneousMap& map, const Regularizer& reg,
                             std::uint64_t seed = 20240901);

/*
 * Proximal kernels.
 *
 * prox_weighted_norm:  argmin_y w*||y|| + (1/2t)||y - x||^2
 * prox_norm_power:     argmin_y (w/p)*||y||^p + (1/2t)||y - x||^2  (p >= 2)
 *
 * Both are exact: the power case reduces to a weighted-norm prox whose
 * weight solves a monotone scalar fixed point.
 */
Tensor prox_weighted_norm(NormKind n, const Tensor& x, double weight, double stepsize);
Tensor prox_norm_power(NormKind n, const Tensor& x, double weight, int power, double stepsize);

/*
 * One cyclic pass of per-factor proximal steps on g at unit regularization
 * weight: never increases g(y) + (1/2t)*sum_k ||y^k - x^k||^2 relative to
 * the input. Cone projection is applied before each norm prox.
 */
std::vector<Tensor> prox_or_subgrad(const Regularizer& reg, const std::vector<Tensor>& slices,
                                    double stepsize);

// Block prox for factor k of one slice, others fixed; lambda scales g.
Tensor prox_block(const Regularizer& reg, index_t k, const std::vector<Tensor>& slices,
                  const Tensor& input, double lambda, double stepsize);

// Projection of v onto the l1 ball of the given radius.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius);

}  // namespace homopt
