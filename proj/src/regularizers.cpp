#include "homopt/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "homopt/linalg.hpp"
#include "homopt/rng.hpp"

namespace homopt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

NormKind parse_norm(const std::string& name) {
  if (name == "l1") return NormKind::L1;
  if (name == "l2") return NormKind::L2;
  if (name == "linf" || name == "loo") return NormKind::LInf;
  throw std::invalid_argument("unknown norm '" + name + "' (expected l1, l2, linf)");
}

std::string norm_name(NormKind n) {
  switch (n) {
    case NormKind::L1: return "l1";
    case NormKind::L2: return "l2";
    case NormKind::LInf: return "linf";
  }
  return "?";
}

double norm_value(NormKind n, const Tensor& x) {
  switch (n) {
    case NormKind::L1: {
      double s = 0.0;
      for (index_t i = 0; i < x.size(); ++i) s += std::abs(x[i]);
      return s;
    }
    case NormKind::L2:
      return frobenius_norm(x);
    case NormKind::LInf:
      return max_abs(x);
  }
  return 0.0;
}

/* ------------------------------------------------------------------ */
/* Cones                                                               */
/* ------------------------------------------------------------------ */

Cone Cone::nonneg_orthant() {
  Cone c;
  c.kind_ = Kind::NonNegOrthant;
  return c;
}

Cone Cone::linear_equality(Eigen::MatrixXd a) {
  Cone c;
  c.kind_ = Kind::LinearEquality;
  c.a_ = std::move(a);
  // Projector onto the null space of A via the row-space basis.
  const Svd svd = thin_svd(c.a_);
  const double cut = 1e-12 * (svd.sigma.size() ? svd.sigma(0) : 0.0);
  index_t rnk = 0;
  for (index_t i = 0; i < svd.sigma.size(); ++i) {
    if (svd.sigma(i) > cut) ++rnk;
  }
  const Eigen::MatrixXd vr = svd.v.leftCols(rnk);
  c.null_proj_ = Eigen::MatrixXd::Identity(c.a_.cols(), c.a_.cols()) - vr * vr.transpose();
  return c;
}

Cone Cone::linear_inequality(Eigen::MatrixXd a) {
  Cone c;
  c.kind_ = Kind::LinearInequality;
  c.a_ = std::move(a);
  return c;
}

Cone Cone::support_bound(index_t n) {
  if (n < 1) throw std::invalid_argument("support_bound: n must be >= 1");
  Cone c;
  c.kind_ = Kind::SupportBound;
  c.support_n_ = n;
  return c;
}

bool Cone::contains(const Tensor& x, double tol) const {
  switch (kind_) {
    case Kind::NonNegOrthant: {
      for (index_t i = 0; i < x.size(); ++i) {
        if (x[i] < -tol * (1.0 + std::abs(x[i]))) return false;
      }
      return true;
    }
    case Kind::LinearEquality: {
      const Eigen::VectorXd r = a_ * as_vector(x);
      return r.cwiseAbs().maxCoeff() <= tol * (1.0 + max_abs(x)) * (1.0 + a_.cwiseAbs().maxCoeff());
    }
    case Kind::LinearInequality: {
      const Eigen::VectorXd r = a_ * as_vector(x);
      return r.minCoeff() >= -tol * (1.0 + max_abs(x)) * (1.0 + a_.cwiseAbs().maxCoeff());
    }
    case Kind::SupportBound: {
      const double cut = tol * (1.0 + max_abs(x));
      index_t nnz = 0;
      for (index_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i]) > cut) ++nnz;
      }
      return nnz <= support_n_;
    }
  }
  return false;
}

Tensor Cone::project(const Tensor& x) const {
  switch (kind_) {
    case Kind::NonNegOrthant: {
      Tensor y = x;
      for (index_t i = 0; i < y.size(); ++i) y[i] = std::max(0.0, y[i]);
      return y;
    }
    case Kind::LinearEquality: {
      Tensor y = x;
      as_vector(y) = null_proj_ * as_vector(x);
      return y;
    }
    case Kind::LinearInequality: {
      // Dykstra over the half-spaces {a_i^T x >= 0}.
      Eigen::VectorXd y = as_vector(x);
      const index_t m = a_.rows();
      Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(m, y.size());
      for (int sweep = 0; sweep < 500; ++sweep) {
        double moved = 0.0;
        for (index_t i = 0; i < m; ++i) {
          const Eigen::VectorXd z = y + corr.row(i).transpose();
          const Eigen::VectorXd ai = a_.row(i).transpose();
          const double nn = ai.squaredNorm();
          Eigen::VectorXd p = z;
          if (nn > 0.0) {
            const double viol = ai.dot(z);
            if (viol < 0.0) p = z - (viol / nn) * ai;
          }
          corr.row(i) = (z - p).transpose();
          moved = std::max(moved, (p - y).cwiseAbs().maxCoeff());
          y = p;
        }
        if (moved <= 1e-14 * (1.0 + y.cwiseAbs().maxCoeff())) break;
      }
      Tensor out = x;
      as_vector(out) = y;
      return out;
    }
    case Kind::SupportBound: {
      Tensor y(x.shape());
      if (x.size() <= support_n_) return x;
      std::vector<index_t> idx(static_cast<size_t>(x.size()));
      std::iota(idx.begin(), idx.end(), index_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](index_t a, index_t b) {
        const double fa = std::abs(x[a]), fb = std::abs(x[b]);
        if (fa != fb) return fa > fb;
        return a < b;  // ties broken by lowest index
      });
      for (index_t j = 0; j < support_n_; ++j) y[idx[static_cast<size_t>(j)]] = x[idx[static_cast<size_t>(j)]];
      return y;
    }
  }
  return x;
}

std::string Cone::str() const {
  switch (kind_) {
    case Kind::NonNegOrthant: return "nonneg";
    case Kind::LinearEquality: return "linear-equality";
    case Kind::LinearInequality: return "linear-inequality";
    case Kind::SupportBound: return "support:" + std::to_string(support_n_);
  }
  return "?";
}

/* ------------------------------------------------------------------ */
/* Regularizers                                                        */
/* ------------------------------------------------------------------ */

Regularizer Regularizer::norm_product(std::vector<NormKind> norms) {
  if (norms.empty()) throw std::invalid_argument("norm_product: needs at least one norm");
  Regularizer r;
  r.kind_ = Kind::NormProduct;
  r.num_factors_ = static_cast<index_t>(norms.size());
  r.degree_ = static_cast<int>(norms.size());
  r.norms_ = std::move(norms);
  r.name_ = "norm-product";
  return r;
}

Regularizer Regularizer::power_sum(std::vector<NormKind> norms) {
  if (norms.empty()) throw std::invalid_argument("power_sum: needs at least one norm");
  Regularizer r;
  r.kind_ = Kind::PowerSum;
  r.num_factors_ = static_cast<index_t>(norms.size());
  r.degree_ = static_cast<int>(norms.size());
  r.norms_ = std::move(norms);
  r.name_ = "power-sum";
  return r;
}

Regularizer Regularizer::conic_norm_product(std::vector<NormKind> norms,
                                            std::vector<std::optional<Cone>> cones) {
  if (norms.size() != cones.size()) {
    throw std::invalid_argument("conic_norm_product: norms/cones length mismatch");
  }
  Regularizer r;
  r.kind_ = Kind::ConicNormProduct;
  r.num_factors_ = static_cast<index_t>(norms.size());
  r.degree_ = static_cast<int>(norms.size());
  r.norms_ = std::move(norms);
  r.cones_ = std::move(cones);
  r.name_ = "conic-norm-product";
  return r;
}

Regularizer Regularizer::custom(std::string name, int degree,
                                std::function<double(const std::vector<Tensor>&)> eval) {
  if (degree == 0) throw std::invalid_argument("custom regularizer: degree must be nonzero");
  Regularizer r;
  r.kind_ = Kind::Custom;
  r.degree_ = degree;
  r.num_factors_ = 0;  // unconstrained
  r.name_ = std::move(name);
  r.custom_eval_ = std::move(eval);
  return r;
}

bool Regularizer::has_cones() const {
  for (const auto& c : cones_) {
    if (c.has_value()) return true;
  }
  return false;
}

double Regularizer::eval(const std::vector<Tensor>& slices) const {
  switch (kind_) {
    case Kind::NormProduct: {
      double p = 1.0;
      for (size_t k = 0; k < slices.size(); ++k) p *= norm_value(norms_[k], slices[k]);
      return p;
    }
    case Kind::PowerSum: {
      const double kk = static_cast<double>(slices.size());
      double s = 0.0;
      for (size_t k = 0; k < slices.size(); ++k) {
        s += std::pow(norm_value(norms_[k], slices[k]), kk);
      }
      return s / kk;
    }
    case Kind::ConicNormProduct: {
      for (size_t k = 0; k < slices.size(); ++k) {
        if (cones_[k] && !cones_[k]->contains(slices[k])) return kInf;
      }
      double p = 1.0;
      for (size_t k = 0; k < slices.size(); ++k) p *= norm_value(norms_[k], slices[k]);
      return p;
    }
    case Kind::Custom:
      return custom_eval_(slices);
  }
  return kInf;
}

std::vector<Tensor> Regularizer::project_cones(const std::vector<Tensor>& slices) const {
  std::vector<Tensor> out;
  out.reserve(slices.size());
  for (size_t k = 0; k < slices.size(); ++k) out.push_back(project_cone(static_cast<index_t>(k), slices[k]));
  return out;
}

Tensor Regularizer::project_cone(index_t k, const Tensor& x) const {
  if (kind_ != Kind::ConicNormProduct) return x;
  const auto& c = cones_[static_cast<size_t>(k)];
  return c ? c->project(x) : x;
}

double eval_g(const Regularizer& reg, const std::vector<Tensor>& slices) {
  return reg.eval(slices);
}

/* ------------------------------------------------------------------ */
/* Pair validation                                                     */
/* ------------------------------------------------------------------ */

PairValidation validate_pair(const HomogeneousMap& map, const Regularizer& reg,
                             std::uint64_t seed) {
  PairValidation out;
  out.map_degree = map.degree();
  out.reg_degree = reg.degree();
  if (map.degree() != reg.degree()) {
    out.ok = false;
    out.message = "degree mismatch: map degree " + std::to_string(map.degree()) +
                  ", regularizer degree " + std::to_string(reg.degree());
    return out;
  }

  Rng rng(seed);
  const double p = static_cast<double>(map.degree());
  const index_t kk = map.num_factors();
  int valid_samples = 0;
  double worst = kInf;
  std::vector<double> worst_scales;

  for (int sample = 0; sample < 20; ++sample) {
    std::vector<Tensor> z;
    z.reserve(static_cast<size_t>(kk));
    for (index_t k = 0; k < kk; ++k) {
      Tensor t = rng.normal_tensor(map.input_shapes()[static_cast<size_t>(k)]);
      // favor cone interiors: custom regularizers with indicators normalize
      // better from nonnegative samples
      if (reg.kind() == Regularizer::Kind::ConicNormProduct ||
          reg.kind() == Regularizer::Kind::Custom) {
        for (index_t j = 0; j < t.size(); ++j) t[j] = std::abs(t[j]);
      }
      if (reg.kind() == Regularizer::Kind::ConicNormProduct) {
        t = reg.project_cone(k, t);
      }
      z.push_back(std::move(t));
    }
    double g0 = reg.eval(z);
    if (!std::isfinite(g0) || g0 <= 1e-14) continue;
    const Tensor img = eval_elemental(map, z);
    if (max_abs(img) <= 1e-12) continue;
    // normalize to g(z) = 1
    const double s = std::pow(g0, -1.0 / p);
    for (Tensor& t : z) {
      for (index_t j = 0; j < t.size(); ++j) t[j] *= s;
    }
    ++valid_samples;

    for (double range : {1.0, 2.5, 5.0}) {
      for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> c(static_cast<size_t>(kk));
        double logsum = 0.0;
        for (index_t k = 0; k < kk; ++k) {
          const double u = rng.uniform(-range, range);
          c[static_cast<size_t>(k)] = u;
          logsum += u;
        }
        // normalize so the product of scales is exactly 1
        std::vector<Tensor> zs = z;
        for (index_t k = 0; k < kk; ++k) {
          const double ck = std::exp(c[static_cast<size_t>(k)] - logsum / static_cast<double>(kk));
          c[static_cast<size_t>(k)] = ck;
          Tensor& t = zs[static_cast<size_t>(k)];
          for (index_t j = 0; j < t.size(); ++j) t[j] *= ck;
        }
        const double g = reg.eval(zs);
        if (std::isfinite(g) && g < worst) {
          worst = g;
          worst_scales = c;
        }
      }
    }

    if (reg.kind() == Regularizer::Kind::PowerSum) {
      // orbit minimum is the product of per-factor norms; it must stay
      // positive whenever phi(z) is nonzero
      double orbit_min = 1.0;
      for (index_t k = 0; k < kk; ++k) {
        orbit_min *= norm_value(reg.norms()[static_cast<size_t>(k)], z[static_cast<size_t>(k)]);
      }
      if (orbit_min <= 1e-12) {
        out.ok = false;
        out.message = "property-2 probe: rescaling orbit of a nonzero image collapses g to 0";
        out.violating_rescaling = worst_scales;
        return out;
      }
    }
  }

  if (valid_samples < 3) {
    out.ok = false;
    out.message = "property-2 probe: could not draw nonzero normalized samples";
    return out;
  }

  const bool orbit_invariant = reg.kind() == Regularizer::Kind::NormProduct ||
                               reg.kind() == Regularizer::Kind::ConicNormProduct;
  const double floor = orbit_invariant ? 1.0 - 1e-9
                       : reg.kind() == Regularizer::Kind::PowerSum ? 1e-9
                                                                   : 1e-3;
  if (worst < floor) {
    out.ok = false;
    std::string sc;
    for (double v : worst_scales) sc += (sc.empty() ? "" : ", ") + std::to_string(v);
    out.message = "property-2 probe: product-one rescaling (" + sc + ") drives g from 1 to " +
                  std::to_string(worst);
    out.violating_rescaling = worst_scales;
    return out;
  }

  out.ok = true;
  out.message = "pair valid (degree " + std::to_string(map.degree()) + ")";
  return out;
}

/* ------------------------------------------------------------------ */
/* Proximal kernels                                                    */
/* ------------------------------------------------------------------ */

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius) {
  if (radius <= 0.0) return Eigen::VectorXd::Zero(v.size());
  if (v.cwiseAbs().sum() <= radius) return v;
  std::vector<double> u(static_cast<size_t>(v.size()));
  for (index_t i = 0; i < v.size(); ++i) u[static_cast<size_t>(i)] = std::abs(v(i));
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - radius) / static_cast<double>(j + 1);
    if (j + 1 == u.size() || u[j + 1] <= t) {
      theta = t;
      break;
    }
  }
  Eigen::VectorXd out(v.size());
  for (index_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i)) - theta;
    out(i) = a > 0.0 ? (v(i) > 0 ? a : -a) : 0.0;
  }
  return out;
}

Tensor prox_weighted_norm(NormKind n, const Tensor& x, double weight, double stepsize) {
  if (stepsize <= 0.0) throw std::invalid_argument("prox: stepsize must be positive");
  const double tau = weight * stepsize;
  if (tau <= 0.0) return x;
  switch (n) {
    case NormKind::L2: {
      const double nx = frobenius_norm(x);
      if (nx <= tau) return Tensor(x.shape());
      return scale(x, 1.0 - tau / nx);
    }
    case NormKind::L1: {
      Tensor y = x;
      for (index_t i = 0; i < y.size(); ++i) {
        const double a = std::abs(y[i]) - tau;
        y[i] = a > 0.0 ? (y[i] > 0 ? a : -a) : 0.0;
      }
      return y;
    }
    case NormKind::LInf: {
      Tensor y = x;
      as_vector(y) = as_vector(x) - project_l1_ball(as_vector(x), tau);
      return y;
    }
  }
  return x;
}

Tensor prox_norm_power(NormKind n, const Tensor& x, double weight, int power, double stepsize) {
  if (power < 2) throw std::invalid_argument("prox_norm_power: power must be >= 2");
  if (weight <= 0.0) return x;
  if (power == 2 && n == NormKind::L2) {
    return scale(x, 1.0 / (1.0 + weight * stepsize));  // ridge
  }
  const double nx = norm_value(n, x);
  if (nx == 0.0) return x;
  // weight of the equivalent norm prox solves tau = weight * s(tau)^(p-1),
  // where s(tau) is the norm of the tau-prox; monotone in tau.
  double lo = 0.0, hi = weight * std::pow(nx, power - 1);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double s = norm_value(n, prox_weighted_norm(n, x, mid, stepsize));
    const double rhs = weight * std::pow(s, power - 1);
    if (mid < rhs) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-15 * (1.0 + hi)) break;
  }
  return prox_weighted_norm(n, x, 0.5 * (lo + hi), stepsize);
}

namespace {

double prox_objective(const Regularizer& reg, const std::vector<Tensor>& candidate,
                      const std::vector<Tensor>& anchor, double lambda, double stepsize) {
  double d2 = 0.0;
  for (size_t k = 0; k < candidate.size(); ++k) {
    const Tensor diff = sub(candidate[k], anchor[k]);
    d2 += inner(diff, diff);
  }
  return lambda * reg.eval(candidate) + d2 / (2.0 * stepsize);
}

}  // namespace

Tensor prox_block(const Regularizer& reg, index_t k, const std::vector<Tensor>& slices,
                  const Tensor& input, double lambda, double stepsize) {
  switch (reg.kind()) {
    case Regularizer::Kind::NormProduct: {
      double w = lambda;
      for (size_t j = 0; j < slices.size(); ++j) {
        if (static_cast<index_t>(j) != k) w *= norm_value(reg.norms()[j], slices[j]);
      }
      return prox_weighted_norm(reg.norms()[static_cast<size_t>(k)], input, w, stepsize);
    }
    case Regularizer::Kind::PowerSum:
      return prox_norm_power(reg.norms()[static_cast<size_t>(k)], input, lambda, reg.degree(),
                             stepsize);
    case Regularizer::Kind::ConicNormProduct: {
      double w = lambda;
      for (size_t j = 0; j < slices.size(); ++j) {
        if (static_cast<index_t>(j) != k) w *= norm_value(reg.norms()[j], slices[j]);
      }
      const Tensor projected = reg.project_cone(k, input);
      Tensor y = prox_weighted_norm(reg.norms()[static_cast<size_t>(k)], projected, w, stepsize);
      const auto& cone = reg.cones()[static_cast<size_t>(k)];
      if (cone && !cone->contains(y)) y = cone->project(y);
      return y;
    }
    case Regularizer::Kind::Custom:
      throw std::invalid_argument("prox_block: custom regularizers have no prox");
  }
  throw std::logic_error("prox_block: unknown kind");
}

std::vector<Tensor> prox_or_subgrad(const Regularizer& reg, const std::vector<Tensor>& slices,
                                    double stepsize) {
  if (stepsize <= 0.0) throw std::invalid_argument("prox_or_subgrad: stepsize must be positive");
  std::vector<Tensor> anchor = slices;
  if (reg.kind() == Regularizer::Kind::ConicNormProduct) anchor = reg.project_cones(slices);
  std::vector<Tensor> cur = anchor;
  const double before = prox_objective(reg, cur, anchor, 1.0, stepsize);
  for (size_t k = 0; k < cur.size(); ++k) {
    Tensor cand = prox_block(reg, static_cast<index_t>(k), cur, anchor[k], 1.0, stepsize);
    std::vector<Tensor> trial = cur;
    trial[k] = cand;
    if (prox_objective(reg, trial, anchor, 1.0, stepsize) <=
        prox_objective(reg, cur, anchor, 1.0, stepsize) + 1e-15) {
      cur = std::move(trial);
    }
  }
  if (prox_objective(reg, cur, anchor, 1.0, stepsize) > before) return anchor;
  return cur;
}

}  // namespace homopt
