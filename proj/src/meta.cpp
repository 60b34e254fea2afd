#include "homopt/meta.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

#include "homopt/linalg.hpp"

namespace homopt {

std::optional<ThetaDirection> find_null_theta(const HomogeneousMap& map, const Regularizer& reg,
                                              const FactorSet& fs, double null_tol) {
  const index_t r = fs.r();
  const index_t card = map.output_shape().cardinality();
  const Tensor m = vec_phi_matrix(map, fs);
  const Eigen::MatrixXd md = as_matrix(m);
  // full V: when r > card(D) the null-space vectors live past the thin part
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(md, Eigen::ComputeFullV);
  const index_t nsv = svd.singularValues().size();
  const double sigma_max = nsv > 0 ? svd.singularValues()(0) : 0.0;
  const double sigma_min = r <= card ? svd.singularValues()(r - 1) : 0.0;
  if (sigma_min > null_tol * (sigma_max + 1.0)) return std::nullopt;

  Eigen::VectorXd v = svd.matrixV().col(r - 1);
  double mn = v.minCoeff();
  if (mn >= 0.0) {
    v = -v;
    mn = v.minCoeff();
  }
  if (mn >= 0.0) return std::nullopt;  // cannot happen for a unit vector
  v /= -mn;  // min entry becomes exactly -1

  ThetaDirection out;
  out.theta.assign(v.data(), v.data() + v.size());
  out.null_residual = (md * v).norm();
  double gres = 0.0;
  for (index_t i = 0; i < r; ++i) {
    gres += out.theta[static_cast<size_t>(i)] * reg.eval(fs.slices(i));
  }
  out.g_residual = gres;
  return out;
}

FactorSet collapse_slice(const HomogeneousMap& map, const FactorSet& fs,
                         const ThetaDirection& theta) {
  if (static_cast<index_t>(theta.theta.size()) != fs.r()) {
    throw std::invalid_argument("collapse_slice: theta length != r");
  }
  const double p = static_cast<double>(map.degree());
  FactorSet out = fs;
  for (index_t i = 0; i < fs.r(); ++i) {
    double s = 1.0 + theta.theta[static_cast<size_t>(i)];
    if (s < 0.0) {
      if (s < -1e-9) {
        throw std::logic_error("collapse_slice: negative slice scale; theta not scaled to min -1");
      }
      s = 0.0;
    }
    if (s == 0.0) {
      out.zero_slice(i);
    } else if (s != 1.0) {
      out.scale_slice(i, std::pow(s, 1.0 / p));
    }
  }
  return out;
}

std::vector<double> collapse_path_objectives(const Problem& prob, const FactorSet& fs,
                                             const std::optional<Tensor>& q,
                                             const ThetaDirection& theta,
                                             const std::vector<double>& gammas) {
  std::vector<double> out;
  out.reserve(gammas.size());
  const double p = static_cast<double>(prob.map().degree());
  for (double gamma : gammas) {
    FactorSet path = fs;
    for (index_t i = 0; i < fs.r(); ++i) {
      double s = 1.0 + gamma * theta.theta[static_cast<size_t>(i)];
      if (s < 0.0) s = 0.0;
      if (s == 0.0) {
        path.zero_slice(i);
      } else if (s != 1.0) {
        path.scale_slice(i, std::pow(s, 1.0 / p));
      }
    }
    out.push_back(prob.objective_factored(path, q));
  }
  return out;
}

FactorSet append_zero_slice(const FactorSet& fs) {
  std::vector<Tensor> factors;
  factors.reserve(static_cast<size_t>(fs.num_factors()));
  for (index_t k = 0; k < fs.num_factors(); ++k) {
    const Tensor zero(fs.factor(k).shape().with_last(1));
    factors.push_back(concat_last(fs.factor(k), zero));
  }
  return FactorSet(std::move(factors));
}

std::string meta_event_name(MetaEventKind k) {
  switch (k) {
    case MetaEventKind::Descended: return "descended";
    case MetaEventKind::Collapsed: return "collapsed";
    case MetaEventKind::Appended: return "appended";
    case MetaEventKind::Seeded: return "seeded";
    case MetaEventKind::Certified: return "certified";
  }
  return "?";
}

namespace {

// Replace the zero slice at index i0 with eps * direction and shrink eps until
// the objective strictly decreases; returns false if no decrease is found.
bool seed_slice(const Problem& prob, FactorSet& fs, const std::optional<Tensor>& q, index_t i0,
                const std::vector<Tensor>& direction, double eps, double& f_out) {
  const double f0 = prob.objective_factored(fs, q);
  for (int tries = 0; tries < 8; ++tries) {
    FactorSet trial = fs;
    for (index_t k = 0; k < fs.num_factors(); ++k) {
      trial.set_slice(k, i0, scale(direction[static_cast<size_t>(k)], eps));
    }
    const double f = prob.objective_factored(trial, q);
    if (std::isfinite(f) && f < f0) {
      fs = std::move(trial);
      f_out = f;
      return true;
    }
    eps *= 0.25;
  }
  f_out = f0;
  return false;
}

}  // namespace

MetaResult run_meta(const Problem& prob, FactorSet init, std::optional<Tensor> q_init,
                    const MetaConfig& cfg) {
  MetaResult res;
  res.factors = std::move(init);
  res.q = std::move(q_init);
  const index_t card = prob.map().output_shape().cardinality();
  const index_t r_limit = std::max(res.factors.r(), card + 1);
  int indeterminate_streak = 0;

  for (int outer = 1; outer <= cfg.outer_cap; ++outer) {
    res.outer_iterations = outer;
    DescentResult d = descend(prob, std::move(res.factors), std::move(res.q), cfg.descent);
    res.factors = std::move(d.factors);
    res.q = std::move(d.q);
    res.descent_traces.push_back(std::move(d.trace));
    res.events.push_back({outer, MetaEventKind::Descended, res.factors.r(), d.objective});

    const double zero_tol = cfg.zero_slice_tol * (1.0 + res.factors.max_abs());
    const std::optional<index_t> zero_idx = res.factors.first_zero_slice(zero_tol);

    if (zero_idx.has_value()) {
      Certificate cert = check_global(prob, res.factors, res.q, cfg.cert_tol, cfg.polar);
      if (cert.status == CertStatus::CertifiedGlobal || cert.status == CertStatus::LikelyGlobal) {
        res.events.push_back({outer, MetaEventKind::Certified, res.factors.r(), d.objective});
        res.certificate = std::move(cert);
        res.r_final = res.factors.r();
        return res;
      }
      if (cert.status == CertStatus::EscapeFound) {
        double f_new = d.objective;
        if (seed_slice(prob, res.factors, res.q, *zero_idx, *cert.escape_direction,
                       cfg.escape_eps, f_new)) {
          res.events.push_back({outer, MetaEventKind::Seeded, res.factors.r(), f_new});
          indeterminate_streak = 0;
          continue;
        }
      }
      if (++indeterminate_streak >= 2) {
        res.certificate = std::move(cert);
        res.certificate.status = CertStatus::Indeterminate;
        res.r_final = res.factors.r();
        return res;
      }
      continue;
    }

    const std::optional<ThetaDirection> theta =
        find_null_theta(prob.map(), prob.reg(), res.factors, cfg.null_tol);
    if (theta.has_value()) {
      res.factors = collapse_slice(prob.map(), res.factors, *theta);
      const double f = prob.objective_factored(res.factors, res.q);
      res.events.push_back({outer, MetaEventKind::Collapsed, res.factors.r(), f});
      indeterminate_streak = 0;
      continue;
    }

    if (res.factors.r() + 1 > r_limit) {
      throw std::logic_error("run_meta: size bound would be exceeded without a null direction");
    }
    res.factors = append_zero_slice(res.factors);
    res.events.push_back({outer, MetaEventKind::Appended, res.factors.r(), d.objective});

    Certificate cert = check_global(prob, res.factors, res.q, cfg.cert_tol, cfg.polar);
    if (cert.status == CertStatus::CertifiedGlobal || cert.status == CertStatus::LikelyGlobal) {
      res.events.push_back({outer, MetaEventKind::Certified, res.factors.r(), d.objective});
      res.certificate = std::move(cert);
      res.r_final = res.factors.r();
      return res;
    }
    if (cert.status == CertStatus::EscapeFound) {
      double f_new = d.objective;
      if (seed_slice(prob, res.factors, res.q, res.factors.r() - 1, *cert.escape_direction,
                     cfg.escape_eps, f_new)) {
        res.events.push_back({outer, MetaEventKind::Seeded, res.factors.r(), f_new});
        indeterminate_streak = 0;
        continue;
      }
    }
    if (++indeterminate_streak >= 2) {
      res.certificate = std::move(cert);
      res.certificate.status = CertStatus::Indeterminate;
      res.r_final = res.factors.r();
      return res;
    }
  }

  // outer cap exhausted: the status stays Indeterminate even if the final
  // point would certify
  Certificate cert = check_global(prob, res.factors, res.q, cfg.cert_tol, cfg.polar);
  cert.status = CertStatus::Indeterminate;
  cert.caveat += " Outer iteration cap reached before certification.";
  res.certificate = std::move(cert);
  res.r_final = res.factors.r();
  return res;
}

}  // namespace homopt
