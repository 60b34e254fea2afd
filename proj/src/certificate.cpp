#include "homopt/certificate.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "homopt/linalg.hpp"
#include "homopt/rng.hpp"

namespace homopt {

namespace {

bool exact_polar_pair(const HomogeneousMap& map, const Regularizer& reg) {
  if (map.kind() != MapKind::MatrixProduct) return false;
  if (reg.kind() != Regularizer::Kind::NormProduct) return false;
  for (NormKind n : reg.norms()) {
    if (n != NormKind::L2) return false;
  }
  return true;
}

FactorSet rank_one_factor_set(const std::vector<Tensor>& slices) {
  std::vector<Tensor> factors;
  factors.reserve(slices.size());
  for (const Tensor& s : slices) {
    std::vector<index_t> d = s.shape().dims();
    d.push_back(1);
    factors.push_back(Tensor(Shape(std::move(d)), s.values()));
  }
  return FactorSet(std::move(factors));
}

// argmax <coeff, d> over the unit ball of the declared norm intersected with
// the cone; exact for the orthant and support cones, projected heuristic for
// the linear cones.
Tensor direction_argmax(NormKind norm, const std::optional<Cone>& cone, const Tensor& coeff) {
  Tensor c = coeff;
  if (cone) {
    switch (cone->kind()) {
      case Cone::Kind::NonNegOrthant:
        for (index_t i = 0; i < c.size(); ++i) c[i] = std::max(0.0, c[i]);
        break;
      case Cone::Kind::SupportBound: {
        Tensor kept = cone->project(c);  // top-n magnitudes
        c = kept;
        break;
      }
      case Cone::Kind::LinearEquality:
      case Cone::Kind::LinearInequality:
        c = cone->project(c);
        break;
    }
  }
  Tensor d(c.shape());
  switch (norm) {
    case NormKind::L2: {
      const double n = frobenius_norm(c);
      if (n <= 0.0) return d;
      for (index_t i = 0; i < d.size(); ++i) d[i] = c[i] / n;
      break;
    }
    case NormKind::L1: {
      index_t best = -1;
      double mag = 0.0;
      for (index_t i = 0; i < c.size(); ++i) {
        if (std::abs(c[i]) > mag) {
          mag = std::abs(c[i]);
          best = i;
        }
      }
      if (best >= 0) d[best] = c[best] > 0 ? 1.0 : -1.0;
      break;
    }
    case NormKind::LInf: {
      for (index_t i = 0; i < c.size(); ++i) d[i] = c[i] > 0 ? 1.0 : (c[i] < 0 ? -1.0 : 0.0);
      break;
    }
  }
  if (cone && !cone->contains(d)) {
    d = cone->project(d);
    const double n = norm_value(norm, d);
    if (n > 0.0) {
      for (index_t i = 0; i < d.size(); ++i) d[i] /= n;
    }
  }
  return d;
}

double feasible_value(const HomogeneousMap& map, const Regularizer& reg, const Tensor& w,
                      const std::vector<Tensor>& z) {
  const double g = reg.eval(z);
  if (!std::isfinite(g) || g > 1.0 + 1e-9) return 0.0;
  return inner(w, eval_elemental(map, z));
}

}  // namespace

PolarResult polar_local_ascent(const HomogeneousMap& map, const Regularizer& reg, const Tensor& w,
                               std::vector<Tensor> z, int max_iters) {
  const index_t kk = map.num_factors();
  std::optional<Cone> nocone;
  PolarResult best;
  best.value = feasible_value(map, reg, w, z);
  best.maximizer = z;
  for (int it = 0; it < max_iters; ++it) {
    bool degenerate = false;
    for (index_t k = 0; k < kk; ++k) {
      const FactorSet fs1 = rank_one_factor_set(z);
      Tensor coeff = adjoint_grad_factor(map, fs1, w, k);
      // strip the trailing r=1 axis
      Tensor cvec(map.input_shapes()[static_cast<size_t>(k)], coeff.values());
      const auto& cone = reg.kind() == Regularizer::Kind::ConicNormProduct
                             ? reg.cones()[static_cast<size_t>(k)]
                             : nocone;
      Tensor d = direction_argmax(reg.norms().empty() ? NormKind::L2
                                                      : reg.norms()[static_cast<size_t>(k)],
                                  cone, cvec);
      if (max_abs(d) == 0.0) {
        degenerate = true;
        break;
      }
      z[static_cast<size_t>(k)] = std::move(d);
    }
    if (degenerate) break;
    const double v = feasible_value(map, reg, w, z);
    if (v > best.value + 1e-15 * (1.0 + std::abs(best.value))) {
      best.value = v;
      best.maximizer = z;
    } else {
      break;
    }
  }
  if (best.value <= 0.0) {
    best.value = 0.0;
    std::vector<Tensor> zeros;
    for (const Shape& s : map.input_shapes()) zeros.push_back(Tensor(s));
    best.maximizer = std::move(zeros);
  }
  return best;
}

PolarResult polar(const HomogeneousMap& map, const Regularizer& reg, const Tensor& w,
                  const PolarConfig& cfg) {
  if (w.shape() != map.output_shape()) {
    throw std::invalid_argument("polar: W shape " + w.shape().str() + " != map output shape " +
                                map.output_shape().str());
  }
  if (exact_polar_pair(map, reg)) {
    const Svd svd = thin_svd(as_matrix(w));
    PolarResult out;
    out.exact = true;
    out.value = svd.sigma(0);
    Tensor u(map.input_shapes()[0]);
    Tensor v(map.input_shapes()[1]);
    as_vector(u) = svd.u.col(0);
    as_vector(v) = svd.v.col(0);
    out.maximizer = {std::move(u), std::move(v)};
    return out;
  }

  PolarResult best;
  bool have = false;
  for (int rs = 0; rs < cfg.restarts; ++rs) {
    Rng rng(cfg.seed + 0x9e3779b9u * static_cast<std::uint64_t>(rs + 1));
    std::vector<Tensor> z0;
    z0.reserve(static_cast<size_t>(map.num_factors()));
    bool ok = true;
    for (index_t k = 0; k < map.num_factors(); ++k) {
      Tensor t = rng.normal_tensor(map.input_shapes()[static_cast<size_t>(k)]);
      if (reg.kind() == Regularizer::Kind::ConicNormProduct) {
        const auto& cone = reg.cones()[static_cast<size_t>(k)];
        if (cone && cone->kind() == Cone::Kind::NonNegOrthant) {
          for (index_t j = 0; j < t.size(); ++j) t[j] = std::abs(t[j]);
        } else if (cone) {
          t = cone->project(t);
        }
      }
      const double n = norm_value(reg.norms().empty() ? NormKind::L2
                                                      : reg.norms()[static_cast<size_t>(k)],
                                  t);
      if (n <= 1e-14) {
        ok = false;
        break;
      }
      for (index_t j = 0; j < t.size(); ++j) t[j] /= n;
      z0.push_back(std::move(t));
    }
    if (!ok) continue;
    PolarResult cand = polar_local_ascent(map, reg, w, std::move(z0), cfg.max_iters);
    if (!have || cand.value > best.value + 1e-15 * (1.0 + std::abs(best.value))) {
      best = std::move(cand);
      have = true;
    }
  }
  if (!have) {
    best.value = 0.0;
    for (const Shape& s : map.input_shapes()) best.maximizer.push_back(Tensor(s));
  }
  best.exact = false;
  return best;
}

std::string cert_status_name(CertStatus s) {
  switch (s) {
    case CertStatus::CertifiedGlobal: return "CertifiedGlobal";
    case CertStatus::LikelyGlobal: return "LikelyGlobal";
    case CertStatus::EscapeFound: return "EscapeFound";
    case CertStatus::Indeterminate: return "Indeterminate";
  }
  return "?";
}

std::vector<double> per_slice_alignment(const HomogeneousMap& map, const Regularizer& reg,
                                        const FactorSet& fs, const Tensor& w) {
  map.check_compatible(fs);
  std::vector<double> out;
  out.reserve(static_cast<size_t>(fs.r()));
  for (index_t i = 0; i < fs.r(); ++i) {
    const std::vector<Tensor> s = fs.slices(i);
    out.push_back(reg.eval(s) - inner(w, eval_elemental(map, s)));
  }
  return out;
}

Certificate check_global(const Problem& prob, const FactorSet& fs, const std::optional<Tensor>& q,
                         double cert_tol, const PolarConfig& polar_cfg) {
  Certificate cert;
  cert.cert_tol = cert_tol;
  const Tensor w = prob.dual_variable(fs, q);
  cert.sum_g = prob.sum_g(fs);
  const double align = std::abs(inner(w, eval_full(prob.map(), fs)) - cert.sum_g);
  cert.alignment_residual = align;

  const PolarResult pol = polar(prob.map(), prob.reg(), w, polar_cfg);
  cert.polar_value = pol.value;
  cert.polar_exact = pol.exact;

  std::ostringstream caveat;
  caveat << "Conditional on local minimality: the tested point is an approximate first-order "
            "stationary point and true local minimality is not verified.";
  if (!pol.exact) {
    caveat << " The polar value is a heuristic lower bound from multi-restart local ascent, so "
              "no global claim is made.";
  }
  cert.caveat = caveat.str();

  const bool polar_ok = pol.value <= 1.0 + cert_tol;
  const bool aligned = align <= cert_tol * (1.0 + cert.sum_g);
  if (polar_ok && aligned) {
    cert.status = pol.exact ? CertStatus::CertifiedGlobal : CertStatus::LikelyGlobal;
    return cert;
  }
  if (!polar_ok) {
    // the maximizer violates <W, phi(z)> <= g(z) strictly
    const double gz = prob.reg().eval(pol.maximizer);
    const double wz = inner(w, eval_elemental(prob.map(), pol.maximizer));
    if (std::isfinite(gz) && wz > gz + cert_tol) {
      cert.status = CertStatus::EscapeFound;
      cert.escape_direction = pol.maximizer;
      return cert;
    }
  }
  cert.status = CertStatus::Indeterminate;
  return cert;
}

std::string format_certificate(const Certificate& cert) {
  std::ostringstream os;
  os.precision(12);
  os << "status: " << cert_status_name(cert.status) << "\n";
  os << "polar_value: " << cert.polar_value << "\n";
  os << "polar_exact: " << (cert.polar_exact ? "true" : "false") << "\n";
  os << "alignment_residual: " << cert.alignment_residual << "\n";
  os << "sum_g: " << cert.sum_g << "\n";
  os << "cert_tol: " << cert.cert_tol << "\n";
  os << "caveat: " << cert.caveat << "\n";
  return os.str();
}

}  // namespace homopt
