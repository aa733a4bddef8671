#ifndef CALDERA_LIFT_HPP
#define CALDERA_LIFT_HPP

// Lifting a K-ordered pair of the p-convexified (L^1, L^inf) couple to a
// linear operator L with Lf = g:
//   1. a positive T with T(alpha |f|^p) = |g|^p from weak submajorization,
//   2. the sublinear majorant H(h) = (T(alpha |h|^p))^(1/p), so H(f) = |g|,
//   3. row by row, a linear l with l.f = g_i dominated by H_i.
// Then |Lh| <= H(h) pointwise and ||Lh||_j <= (alpha ||T||_j)^(1/p) ||h||_j.

#include "caldera/extension.hpp"
#include "caldera/inequalities.hpp"

#include <optional>
#include <string>
#include <type_traits>
#include <vector>

namespace caldera {

enum class LiftMethod { Holder, Greedy };

inline std::string to_string(LiftMethod m) { return m == LiftMethod::Holder ? "holder" : "greedy"; }

inline LiftMethod parse_lift_method(const std::string& s) {
  if (s == "holder") return LiftMethod::Holder;
  if (s == "greedy") return LiftMethod::Greedy;
  throw DomainError("method must be holder or greedy");
}

template <typename Scalar = double>
struct NormSample {
  std::string norm;        // description of the convexified norm
  std::size_t samples = 0;
  Scalar max_ratio = 0;    // max ||Lh|| / ||h|| observed
  Scalar bound = 0;        // (alpha C)^(1/p) with C = 1
  Scalar operator_bound = 0;  // (alpha ||T||_j)^(1/p)
  std::size_t violations = 0;
};

template <typename Scalar = double>
struct LiftCertificates {
  Scalar residual = 0;                  // ||Lf - g||_inf / ||g||_inf
  std::size_t domination_checks = 0;
  std::size_t domination_violations = 0;
  Scalar max_domination_excess = 0;     // max (|Lh|_i - H_i(h)) / H_i(h)
  std::vector<NormSample<Scalar>> norm_samples;

  bool passed(Scalar residual_tol = Scalar(1e-8)) const {
    if (!(residual <= residual_tol) || domination_violations > 0) return false;
    for (const auto& s : norm_samples) if (s.violations > 0) return false;
    return true;
  }
};

template <typename Scalar = double>
struct LiftResult {
  MatrixOperator<Scalar> L;
  LiftMethod method;
  Scalar alpha;
  Scalar p;
  SublinearMajorant<Scalar> H;
  Scalar t_norm1;       // ||T||_{1 -> 1}
  Scalar t_norminf;     // ||T||_{inf -> inf}
  LiftCertificates<Scalar> certificates;
};

struct LiftOptions {
  std::size_t audit_samples = 10000;
  std::uint64_t seed = 0;
  GreedyOptions greedy{};
};

namespace detail {

template <typename Scalar>
void require_base_couple(const Couple<Scalar>& couple) {
  if (!couple.is_l1_linf() || couple.norm0.depth() != 0 || couple.norm1.depth() != 0) {
    throw DomainError("lift needs the base couple (L^1, L^inf)");
  }
  if (!couple.space->is_uniform()) throw DomainError("lift needs uniform weights");
}

/// Audit vectors: f, the signed unit vectors, then random vectors of varied
/// scale from per-sample streams.
template <typename Scalar>
std::vector<Vector<Scalar>> audit_vectors(const Vector<Scalar>& f, std::size_t samples, std::uint64_t seed) {
  const Index n = f.size();
  std::vector<Vector<Scalar>> hs;
  hs.push_back(f);
  for (Index j = 0; j < n; ++j) {
    hs.push_back(Vector<Scalar>::Unit(n, j));
    hs.push_back(-Vector<Scalar>::Unit(n, j));
  }
  for (std::size_t s = 0; hs.size() < samples; ++s) {
    Rng rng = Rng::stream(seed, s);
    Vector<Scalar> h(n);
    const int kind = static_cast<int>(s % 4);
    for (Index i = 0; i < n; ++i) {
      switch (kind) {
        case 0: h[i] = Scalar(rng.uniform(-1.0, 1.0)); break;
        case 1: h[i] = Scalar(rng.sign() * rng.log_uniform(1e-3, 1e3)); break;
        case 2: h[i] = f[i] * Scalar(rng.uniform(0.5, 1.5)); break;  // near f
        default: h[i] = rng.below(3) == 0 ? Scalar(0) : Scalar(rng.uniform(-1.0, 1.0)); break;
      }
    }
    hs.push_back(std::move(h));
  }
  if (hs.size() > samples && samples > 0) hs.resize(samples);
  return hs;
}

}  // namespace detail

/// Recomputes every certificate of a lift from scratch.
template <typename Scalar>
LiftCertificates<Scalar> audit_lift(const MatrixOperator<Scalar>& L, const SublinearMajorant<Scalar>& H,
                                    const LatticeVector<Scalar>& f, const LatticeVector<Scalar>& g,
                                    const Couple<Scalar>& convexified, Scalar t_norm1, Scalar t_norminf,
                                    std::size_t samples, std::uint64_t seed) {
  using std::pow;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar p = H.p();
  LiftCertificates<Scalar> cert;
  const Scalar gmax = g.values().cwiseAbs().maxCoeff();
  const Scalar res = (L.apply(f.values()) - g.values()).cwiseAbs().maxCoeff();
  cert.residual = gmax > Scalar(0) ? res / gmax : res;

  const Scalar norm_bound = pow(H.alpha(), Scalar(1) / p);
  NormSample<Scalar> s0{convexified.norm0.describe(), 0, 0, norm_bound, pow(H.alpha() * t_norm1, Scalar(1) / p), 0};
  NormSample<Scalar> s1{convexified.norm1.describe(), 0, 0, norm_bound, pow(H.alpha() * t_norminf, Scalar(1) / p), 0};
  const auto& w = convexified.space->weights();
  const Matrix<Scalar> abs_l = L.entries().cwiseAbs();
  for (const auto& h : detail::audit_vectors(f.values(), samples, seed)) {
    const Vector<Scalar> lh = L.apply(h);
    const Vector<Scalar> hh = H.apply(h);
    const Vector<Scalar> slack = abs_l * h.cwiseAbs();
    for (Index i = 0; i < h.size(); ++i) {
      ++cert.domination_checks;
      const Scalar excess = std::abs(lh[i]) - hh[i];
      if (hh[i] > Scalar(0)) cert.max_domination_excess = std::max(cert.max_domination_excess, excess / hh[i]);
      if (excess > Scalar(1e-9) * hh[i] + Scalar(64) * eps * slack[i]) ++cert.domination_violations;
    }
    for (auto* s : {&s0, &s1}) {
      const auto& spec = s == &s0 ? convexified.norm0 : convexified.norm1;
      const Scalar nh = norm(spec, w, h);
      if (!(nh > Scalar(0))) continue;
      const Scalar ratio = norm(spec, w, lh) / nh;
      ++s->samples;
      s->max_ratio = std::max(s->max_ratio, ratio);
      if (ratio > s->bound + Scalar(1e-9) || ratio > s->operator_bound * (Scalar(1) + Scalar(1e-9)) + Scalar(1e-12)) {
        ++s->violations;
      }
    }
  }
  cert.norm_samples = {s0, s1};
  return cert;
}

/// Executes the lift for a pair (f, g) on the base couple (L^1, L^inf) with
/// uniform weights; the target couple is its p-convexification. alpha defaults
/// to 2^(p-1).
template <typename Scalar>
LiftResult<Scalar> lift_operator(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f,
                                 const LatticeVector<Scalar>& g, Scalar p, LiftMethod method,
                                 std::optional<std::type_identity_t<Scalar>> alpha_opt = std::nullopt,
                                 const LiftOptions& opt = {}) {
  using std::pow;
  detail::require_base_couple(couple);
  require_on(couple, f);
  require_on(couple, g);
  if (!std::isfinite(p) || !(p > Scalar(1))) throw DomainError("p must lie in (1, inf)");
  const Scalar alpha = alpha_opt ? *alpha_opt : pow(Scalar(2), p - Scalar(1));
  if (!std::isfinite(alpha) || !(alpha > Scalar(0))) throw DomainError("alpha must be a positive real");
  const auto convexified = convexify(couple, p);

  const auto order = k_order_check(convexified, f, g, default_grid<Scalar>());
  if (!order.dominates) {
    throw OrderedPairError("K(t, g) > K(t, f) on the convexified couple", static_cast<double>(*order.first_violation));
  }

  const auto& space = couple.space;
  const Index n = f.size();
  const LatticeVector<Scalar> a(space, Vector<Scalar>(alpha * f.values().cwiseAbs().array().pow(p).matrix()));
  const LatticeVector<Scalar> b = abs_pow(g, p);
  if (auto k = first_submajorization_failure(a.values(), b.values(), Scalar(1e-12))) {
    throw OrderedPairError("|g|^p is not weakly submajorized by alpha |f|^p (prefix " + std::to_string(*k) + ")",
                           static_cast<double>(*k));
  }

  Matrix<Scalar> t_entries = Matrix<Scalar>::Zero(n, n);
  if (!a.is_zero()) t_entries = construct_positive_operator(a, b).op.entries();
  const MatrixOperator<Scalar> t_op(space, std::move(t_entries), true);
  const SublinearMajorant<Scalar> H(t_op, alpha, p);

  Matrix<Scalar> rows = Matrix<Scalar>::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    try {
      const auto q = H.row(i);
      rows.row(i) = (method == LiftMethod::Holder ? holder_extension_row(q, f.values(), g[i])
                                                  : greedy_hb_extension_row(q, f.values(), g[i], opt.greedy))
                        .transpose();
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(std::string(e.what()) + " (row " + std::to_string(i) + ")", e.best_value, e.gap);
    } catch (const DomainError& e) {
      throw DomainError(std::string(e.what()) + " (row " + std::to_string(i) + ")");
    }
  }
  MatrixOperator<Scalar> L(space, std::move(rows), false);
  const Scalar n1 = operator_norm_1(t_op), ninf = operator_norm_inf(t_op);
  auto cert = audit_lift(L, H, f, g, convexified, n1, ninf, opt.audit_samples, opt.seed);
  return LiftResult<Scalar>{std::move(L), method, alpha, p, H, n1, ninf, std::move(cert)};
}

/// Audit report of an existing lift; deterministic given the seed.
template <typename Scalar = double>
struct LiftAudit {
  LiftCertificates<Scalar> certificates;
  std::vector<std::string> regressions;
  bool passed() const { return regressions.empty(); }
};

template <typename Scalar>
LiftAudit<Scalar> verify_lift(const LiftResult<Scalar>& result, const LatticeVector<Scalar>& f,
                              const LatticeVector<Scalar>& g, const Couple<Scalar>& convexified,
                              std::size_t samples, std::uint64_t seed) {
  LiftAudit<Scalar> out;
  out.certificates = audit_lift(result.L, result.H, f, g, convexified, result.t_norm1, result.t_norminf, samples, seed);
  const auto& c = out.certificates;
  if (!(c.residual <= Scalar(1e-8))) out.regressions.push_back("residual " + std::to_string(c.residual));
  if (c.domination_violations > 0) {
    out.regressions.push_back(std::to_string(c.domination_violations) + " domination violations");
  }
  for (const auto& s : c.norm_samples) {
    if (s.violations > 0) out.regressions.push_back(std::to_string(s.violations) + " norm-ratio violations in " + s.norm);
  }
  return out;
}

}  // namespace caldera

#endif  // CALDERA_LIFT_HPP
