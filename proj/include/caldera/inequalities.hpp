#ifndef CALDERA_INEQUALITIES_HPP
#define CALDERA_INEQUALITIES_HPP

// Grid checks of the K/D inequalities and of the K-order between two vectors.

#include "caldera/kfunctional.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace caldera {

template <typename Scalar = double>
struct InequalityViolation {
  Scalar t;
  std::string relation;
  Scalar lhs;
  Scalar rhs;
  bool solver_gap = false;  // could be explained by the certified solver gaps
};

template <typename Scalar = double>
struct InequalityReport {
  std::string name;
  std::vector<Scalar> t_grid;
  Scalar tolerance = 0;
  Scalar bound = 0;        // theoretical bound on max_ratio
  Scalar max_ratio = 0;    // largest observed upper/lower ratio
  std::size_t checks = 0;
  std::vector<InequalityViolation<Scalar>> violations;

  std::size_t math_violations() const {
    std::size_t k = 0;
    for (const auto& v : violations) k += v.solver_gap ? 0 : 1;
    return k;
  }
  std::size_t solver_gaps() const { return violations.size() - math_violations(); }
  bool passed() const { return violations.empty(); }
};

namespace detail {

template <typename Scalar>
void note_ratio(InequalityReport<Scalar>& rep, Scalar upper, Scalar lower) {
  if (lower > Scalar(0)) rep.max_ratio = std::max(rep.max_ratio, upper / lower);
}

template <typename Scalar>
void require_grid(const std::vector<Scalar>& grid) {
  if (grid.empty()) throw DomainError("t-grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require_positive_t(grid[i]);
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("t-grid must be increasing");
  }
}

}  // namespace detail

/// K(t, f) <= D(t, f) <= 2 K(t, f) on the grid.
template <typename Scalar>
InequalityReport<Scalar> check_k_d_sandwich(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f,
                                            const std::vector<Scalar>& t_grid, Scalar tol = Scalar(1e-9),
                                            const KSolverOptions& opt = {}) {
  detail::require_grid(t_grid);
  InequalityReport<Scalar> rep{"k-d-sandwich", t_grid, tol, Scalar(2), Scalar(0), 0, {}};
  const DFunctional<Scalar> dfun(couple, f);
  for (const Scalar t : t_grid) {
    const auto k = k_value(couple, f, t, opt);
    const Scalar d = dfun(t).value;
    ++rep.checks;
    if (!leq_rel(k.value - k.gap, d, tol)) rep.violations.push_back({t, "K <= D", k.value, d});
    if (!leq_rel(d, Scalar(2) * k.value, tol)) rep.violations.push_back({t, "D <= 2K", d, Scalar(2) * k.value});
    detail::note_ratio(rep, d, k.value);
  }
  return rep;
}

/// D(t, |f|^p; X)^(1/p) <= D(t^(1/p), f; X^(p)) <= 2^(1-1/p) D(t, |f|^p; X)^(1/p).
template <typename Scalar>
InequalityReport<Scalar> check_claim1(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f, Scalar p,
                                      const std::vector<Scalar>& t_grid, Scalar tol = Scalar(1e-9)) {
  using std::pow;
  detail::require_grid(t_grid);
  const auto convexified = convexify(couple, p);
  const Scalar c = pow(Scalar(2), Scalar(1) - Scalar(1) / p);
  InequalityReport<Scalar> rep{"claim1", t_grid, tol, c, Scalar(0), 0, {}};
  const DFunctional<Scalar> base(couple, abs_pow(f, p));
  const DFunctional<Scalar> conv(convexified, f);
  for (const Scalar t : t_grid) {
    const Scalar left = pow(base(t).value, Scalar(1) / p);
    const Scalar mid = conv(pow(t, Scalar(1) / p)).value;
    ++rep.checks;
    // Membership in the sum spaces: both sides finite.
    if (!std::isfinite(left) || !std::isfinite(mid)) {
      rep.violations.push_back({t, "membership", left, mid});
      continue;
    }
    if (!leq_rel(left, mid, tol)) rep.violations.push_back({t, "left <= middle", left, mid});
    if (!leq_rel(mid, c * left, tol)) rep.violations.push_back({t, "middle <= c left", mid, c * left});
    detail::note_ratio(rep, mid, left);
  }
  return rep;
}

/// K(t, |f|^p; X)^(1/p) <= K(t^(1/p), f; X^(p)) <= 2^(1-1/p) K(t, |f|^p; X)^(1/p),
/// and the consequence K(t, |f|^p) <= 2^p K(t^(1/p), f)^p <= 2^(2p) K(t, |f|^p).
/// An excess beyond tol that the certified solver gaps could explain is
/// reported as a solver gap, otherwise as a math violation.
template <typename Scalar>
InequalityReport<Scalar> check_maligranda(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f, Scalar p,
                                          const std::vector<Scalar>& t_grid, Scalar tol = Scalar(1e-6),
                                          const KSolverOptions& opt = {}) {
  using std::pow;
  detail::require_grid(t_grid);
  const auto convexified = convexify(couple, p);
  const Scalar c = pow(Scalar(2), Scalar(1) - Scalar(1) / p);
  InequalityReport<Scalar> rep{"maligranda", t_grid, tol, c, Scalar(0), 0, {}};
  const auto fp = abs_pow(f, p);
  const Scalar inv = Scalar(1) / p;
  for (const Scalar t : t_grid) {
    const auto kb = k_value(couple, fp, t, opt);
    const auto km = k_value(convexified, f, pow(t, inv), opt);
    // Certified ranges [value - gap, value] for both infima.
    const Scalar kb_lo = std::max(Scalar(0), kb.value - kb.gap), kb_hi = kb.value;
    const Scalar mid_lo = std::max(Scalar(0), km.value - km.gap), mid_hi = km.value;
    const Scalar left = pow(kb_hi, inv), left_lo = pow(kb_lo, inv);
    ++rep.checks;
    const auto check = [&](const char* relation, Scalar lhs, Scalar rhs, Scalar lhs_best, Scalar rhs_best) {
      if (leq_rel(lhs, rhs, tol)) return;
      rep.violations.push_back({t, relation, lhs, rhs, leq_rel(lhs_best, rhs_best, tol)});
    };
    check("left <= middle", left, mid_hi, left_lo, mid_hi);
    check("middle <= c left", mid_hi, c * left, mid_lo, c * left);
    const Scalar two_p = pow(Scalar(2), p);
    check("K <= 2^p middle^p", kb_hi, two_p * pow(mid_hi, p), kb_lo, two_p * pow(mid_hi, p));
    check("2^p middle^p <= 2^2p K", two_p * pow(mid_hi, p), two_p * two_p * kb_hi, two_p * pow(mid_lo, p),
          two_p * two_p * kb_hi);
    detail::note_ratio(rep, mid_hi, left);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// K-order
// ---------------------------------------------------------------------------

template <typename Scalar = double>
struct KOrderResult {
  bool dominates = true;
  std::optional<Scalar> first_violation;  // smallest violating t checked
  std::size_t points = 0;
  bool exact = false;                     // breakpoints of K(., g) were included
};

/// Whether K(t, g) <= K(t, f) (1 + 1e-9) at every grid point. For the
/// (L^1_w, L^inf) couple K(., g) is piecewise linear and K(., f) concave, so
/// the breakpoints of K(., g) (cumulative weights of its rearrangement) are
/// added and the check becomes exact. For nonnegative f, g on uniform weights
/// it must then agree with weak submajorization.
template <typename Scalar>
KOrderResult<Scalar> k_order_check(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f,
                                   const LatticeVector<Scalar>& g, const std::vector<Scalar>& t_grid,
                                   const KSolverOptions& opt = {}) {
  require_on(couple, f);
  require_on(couple, g);
  detail::require_grid(t_grid);
  const Scalar tol = Scalar(1e-9);
  std::vector<Scalar> ts = t_grid;
  KOrderResult<Scalar> out;
  if (couple.is_l1_linf()) {
    const auto& w = couple.space->weights();
    const auto r = decreasing_rearrangement(g.values());
    Scalar cum = 0;
    for (Index k = 0; k < g.size(); ++k) {
      cum += w[r.permutation[static_cast<std::size_t>(k)]];
      ts.push_back(cum);
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    out.exact = true;
  }
  for (const Scalar t : ts) {
    const auto kg = k_value(couple, g, t, opt);
    const auto kf = k_value(couple, f, t, opt);
    ++out.points;
    if (!leq_rel(kg.value - kg.gap, kf.value, tol)) {
      out.dominates = false;
      out.first_violation = t;
      break;
    }
  }
  if (out.exact && couple.space->is_uniform() && f.is_nonnegative() && g.is_nonnegative()) {
    const bool majorized = weak_submajorizes(f.values(), g.values(), tol);
    if (majorized != out.dominates) {
      throw InternalConsistencyError("K-order on the (L^1, L^inf) couple disagrees with weak submajorization");
    }
  }
  return out;
}

template <typename Scalar>
bool k_order_dominates(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f,
                       const LatticeVector<Scalar>& g, const std::vector<Scalar>& t_grid = default_grid<Scalar>(),
                       const KSolverOptions& opt = {}) {
  return k_order_check(couple, f, g, t_grid, opt).dominates;
}

}  // namespace caldera

#endif  // CALDERA_INEQUALITIES_HPP
