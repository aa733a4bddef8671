#ifndef CALDERA_KFUNCTIONAL_HPP
#define CALDERA_KFUNCTIONAL_HPP

// K- and D-functionals of a couple of weighted lattices on finitely many atoms.
//
//   K(t, f) = inf { |a0|_0 + t |a1|_1 : f = a0 + a1 }
//   D(t, f) = the same infimum over disjointly supported a0, a1
//
// Minimizing decompositions of a lattice couple can be taken sign-compatible
// with f and dominated by |f|, so K reduces to a box-constrained convex
// problem in x = |a0| in [0, |f|].

#include "caldera/lattice.hpp"
#include "caldera/majorization.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace caldera {

template <typename Scalar = double>
struct Decomposition {
  LatticeVector<Scalar> a0;
  LatticeVector<Scalar> a1;

  bool reproduces(const LatticeVector<Scalar>& f, Scalar rel = Scalar(1e-12)) const {
    const Vector<Scalar> sum = a0.values() + a1.values();
    const Scalar scale = f.values().cwiseAbs().maxCoeff();
    return ((sum - f.values()).cwiseAbs().array() <= rel * scale).all();
  }
  bool disjoint() const {
    return (a0.values().cwiseProduct(a1.values()).array() == Scalar(0)).all();
  }
};

template <typename Scalar = double>
struct KResult {
  Scalar value;                      // objective at the returned decomposition
  Decomposition<Scalar> decomposition;
  Scalar gap = 0;                    // certified: value - gap <= true infimum
  long iterations = 0;
};

template <typename Scalar = double>
struct DResult {
  Scalar value;
  Decomposition<Scalar> decomposition;
  std::uint32_t split_mask = 0;      // bit i set: atom i carried by a0
};

struct KSolverOptions {
  long max_iterations = 100000;
  double relative_gap = 1e-6;
};

// ---------------------------------------------------------------------------
// t-grids
// ---------------------------------------------------------------------------

/// `count` geometrically spaced points from lo to hi inclusive.
template <typename Scalar = double>
std::vector<Scalar> geometric_grid(Scalar lo, Scalar hi, int count) {
  using std::exp;
  using std::log;
  if (!(lo > Scalar(0)) || !(hi >= lo) || count < 1) {
    throw DomainError("geometric grid needs 0 < lo <= hi and count >= 1");
  }
  std::vector<Scalar> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const Scalar a = log(lo), b = log(hi);
  for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = exp(a + (b - a) * Scalar(i) / Scalar(count - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

/// 61 points on [1e-3, 1e3].
template <typename Scalar = double>
std::vector<Scalar> default_grid() {
  return geometric_grid<Scalar>(Scalar(1e-3), Scalar(1e3), 61);
}

/// Parses "geometric:<lo>,<hi>,<count>".
inline std::vector<double> parse_grid(const std::string& text) {
  const std::string prefix = "geometric:";
  if (text.rfind(prefix, 0) != 0) throw DomainError("t-grid must look like geometric:<lo>,<hi>,<count>");
  std::istringstream in(text.substr(prefix.size()));
  double lo = 0, hi = 0;
  int count = 0;
  char c1 = 0, c2 = 0;
  in >> lo >> c1 >> hi >> c2 >> count;
  if (!in || c1 != ',' || c2 != ',' || !(in >> std::ws).eof()) {
    throw DomainError("t-grid must look like geometric:<lo>,<hi>,<count>");
  }
  return geometric_grid<double>(lo, hi, count);
}

namespace detail {

template <typename Scalar>
void require_positive_t(Scalar t) {
  if (!(t > Scalar(0)) || !std::isfinite(t)) throw DomainError("t must be a positive finite real");
}

template <typename Scalar>
Decomposition<Scalar> split_by_magnitude(const LatticeVector<Scalar>& f, const Vector<Scalar>& x0) {
  // a0 = sign(f) * x0, a1 = f - a0.
  const Vector<Scalar> s = f.values().array().sign().matrix();
  Vector<Scalar> a0 = s.cwiseProduct(x0);
  Vector<Scalar> a1 = f.values() - a0;
  return {LatticeVector<Scalar>(f.space(), std::move(a0)), LatticeVector<Scalar>(f.space(), std::move(a1))};
}

/// Dual element of a weighted l^r norm at y >= 0 (weighted pairing): phi with
/// sum w phi y = |y| and dual norm 1.
template <typename Scalar>
Vector<Scalar> norm_dual_element(const Vector<Scalar>& w, const Vector<Scalar>& y,
                                 const Exponent<Scalar>& r) {
  using std::pow;
  const Index n = y.size();
  Vector<Scalar> phi = Vector<Scalar>::Zero(n);
  const Scalar m = n ? y.maxCoeff() : Scalar(0);
  if (!(m > Scalar(0))) return phi;
  if (r.is_infinite()) {
    Scalar mass = 0;
    for (Index i = 0; i < n; ++i) if (y[i] == m) mass += w[i];
    for (Index i = 0; i < n; ++i) if (y[i] == m) phi[i] = Scalar(1) / mass;
    return phi;
  }
  const Scalar q = r.value();
  if (q == Scalar(1)) return Vector<Scalar>::Ones(n);
  const Scalar nrm = weighted_norm(w, y, r);
  for (Index i = 0; i < n; ++i) phi[i] = pow(y[i] / nrm, q - Scalar(1));
  return phi;
}

/// Lower bound sum w u phi / max(N0*(phi), N1*(phi)/t) over candidate phi >= 0.
template <typename Scalar>
Scalar dual_lower_bound(const Vector<Scalar>& w, const Vector<Scalar>& u, Scalar t,
                        const Exponent<Scalar>& r0, const Exponent<Scalar>& r1,
                        const std::vector<Vector<Scalar>>& candidates) {
  Scalar best = 0;
  const auto d0 = r0.conjugate();
  const auto d1 = r1.conjugate();
  for (const auto& phi : candidates) {
    const Scalar scale = std::max(weighted_norm(w, phi, d0), weighted_norm(w, phi, d1) / t);
    if (!(scale > Scalar(0))) continue;
    best = std::max(best, w.dot(u.cwiseProduct(phi)) / scale);
  }
  return best;
}

/// Golden-section search for a convex function on [a, b]. Returns
/// (argmin, min, lower) where lower bounds g from below on all of [a, b].
template <typename Scalar, typename F>
std::array<Scalar, 3> golden_section(F&& g, Scalar a, Scalar b, Scalar ga, Scalar gb) {
  const Scalar ratio = Scalar(0.3819660112501051);
  Scalar x1 = a + ratio * (b - a), x2 = b - ratio * (b - a);
  Scalar g1 = g(x1), g2 = g(x2);
  // Discarded subintervals never hold a value below the retained points.
  for (int it = 0; it < 300; ++it) {
    if (!(b - a > Scalar(8) * std::numeric_limits<Scalar>::epsilon() * std::max(std::abs(a), std::abs(b)))) break;
    if (g1 <= g2) {
      b = x2; gb = g2;
      x2 = x1; g2 = g1;
      x1 = a + ratio * (b - a);
      g1 = g(x1);
    } else {
      a = x1; ga = g1;
      x1 = x2; g1 = g2;
      x2 = b - ratio * (b - a);
      g2 = g(x2);
    }
  }
  const std::array<Scalar, 4> xs{a, x1, x2, b};
  const std::array<Scalar, 4> gs{ga, g1, g2, gb};
  std::size_t best = 0;
  for (std::size_t i = 1; i < 4; ++i) if (gs[i] < gs[best]) best = i;
  // On each gap between sample points the secants of the neighbouring pairs,
  // extended, bound a convex function from below.
  const auto line = [&](std::size_t i, Scalar x) {
    return gs[i] + (gs[i + 1] - gs[i]) / (xs[i + 1] - xs[i]) * (x - xs[i]);
  };
  Scalar lower = gs[best];
  for (std::size_t j = 0; j + 1 < 4; ++j) {
    const Scalar lo = xs[j], hi = xs[j + 1];
    if (!(hi > lo)) continue;
    const bool has_left = j >= 1 && xs[j] > xs[j - 1];
    const bool has_right = j + 2 < 4 && xs[j + 2] > xs[j + 1];
    const auto envelope = [&](Scalar x) {
      Scalar v = -std::numeric_limits<Scalar>::infinity();
      if (has_left) v = std::max(v, line(j - 1, x));
      if (has_right) v = std::max(v, line(j + 1, x));
      return v;
    };
    Scalar region = std::min(envelope(lo), envelope(hi));
    if (has_left && has_right) {
      const Scalar s1 = (gs[j] - gs[j - 1]) / (xs[j] - xs[j - 1]);
      const Scalar s2 = (gs[j + 2] - gs[j + 1]) / (xs[j + 2] - xs[j + 1]);
      if (s2 > s1) {
        const Scalar x = (gs[j + 1] - s2 * xs[j + 1] - gs[j] + s1 * xs[j]) / (s1 - s2);
        if (x > lo && x < hi) region = std::min(region, envelope(x));
      }
    }
    if (!has_left && !has_right) region = std::min(gs[j], gs[j + 1]);
    lower = std::min(lower, region);
  }
  return {xs[best], gs[best], lower};
}

/// Exponent 1 is the only finite exponent that is not in (1, inf).
template <typename Scalar>
bool is_unit_exponent(const Exponent<Scalar>& r) {
  return !r.is_infinite() && r.value() == Scalar(1);
}

/// K when one member is an l^1 or l^inf norm. The optimality conditions then
/// force a truncation: one part is min(|f|, c) for a level c, the other the
/// remainder (|f| - c)_+.
template <typename Scalar>
KResult<Scalar> k_by_truncation(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f, Scalar t) {
  const auto& w = couple.space->weights();
  const Vector<Scalar> u = f.values().cwiseAbs();
  const auto r0 = couple.norm0.effective_exponent();
  const auto r1 = couple.norm1.effective_exponent();
  const bool cap_a1 = r1.is_infinite() || is_unit_exponent(r0);  // else a0 = min(u, c)
  // With an l^inf norm on the capped part the objective is convex in c;
  // otherwise it is only convex between consecutive levels |f_i|.
  const bool convex = cap_a1 ? r1.is_infinite() : r0.is_infinite();

  const auto objective = [&](Scalar c) {
    const Vector<Scalar> over = (u.array() - c).max(Scalar(0)).matrix();
    const Vector<Scalar> capped = u.cwiseMin(c);
    return cap_a1 ? weighted_norm(w, over, r0) + t * weighted_norm(w, capped, r1)
                  : weighted_norm(w, capped, r0) + t * weighted_norm(w, over, r1);
  };

  std::vector<Scalar> knots(u.data(), u.data() + u.size());
  knots.push_back(Scalar(0));
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  std::vector<Scalar> values(knots.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    values[i] = objective(knots[i]);
    if (values[i] < values[best]) best = i;
  }
  Scalar c_best = knots[best];
  Scalar v_best = values[best];
  Scalar lower = v_best;
  const auto refine = [&](std::size_t i) {
    const auto r = golden_section(objective, knots[i], knots[i + 1], values[i], values[i + 1]);
    if (r[1] < v_best) { v_best = r[1]; c_best = r[0]; }
    lower = std::min(lower, r[2]);
  };
  if (convex) {
    if (best > 0) refine(best - 1);
    if (best + 1 < knots.size()) refine(best);
  } else {
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) refine(i);
  }

  Vector<Scalar> a0_mag = cap_a1 ? Vector<Scalar>((u.array() - c_best).max(Scalar(0)).matrix())
                                 : Vector<Scalar>(u.cwiseMin(c_best));
  auto dec = split_by_magnitude(f, a0_mag);
  return KResult<Scalar>{v_best, std::move(dec), std::max(Scalar(0), v_best - lower), 0};
}

/// Dual lower bound from the dual elements of both parts at x = |a0|.
template <typename Scalar>
Scalar certificate_at(const Vector<Scalar>& w, const Vector<Scalar>& u, Scalar t, const Exponent<Scalar>& r0,
                      const Exponent<Scalar>& r1, const Vector<Scalar>& x) {
  const Vector<Scalar> p0 = norm_dual_element(w, x, r0);
  const Vector<Scalar> p1 = t * norm_dual_element(w, Vector<Scalar>(u - x), r1);
  return dual_lower_bound<Scalar>(w, u, t, r0, r1,
                                  {p0, p1, Vector<Scalar>(p0.cwiseMin(p1)), Vector<Scalar>(Scalar(0.5) * (p0 + p1))});
}

/// Both exponents in (1, inf): at the optimum (x_i / |x|_0)^(r0-1) =
/// t ((u_i - x_i) / |u - x|_1)^(r1-1) on every atom, so x lies on the curve
/// x_i^(r0-1) = s (u_i - x_i)^(r1-1), s > 0. Returns the best point found by a
/// scan in log s refined by golden section, with its dual certificate.
template <typename Scalar>
std::pair<KResult<Scalar>, Vector<Scalar>> k_by_optimality_curve(const Couple<Scalar>& couple,
                                                                  const LatticeVector<Scalar>& f, Scalar t) {
  using std::log;
  const auto& w = couple.space->weights();
  const Vector<Scalar> u = f.values().cwiseAbs();
  const auto r0 = couple.norm0.effective_exponent();
  const auto r1 = couple.norm1.effective_exponent();
  const Scalar a = r0.value() - Scalar(1), b = r1.value() - Scalar(1);
  const Index n = u.size();

  // y = x_i / u_i solves a log y - b log(1 - y) = sigma + (b - a) log u_i.
  const auto point = [&](Scalar sigma) {
    Vector<Scalar> x = Vector<Scalar>::Zero(n);
    for (Index i = 0; i < n; ++i) {
      if (!(u[i] > Scalar(0))) continue;
      const Scalar rho = sigma + (b - a) * log(u[i]);
      Scalar lo = 0, hi = 1;
      for (int it = 0; it < 64; ++it) {
        const Scalar mid = Scalar(0.5) * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (a * log(mid) - b * log1p(-mid) < rho) lo = mid; else hi = mid;
      }
      x[i] = u[i] * Scalar(0.5) * (lo + hi);
    }
    return x;
  };
  const auto objective = [&](Scalar sigma) {
    const Vector<Scalar> x = point(sigma);
    return weighted_norm(w, x, r0) + t * weighted_norm(w, Vector<Scalar>(u - x), r1);
  };

  Scalar lo_shift = std::numeric_limits<Scalar>::infinity(), hi_shift = -lo_shift;
  for (Index i = 0; i < n; ++i) {
    if (!(u[i] > Scalar(0))) continue;
    lo_shift = std::min(lo_shift, (a - b) * log(u[i]));
    hi_shift = std::max(hi_shift, (a - b) * log(u[i]));
  }
  const Scalar reach = Scalar(40) * std::max({a, b, Scalar(1)});
  const Scalar s_lo = lo_shift - reach, s_hi = hi_shift + reach;
  const int scan = 161;
  std::vector<Scalar> sig(scan), val(scan);
  int best = 0;
  for (int k = 0; k < scan; ++k) {
    sig[k] = s_lo + (s_hi - s_lo) * Scalar(k) / Scalar(scan - 1);
    val[k] = objective(sig[k]);
    if (val[k] < val[best]) best = k;
  }
  const int left = std::max(0, best - 1), right = std::min(scan - 1, best + 1);
  const auto r = golden_section(objective, sig[left], sig[right], val[left], val[right]);
  const Scalar sigma = r[1] < val[best] ? r[0] : sig[best];
  Vector<Scalar> x = point(sigma);
  const Scalar fx = weighted_norm(w, x, r0) + t * weighted_norm(w, Vector<Scalar>(u - x), r1);
  const Scalar lower = certificate_at(w, u, t, r0, r1, x);
  KResult<Scalar> out{fx, split_by_magnitude(f, x), std::max(Scalar(0), fx - lower), 0};
  return {std::move(out), std::move(x)};
}

/// Both exponents in (1, inf): accelerated projected gradient on x in [0, u]
/// from a warm start, stopped by a dual certificate.
template <typename Scalar>
KResult<Scalar> k_by_projected_gradient(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f,
                                        Scalar t, const KSolverOptions& opt, const Vector<Scalar>& start) {
  const auto& w = couple.space->weights();
  const Vector<Scalar> u = f.values().cwiseAbs();
  const auto r0 = couple.norm0.effective_exponent();
  const auto r1 = couple.norm1.effective_exponent();
  const Index n = u.size();

  const auto objective = [&](const Vector<Scalar>& x) {
    return weighted_norm(w, x, r0) + t * weighted_norm(w, Vector<Scalar>(u - x), r1);
  };
  // Gradient in the metric diag(w): phi0(x) - t phi1(u - x).
  const auto scaled_gradient = [&](const Vector<Scalar>& x) {
    return Vector<Scalar>(norm_dual_element(w, x, r0) - t * norm_dual_element(w, Vector<Scalar>(u - x), r1));
  };
  const auto project = [&](Vector<Scalar> x) { return Vector<Scalar>(x.cwiseMax(Scalar(0)).cwiseMin(u)); };
  const auto lower_bound = [&](const Vector<Scalar>& x) { return certificate_at(w, u, t, r0, r1, x); };

  // The corners x = u and x = 0 are certified optimal by their own dual
  // elements whenever they are optimal.
  Vector<Scalar> x = u;
  Scalar fx = objective(x);
  Scalar lower = lower_bound(x);
  for (const Vector<Scalar>& cand : {Vector<Scalar>(Vector<Scalar>::Zero(n)), start}) {
    const Scalar fc = objective(cand);
    lower = std::max(lower, lower_bound(cand));
    if (fc < fx) { x = cand; fx = fc; }
  }
  // Iterate from the warm start, which avoids the corners: there one of the
  // norms has a conical kink and the gradient step need not descend.
  Vector<Scalar> z = start;
  Scalar fz = objective(z);
  Vector<Scalar> y = z;
  Scalar momentum = 1;
  Scalar step = u.maxCoeff() / (Scalar(1) + t);
  long it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (fx - lower <= Scalar(opt.relative_gap) * fx) break;
    const Scalar fy = objective(y);
    const Vector<Scalar> gy = scaled_gradient(y);
    Vector<Scalar> zn;
    Scalar fn = 0;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      zn = project(y - step * gy);
      fn = objective(zn);
      const Vector<Scalar> d = zn - y;
      const Scalar model = fy + w.dot(gy.cwiseProduct(d)) + w.dot(d.cwiseProduct(d)) / (Scalar(2) * step);
      if (fn <= model + Scalar(1e-13) * std::abs(fy)) {
        accepted = true;
        break;
      }
      step *= Scalar(0.5);
    }
    if (!accepted || fn > fz) {
      if (y == z) break;  // no descent from the iterate itself
      y = z;
      momentum = 1;
      continue;
    }
    const Scalar next_momentum = (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * momentum * momentum)) / Scalar(2);
    y = project(Vector<Scalar>(zn + ((momentum - Scalar(1)) / next_momentum) * (zn - z)));
    momentum = next_momentum;
    z = zn;
    fz = fn;
    step *= Scalar(1.1);
    if (fz < fx) {
      x = z;
      fx = fz;
    }
    if (it % 10 == 0) lower = std::max(lower, lower_bound(z));
  }
  lower = std::max(lower, lower_bound(x));
  const Scalar gap = std::max(Scalar(0), fx - lower);
  if (gap > Scalar(opt.relative_gap) * fx) {
    throw NumericalFailure("K solver hit its iteration cap", static_cast<double>(fx), static_cast<double>(gap));
  }
  return KResult<Scalar>{fx, split_by_magnitude(f, x), gap, it};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// K
// ---------------------------------------------------------------------------

/// K(t, f; L^1_w, L^inf) via the weighted decreasing rearrangement: the
/// minimum over truncation levels c of |(|f| - c)_+|_1 + t c, attained at c = 0
/// or at one of the |f_i|.
template <typename Scalar>
KResult<Scalar> k_exact_l1_linf(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f, Scalar t) {
  require_on(couple, f);
  if (!couple.is_l1_linf()) throw DomainError("closed form K needs the (L^1, L^inf) couple");
  detail::require_positive_t(t);
  const auto& w = couple.space->weights();
  const auto r = decreasing_rearrangement(f.values());
  const Index n = f.size();
  // Prefix sums of w and w*u in rearranged order.
  Scalar pw = 0, pwu = 0;
  Scalar best = std::numeric_limits<Scalar>::infinity();
  Scalar c_best = 0;
  for (Index k = 0; k <= n; ++k) {
    const Scalar c = k < n ? r.sorted[k] : Scalar(0);
    const Scalar v = (pwu - c * pw) + t * c;
    if (v < best) {
      best = v;
      c_best = c;
    }
    if (k < n) {
      const Index i = r.permutation[static_cast<std::size_t>(k)];
      pw += w[i];
      pwu += w[i] * r.sorted[k];
    }
  }
  const Vector<Scalar> x0 = (f.values().cwiseAbs().array() - c_best).max(Scalar(0)).matrix();
  return KResult<Scalar>{best, detail::split_by_magnitude(f, x0), 0, 0};
}

/// K(t, f) for any couple of weighted l^p norms and their convexifications.
template <typename Scalar>
KResult<Scalar> k_numeric(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f, Scalar t,
                          const KSolverOptions& opt = {}) {
  require_on(couple, f);
  detail::require_positive_t(t);
  if (f.is_zero()) {
    return KResult<Scalar>{0, {LatticeVector<Scalar>::zero(f.space()), LatticeVector<Scalar>::zero(f.space())}, 0, 0};
  }
  const auto r0 = couple.norm0.effective_exponent();
  const auto r1 = couple.norm1.effective_exponent();
  if (r0.is_infinite() || r1.is_infinite() || detail::is_unit_exponent(r0) || detail::is_unit_exponent(r1)) {
    return detail::k_by_truncation(couple, f, t);
  }
  auto [curve, x] = detail::k_by_optimality_curve(couple, f, t);
  if (curve.gap <= Scalar(opt.relative_gap) * curve.value) return curve;
  return detail::k_by_projected_gradient(couple, f, t, opt, x);
}

/// Closed form when available, otherwise the numeric solver.
template <typename Scalar>
KResult<Scalar> k_value(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f, Scalar t,
                        const KSolverOptions& opt = {}) {
  return couple.is_l1_linf() ? k_exact_l1_linf(couple, f, t) : k_numeric(couple, f, t, opt);
}

// ---------------------------------------------------------------------------
// D
// ---------------------------------------------------------------------------

/// Exhaustive D-functional of a fixed f: the norms of f restricted to every
/// subset of atoms are tabulated once, then any t costs one pass over 2^n.
template <typename Scalar = double>
class DFunctional {
 public:
  static constexpr Index max_atoms = 22;

  DFunctional(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f) : f_(f) {
    require_on(couple, f);
    const Index n = f.size();
    if (n > max_atoms) {
      throw CapacityError("exhaustive D needs n <= 22; got n = " + std::to_string(n));
    }
    const std::size_t count = std::size_t{1} << n;
    full_ = static_cast<std::uint32_t>(count - 1);
    norm0_ = tabulate(couple.space->weights(), f.values().cwiseAbs(), couple.norm0.effective_exponent(), count);
    norm1_ = tabulate(couple.space->weights(), f.values().cwiseAbs(), couple.norm1.effective_exponent(), count);
  }

  DResult<Scalar> operator()(Scalar t) const {
    detail::require_positive_t(t);
    Scalar best = std::numeric_limits<Scalar>::infinity();
    std::uint32_t best_mask = 0;
    for (std::uint32_t e = 0; e <= full_; ++e) {
      const Scalar v = norm0_[e] + t * norm1_[full_ ^ e];
      if (v < best) {
        best = v;
        best_mask = e;
      }
      if (e == full_) break;
    }
    const Index n = f_.size();
    Vector<Scalar> a0 = Vector<Scalar>::Zero(n), a1 = Vector<Scalar>::Zero(n);
    for (Index i = 0; i < n; ++i) {
      if (best_mask >> i & 1U) a0[i] = f_[i]; else a1[i] = f_[i];
    }
    return DResult<Scalar>{best,
                           {LatticeVector<Scalar>(f_.space(), std::move(a0)), LatticeVector<Scalar>(f_.space(), std::move(a1))},
                           best_mask};
  }

 private:
  static std::vector<Scalar> tabulate(const Vector<Scalar>& w, const Vector<Scalar>& u,
                                      const Exponent<Scalar>& r, std::size_t count) {
    using std::pow;
    std::vector<Scalar> table(count, Scalar(0));
    const Scalar m = u.size() ? u.maxCoeff() : Scalar(0);
    if (!(m > Scalar(0))) return table;
    const bool inf = r.is_infinite();
    const Scalar q = inf ? Scalar(1) : r.value();
    std::vector<Scalar> term(static_cast<std::size_t>(u.size()));
    for (Index i = 0; i < u.size(); ++i) {
      term[static_cast<std::size_t>(i)] = inf ? u[i] : w[i] * pow(u[i] / m, q);
    }
    for (std::size_t e = 1; e < count; ++e) {
      const int low = std::countr_zero(e);
      const Scalar rest = table[e & (e - 1)];
      table[e] = inf ? std::max(rest, term[static_cast<std::size_t>(low)]) : rest + term[static_cast<std::size_t>(low)];
    }
    if (!inf) {
      for (auto& v : table) v = q == Scalar(1) ? m * v : m * pow(v, Scalar(1) / q);
    }
    return table;
  }

  LatticeVector<Scalar> f_;
  std::uint32_t full_ = 0;
  std::vector<Scalar> norm0_;  // |f chi_E|_0 indexed by E
  std::vector<Scalar> norm1_;  // |f chi_E|_1 indexed by E
};

template <typename Scalar>
DResult<Scalar> d_exact(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f, Scalar t) {
  return DFunctional<Scalar>(couple, f)(t);
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

enum class FunctionalKind { K, D };

template <typename Scalar = double>
struct KProfile {
  std::vector<Scalar> t_grid;
  std::vector<Scalar> values;
  std::vector<Scalar> a0_norms;
  std::vector<Scalar> a1_norms;
  std::vector<Scalar> gaps;
  FunctionalKind kind;
};

namespace detail {

template <typename Scalar>
void enforce_profile_shape(const KProfile<Scalar>& prof) {
  const auto& t = prof.t_grid;
  const auto& v = prof.values;
  Scalar vmax = 0, gmax = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    vmax = std::max(vmax, v[i]);
    gmax = std::max(gmax, prof.gaps[i]);
  }
  const Scalar slack = Scalar(1e-9) * vmax + Scalar(2) * gmax;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[i - 1] - slack) throw PropertyViolation("profile is not nondecreasing", static_cast<double>(t[i]));
    if (prof.kind == FunctionalKind::K && v[i] / t[i] > v[i - 1] / t[i - 1] + slack / t[i]) {
      throw PropertyViolation("K(t)/t is not nonincreasing", static_cast<double>(t[i]));
    }
  }
  if (prof.kind != FunctionalKind::K) return;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    const Scalar chord = ((t[i + 1] - t[i]) * v[i - 1] + (t[i] - t[i - 1]) * v[i + 1]) / (t[i + 1] - t[i - 1]);
    if (v[i] < chord - slack) throw PropertyViolation("K profile is not concave", static_cast<double>(t[i]));
  }
}

}  // namespace detail

/// The K or D functional of f over a grid of t values, with shape checks.
template <typename Scalar>
KProfile<Scalar> profile(FunctionalKind kind, const Couple<Scalar>& couple, const LatticeVector<Scalar>& f,
                         const std::vector<Scalar>& t_grid, const KSolverOptions& opt = {}) {
  require_on(couple, f);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    detail::require_positive_t(t_grid[i]);
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) throw DomainError("t-grid must be increasing");
  }
  KProfile<Scalar> prof{t_grid, {}, {}, {}, {}, kind};
  std::optional<DFunctional<Scalar>> dfun;
  if (kind == FunctionalKind::D) dfun.emplace(couple, f);
  const auto& w = couple.space->weights();
  for (const Scalar t : t_grid) {
    try {
      if (kind == FunctionalKind::K) {
        const auto r = k_value(couple, f, t, opt);
        prof.values.push_back(r.value);
        prof.gaps.push_back(r.gap);
        prof.a0_norms.push_back(norm(couple.norm0, w, r.decomposition.a0.values()));
        prof.a1_norms.push_back(norm(couple.norm1, w, r.decomposition.a1.values()));
      } else {
        const auto r = (*dfun)(t);
        prof.values.push_back(r.value);
        prof.gaps.push_back(0);
        prof.a0_norms.push_back(norm(couple.norm0, w, r.decomposition.a0.values()));
        prof.a1_norms.push_back(norm(couple.norm1, w, r.decomposition.a1.values()));
      }
    } catch (const NumericalFailure& e) {
      std::ostringstream msg;
      msg << e.what() << " at t = " << t;
      throw NumericalFailure(msg.str(), e.best_value, e.gap);
    }
  }
  detail::enforce_profile_shape(prof);
  return prof;
}

}  // namespace caldera

#endif  // CALDERA_KFUNCTIONAL_HPP
