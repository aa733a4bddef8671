#ifndef CALDERA_EXTENSION_HPP
#define CALDERA_EXTENSION_HPP

// The sublinear majorant H(h) = (T(alpha |h|^p))^(1/p) of a positive operator
// and dominated extension of a functional given on span{f}: find a linear
// row l with l.f = g_i and |l.h| <= H_i(h) for every h.

#include "caldera/majorization.hpp"
#include "caldera/rng.hpp"

#include <string>
#include <vector>

namespace caldera {

/// One coordinate of H: the weighted l^p seminorm q(h) = (sum_j w_j |h_j|^p)^(1/p)
/// with w_j = alpha T_ij >= 0.
template <typename Scalar = double>
class RowMajorant {
 public:
  RowMajorant(Vector<Scalar> weights, Scalar p) : w_(std::move(weights)), p_(p) {
    if (!std::isfinite(p) || !(p > Scalar(1))) throw DomainError("majorant exponent must lie in (1, inf)");
    if ((w_.array() < Scalar(0)).any() || !w_.allFinite()) throw DomainError("row weights must be finite and >= 0");
  }

  const Vector<Scalar>& weights() const { return w_; }
  Scalar p() const { return p_; }
  Index size() const { return w_.size(); }

  template <typename Derived>
  Scalar value(const Eigen::MatrixBase<Derived>& h) const {
    using std::pow;
    const Scalar m = h.cwiseAbs().maxCoeff();
    if (!(m > Scalar(0))) return Scalar(0);
    const Scalar s = w_.dot((h.cwiseAbs() / m).array().pow(p_).matrix());
    return s > Scalar(0) ? m * pow(s, Scalar(1) / p_) : Scalar(0);
  }

  /// A subgradient at h: the gradient where q(h) > 0, and 0 otherwise.
  template <typename Derived>
  Vector<Scalar> subgradient(const Eigen::MatrixBase<Derived>& h) const {
    using std::pow;
    const Index n = w_.size();
    Vector<Scalar> s = Vector<Scalar>::Zero(n);
    const Scalar q = value(h);
    if (!(q > Scalar(0))) return s;
    const Scalar m = h.cwiseAbs().maxCoeff();
    const Scalar qm = pow(q / m, p_ - Scalar(1));
    for (Index j = 0; j < n; ++j) {
      if (h[j] == Scalar(0) || w_[j] == Scalar(0)) continue;
      const Scalar v = w_[j] * pow(std::abs(h[j]) / m, p_ - Scalar(1)) / qm;
      s[j] = h[j] > Scalar(0) ? v : -v;
    }
    return s;
  }

 private:
  Vector<Scalar> w_;
  Scalar p_;
};

/// H(h) = (T(alpha |h|^p))^(1/p) for a positive operator T.
template <typename Scalar = double>
class SublinearMajorant {
 public:
  SublinearMajorant(MatrixOperator<Scalar> t, Scalar alpha, Scalar p) : t_(std::move(t)), alpha_(alpha), p_(p) {
    if (!t_.positive()) throw DomainError("majorant needs a positive operator");
    if (!std::isfinite(alpha) || !(alpha > Scalar(0))) throw DomainError("alpha must be a positive real");
    if (!std::isfinite(p) || !(p > Scalar(1))) throw DomainError("majorant exponent must lie in (1, inf)");
  }

  const MatrixOperator<Scalar>& op() const { return t_; }
  Scalar alpha() const { return alpha_; }
  Scalar p() const { return p_; }
  Index size() const { return t_.size(); }

  template <typename Derived>
  Vector<Scalar> apply(const Eigen::MatrixBase<Derived>& h) const {
    using std::pow;
    if (h.size() != size()) throw StructuralError("majorant applied to a vector of wrong length");
    Vector<Scalar> out = Vector<Scalar>::Zero(size());
    const Scalar m = h.cwiseAbs().maxCoeff();
    if (!(m > Scalar(0))) return out;
    const Vector<Scalar> v = t_.entries() * Vector<Scalar>((h.cwiseAbs() / m).array().pow(p_).matrix());
    for (Index i = 0; i < size(); ++i) out[i] = m * pow(alpha_ * v[i], Scalar(1) / p_);
    return out;
  }

  RowMajorant<Scalar> row(Index i) const {
    return RowMajorant<Scalar>(Vector<Scalar>(alpha_ * t_.entries().row(i).transpose()), p_);
  }

 private:
  MatrixOperator<Scalar> t_;
  Scalar alpha_;
  Scalar p_;
};

template <typename Scalar>
LatticeVector<Scalar> apply_majorant(const SublinearMajorant<Scalar>& h_op, const LatticeVector<Scalar>& h) {
  if (!same_space(h_op.op().space(), h.space())) throw StructuralError("majorant applied across spaces");
  return LatticeVector<Scalar>(h.space(), h_op.apply(h.values()));
}

// ---------------------------------------------------------------------------
// Pointwise checks
// ---------------------------------------------------------------------------

template <typename Scalar = double>
struct PointwiseReport {
  std::size_t checks = 0;
  std::vector<Index> violating_atoms;  // for single checks
  std::size_t violations = 0;
  Scalar max_excess = 0;               // largest lhs - rhs seen
  bool passed() const { return violations == 0; }
};

/// (G|h1 + h2|^p)^(1/p) <= (G|h1|^p)^(1/p) + (G|h2|^p)^(1/p) on every atom.
template <typename Scalar>
PointwiseReport<Scalar> check_minkowski(const MatrixOperator<Scalar>& g, const Vector<Scalar>& h1,
                                        const Vector<Scalar>& h2, Scalar p, Scalar tol = Scalar(1e-12)) {
  if (h1.size() != g.size() || h2.size() != g.size()) throw StructuralError("Minkowski check: length mismatch");
  const SublinearMajorant<Scalar> m(g, Scalar(1), p);
  const Vector<Scalar> lhs = m.apply(Vector<Scalar>(h1 + h2));
  const Vector<Scalar> rhs = m.apply(h1) + m.apply(h2);
  PointwiseReport<Scalar> rep;
  for (Index i = 0; i < g.size(); ++i) {
    ++rep.checks;
    const Scalar excess = lhs[i] - rhs[i];
    rep.max_excess = std::max(rep.max_excess, excess);
    if (excess > tol) {
      rep.violating_atoms.push_back(i);
      ++rep.violations;
    }
  }
  return rep;
}

/// H(lambda h) = |lambda| H(h) and H(h1 + h2) <= H(h1) + H(h2) on random samples.
template <typename Scalar>
PointwiseReport<Scalar> check_sublinear(const SublinearMajorant<Scalar>& h_op, std::size_t samples,
                                        std::uint64_t seed) {
  const Index n = h_op.size();
  PointwiseReport<Scalar> rep;
  const auto draw = [&](Rng& rng) {
    Vector<Scalar> h(n);
    for (Index i = 0; i < n; ++i) h[i] = Scalar(rng.uniform(-1.0, 1.0));
    return h;
  };
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = Rng::stream(seed, s);
    const Vector<Scalar> h1 = draw(rng), h2 = draw(rng);
    Scalar lambda = Scalar(rng.uniform(-10.0, 10.0));
    if (s % 8 == 0) lambda = Scalar(-1);
    if (s % 8 == 1) lambda = Scalar(0);
    const Vector<Scalar> a = h_op.apply(Vector<Scalar>(lambda * h1));
    const Vector<Scalar> b = std::abs(lambda) * h_op.apply(h1);
    const Vector<Scalar> sum = h_op.apply(Vector<Scalar>(h1 + h2));
    const Vector<Scalar> bound = h_op.apply(h1) + h_op.apply(h2);
    for (Index i = 0; i < n; ++i) {
      rep.checks += 2;
      const bool homogeneous = close_rel(a[i], b[i], Scalar(1e-12));
      const Scalar excess = sum[i] - bound[i];
      rep.max_excess = std::max(rep.max_excess, excess);
      if (!homogeneous) ++rep.violations;
      if (excess > Scalar(1e-12)) ++rep.violations;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Dominated extension of one row
// ---------------------------------------------------------------------------

namespace detail {

/// The value actually prescribed on f: g clipped to [-q(f), q(f)]. With a
/// numerically constructed T, q(f) matches |g| only to rounding.
template <typename Scalar>
Scalar prescribed_value(const RowMajorant<Scalar>& q, const Vector<Scalar>& f, Scalar g) {
  const Scalar qf = q.value(f);
  if (!std::isfinite(g)) throw DomainError("prescribed value must be finite");
  if (g != Scalar(0) && !(qf > Scalar(0))) {
    throw DomainError("cannot dominate: g_i != 0 but H_i(f) = 0");
  }
  if (std::abs(g) > qf * (Scalar(1) + Scalar(1e-8))) {
    throw DomainError("cannot dominate: |g_i| exceeds H_i(f)");
  }
  return g >= Scalar(0) ? std::min(g, qf) : -std::min(-g, qf);
}

}  // namespace detail

/// Closed-form extension by Hoelder attainment: l = (c / q(f)) grad q(f), so
/// l.f = c and |l.h| <= |c| q(h) / q(f) <= q(h).
template <typename Scalar>
Vector<Scalar> holder_extension_row(const RowMajorant<Scalar>& q, const Vector<Scalar>& f, Scalar g) {
  if (f.size() != q.size()) throw StructuralError("extension row: length mismatch");
  const Scalar c = detail::prescribed_value(q, f, g);
  if (c == Scalar(0)) return Vector<Scalar>::Zero(f.size());
  return (c / q.value(f)) * q.subgradient(f);
}

template <typename Scalar>
Vector<Scalar> holder_extension_row(const SublinearMajorant<Scalar>& h_op, const Vector<Scalar>& f, Scalar g,
                                    Index i) {
  return holder_extension_row(h_op.row(i), f, g);
}

struct GreedyOptions {
  long max_iterations = 10000;
  double tolerance = 1e-9;
  double empty_interval_tolerance = 1e-7;
  double tight_tolerance = 1e-9;
};

namespace detail {

/// inf over c of q(B c + z) - a.c by BFGS with Armijo backtracking.
template <typename Scalar>
Scalar subspace_infimum(const RowMajorant<Scalar>& q, const Matrix<Scalar>& basis, const Vector<Scalar>& a,
                        const Vector<Scalar>& z, const GreedyOptions& opt) {
  const Index k = basis.cols();
  if (k == 0) return q.value(z);
  const auto phi = [&](const Vector<Scalar>& c) { return q.value(Vector<Scalar>(basis * c + z)) - a.dot(c); };
  const auto grad = [&](const Vector<Scalar>& c) {
    return Vector<Scalar>(basis.transpose() * q.subgradient(Vector<Scalar>(basis * c + z)) - a);
  };
  Vector<Scalar> c = Vector<Scalar>::Zero(k);
  Scalar fc = phi(c);
  Vector<Scalar> gc = grad(c);
  Matrix<Scalar> hinv = Matrix<Scalar>::Identity(k, k);
  const Scalar scale = std::max(Scalar(1), std::abs(fc));
  for (long it = 0; it < opt.max_iterations; ++it) {
    if (gc.template lpNorm<Eigen::Infinity>() <= Scalar(opt.tolerance) * scale) break;
    Vector<Scalar> dir = -hinv * gc;
    if (!(dir.dot(gc) < Scalar(0))) {
      hinv.setIdentity();
      dir = -gc;
    }
    Scalar step = 1;
    Vector<Scalar> cn;
    Scalar fn = fc;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      cn = c + step * dir;
      fn = phi(cn);
      if (fn <= fc + Scalar(1e-4) * step * dir.dot(gc)) {
        accepted = true;
        break;
      }
      step *= Scalar(0.5);
    }
    if (!accepted) break;
    const Vector<Scalar> gn = grad(cn);
    const Vector<Scalar> s = cn - c, y = gn - gc;
    const Scalar sy = s.dot(y);
    if (sy > std::numeric_limits<Scalar>::epsilon() * s.norm() * y.norm()) {
      const Scalar rho = Scalar(1) / sy;
      const Matrix<Scalar> id = Matrix<Scalar>::Identity(k, k);
      hinv = (id - rho * s * y.transpose()) * hinv * (id - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    const Scalar decrease = fc - fn;
    c = cn;
    fc = fn;
    gc = gn;
    if (decrease <= Scalar(1e-15) * scale) break;
  }
  return fc;
}

}  // namespace detail

/// Dominated extension one direction at a time. Starting from l(f) = c on
/// V = span{f}, each new direction z of a basis completing f gets the midpoint
/// of the feasible interval [-U(-z), U(z)], where
///   U(z) = inf { q(y + z) - l(y) : y in V }.
/// When |c| = q(f) the interval collapses to the directional derivative of q
/// at sign(c) f, which is used directly.
/// q vanishes on zero-weight coordinates, and so must every dominated l; the
/// extension runs on the remaining coordinates, where q is a norm.
template <typename Scalar>
Vector<Scalar> greedy_hb_extension_row(const RowMajorant<Scalar>& q, const Vector<Scalar>& f, Scalar g,
                                       const GreedyOptions& opt = {}) {
  const Index n = f.size();
  if (n != q.size()) throw StructuralError("extension row: length mismatch");
  const Scalar c = detail::prescribed_value(q, f, g);
  std::vector<Index> live;
  for (Index j = 0; j < n; ++j) if (q.weights()[j] != Scalar(0)) live.push_back(j);
  if (static_cast<Index>(live.size()) < n) {
    Vector<Scalar> row = Vector<Scalar>::Zero(n);
    if (live.empty()) return row;
    const Index m = static_cast<Index>(live.size());
    Vector<Scalar> w(m), fr(m);
    for (Index k = 0; k < m; ++k) {
      w[k] = q.weights()[live[static_cast<std::size_t>(k)]];
      fr[k] = f[live[static_cast<std::size_t>(k)]];
    }
    const Vector<Scalar> lr = greedy_hb_extension_row(RowMajorant<Scalar>(w, q.p()), fr, c, opt);
    for (Index k = 0; k < m; ++k) row[live[static_cast<std::size_t>(k)]] = lr[k];
    return row;
  }
  const Scalar qf = q.value(f);
  const Scalar fnorm = f.norm();

  // Orthonormal basis: f / |f|, then Gram-Schmidt over the standard directions
  // skipping the one most aligned with f.
  Matrix<Scalar> basis(n, 0);
  Vector<Scalar> coeffs(0);
  std::vector<Index> order;
  Index skip = -1;
  if (fnorm > Scalar(0)) {
    f.cwiseAbs().maxCoeff(&skip);
    basis.conservativeResize(n, 1);
    basis.col(0) = f / fnorm;
    coeffs.conservativeResize(1);
    coeffs[0] = c / fnorm;
  }
  for (Index j = 0; j < n; ++j) if (j != skip) order.push_back(j);

  const bool tight = qf > Scalar(0) && std::abs(c) >= qf * (Scalar(1) - Scalar(opt.tight_tolerance));
  const Vector<Scalar> tangent = tight ? q.subgradient(Vector<Scalar>((c > Scalar(0) ? Scalar(1) : Scalar(-1)) * f))
                                       : Vector<Scalar>();
  for (const Index j : order) {
    Vector<Scalar> z = Vector<Scalar>::Unit(n, j);
    for (int pass = 0; pass < 2; ++pass) z -= basis * (basis.transpose() * z);
    const Scalar zn = z.norm();
    if (!(zn > Scalar(1e-12))) continue;
    z /= zn;
    Scalar mid;
    if (tight) {
      mid = tangent.dot(z);
    } else {
      const Scalar upper = detail::subspace_infimum(q, basis, coeffs, z, opt);
      const Scalar lower = -detail::subspace_infimum(q, basis, coeffs, Vector<Scalar>(-z), opt);
      const Scalar width_tol = Scalar(opt.empty_interval_tolerance) * std::max({Scalar(1), std::abs(upper), std::abs(lower)});
      if (lower > upper + width_tol) {
        throw NumericalFailure("greedy extension: empty feasible interval for direction " + std::to_string(j),
                               static_cast<double>(upper), static_cast<double>(lower - upper));
      }
      mid = Scalar(0.5) * (lower + upper);
    }
    const Index k = basis.cols();
    basis.conservativeResize(n, k + 1);
    basis.col(k) = z;
    coeffs.conservativeResize(k + 1);
    coeffs[k] = mid;
  }
  return basis * coeffs;
}

template <typename Scalar>
Vector<Scalar> greedy_hb_extension_row(const SublinearMajorant<Scalar>& h_op, const Vector<Scalar>& f, Scalar g,
                                       Index i, const GreedyOptions& opt = {}) {
  return greedy_hb_extension_row(h_op.row(i), f, g, opt);
}

}  // namespace caldera

#endif  // CALDERA_EXTENSION_HPP
