#ifndef CALDERA_MAJORIZATION_HPP
#define CALDERA_MAJORIZATION_HPP

// Constructive positive operators for the (l^1, l^inf) couple on counting
// measure: weak submajorization g <_w f is turned into a doubly
// substochastic T with Tf = g through a water-fill, a chain of T-transforms
// and a diagonal contraction.

#include "caldera/lattice.hpp"
#include "caldera/rng.hpp"

#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace caldera {

/// Dense linear operator on the functions of a measure space.
template <typename Scalar = double>
class MatrixOperator {
 public:
  MatrixOperator(SpacePtr<Scalar> space, Matrix<Scalar> entries, bool positive)
      : space_(std::move(space)), entries_(std::move(entries)), positive_(positive) {
    if (!space_) throw StructuralError("operator without a measure space");
    if (entries_.rows() != space_->size() || entries_.cols() != space_->size()) {
      throw StructuralError("operator matrix must be n x n over its space");
    }
    if (!entries_.allFinite()) throw DomainError("operator entries must be finite");
    if (positive_ && (entries_.array() < Scalar(0)).any()) {
      throw DomainError("operator flagged positive has a negative entry");
    }
  }

  static MatrixOperator identity(SpacePtr<Scalar> space) {
    const Index n = space->size();
    return MatrixOperator(std::move(space), Matrix<Scalar>::Identity(n, n), true);
  }

  const SpacePtr<Scalar>& space() const { return space_; }
  const Matrix<Scalar>& entries() const { return entries_; }
  bool positive() const { return positive_; }
  Index size() const { return entries_.rows(); }

  template <typename Derived>
  Vector<Scalar> apply(const Eigen::MatrixBase<Derived>& h) const {
    if (h.size() != size()) throw StructuralError("operator applied to a vector of wrong length");
    return entries_ * h;
  }

  LatticeVector<Scalar> apply(const LatticeVector<Scalar>& h) const {
    if (!same_space(space_, h.space())) throw StructuralError("operator applied across spaces");
    return LatticeVector<Scalar>(space_, entries_ * h.values());
  }

 private:
  SpacePtr<Scalar> space_;
  Matrix<Scalar> entries_;
  bool positive_;
};

// ---------------------------------------------------------------------------
// Rearrangement and majorization tests
// ---------------------------------------------------------------------------

template <typename Scalar = double>
struct RearrangementResult {
  Vector<Scalar> sorted;            // |f| in nonincreasing order
  std::vector<Index> permutation;   // sorted position -> original atom
};

/// Nonincreasing rearrangement of |f|; ties keep original index order.
template <typename Derived>
RearrangementResult<typename Derived::Scalar> decreasing_rearrangement(
    const Eigen::MatrixBase<Derived>& f) {
  using Scalar = typename Derived::Scalar;
  RearrangementResult<Scalar> r;
  const Index n = f.size();
  r.permutation.resize(static_cast<std::size_t>(n));
  std::iota(r.permutation.begin(), r.permutation.end(), Index{0});
  const Vector<Scalar> a = f.cwiseAbs();
  std::stable_sort(r.permutation.begin(), r.permutation.end(),
                   [&](Index i, Index j) { return a[i] > a[j]; });
  r.sorted.resize(n);
  for (Index k = 0; k < n; ++k) r.sorted[k] = a[r.permutation[static_cast<std::size_t>(k)]];
  return r;
}

/// First prefix length k (1-based) where sum of the k largest |g| exceeds that
/// of |f| beyond a relative tolerance; nullopt when g <_w f.
template <typename DerivedF, typename DerivedG>
std::optional<Index> first_submajorization_failure(const Eigen::MatrixBase<DerivedF>& f,
                                                   const Eigen::MatrixBase<DerivedG>& g,
                                                   typename DerivedF::Scalar rel_tol) {
  using Scalar = typename DerivedF::Scalar;
  if (f.size() != g.size()) throw StructuralError("majorization test on vectors of different length");
  const auto fs = decreasing_rearrangement(f).sorted;
  const auto gs = decreasing_rearrangement(g).sorted;
  Scalar sf = 0, sg = 0;
  for (Index k = 0; k < fs.size(); ++k) {
    sf += fs[k];
    sg += gs[k];
    if (!leq_rel(sg, sf, rel_tol)) return k + 1;
  }
  return std::nullopt;
}

/// Every k-prefix sum of g* is at most that of f*.
template <typename DerivedF, typename DerivedG>
bool weak_submajorizes(const Eigen::MatrixBase<DerivedF>& f, const Eigen::MatrixBase<DerivedG>& g,
                       typename DerivedF::Scalar rel_tol = typename DerivedF::Scalar(1e-12)) {
  return !first_submajorization_failure(f, g, rel_tol).has_value();
}

template <typename Scalar>
bool weak_submajorizes(const LatticeVector<Scalar>& f, const LatticeVector<Scalar>& g,
                       Scalar rel_tol = Scalar(1e-12)) {
  require_same_space(f, g);
  if (!f.space()->is_uniform()) throw DomainError("weak submajorization needs uniform weights");
  return weak_submajorizes(f.values(), g.values(), rel_tol);
}

namespace detail {

template <typename Scalar>
void require_nonincreasing_nonnegative(const Vector<Scalar>& v, const char* name) {
  for (Index k = 0; k < v.size(); ++k) {
    if (v[k] < Scalar(0)) throw DomainError(std::string(name) + " has a negative entry");
    if (k > 0 && v[k] > v[k - 1]) throw DomainError(std::string(name) + " is not nonincreasing");
  }
}

}  // namespace detail

/// Raise the tail of g* to a common level so that the result h satisfies
/// g* <= h, h nonincreasing, sum h = sum f*, and h is majorized by f*.
template <typename Scalar>
Vector<Scalar> fill_to_exact_majorization(const Vector<Scalar>& fstar, const Vector<Scalar>& gstar) {
  if (fstar.size() != gstar.size()) throw StructuralError("fill on vectors of different length");
  detail::require_nonincreasing_nonnegative(fstar, "f*");
  detail::require_nonincreasing_nonnegative(gstar, "g*");
  if (auto k = first_submajorization_failure(fstar, gstar, Scalar(1e-12))) {
    throw DomainError("g* is not weakly submajorized by f* (prefix " + std::to_string(*k) + ")");
  }
  const Index n = fstar.size();
  const Scalar total = fstar.sum();
  const Scalar deficit = total - gstar.sum();
  if (!(deficit > Scalar(0))) return gstar;

  // Largest head length m with h = (g*_0..g*_(m-1), L, ..., L).
  Vector<Scalar> prefix(n + 1);
  prefix[0] = 0;
  for (Index k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + gstar[k];
  Index m = n - 1;
  Scalar level = (total - prefix[m]) / Scalar(n - m);
  while (m > 0 && level > gstar[m - 1]) {
    --m;
    level = (total - prefix[m]) / Scalar(n - m);
  }
  Vector<Scalar> h = gstar;
  h.tail(n - m).setConstant(level);
  return h;
}

/// One factor lambda * Id + (1 - lambda) * (transposition of j and k).
template <typename Scalar = double>
struct TTransform {
  Index j;
  Index k;
  Scalar lambda;
  Scalar mix;  // 1 - lambda, kept separately for relative accuracy

  Matrix<Scalar> dense(Index n) const {
    Matrix<Scalar> m = Matrix<Scalar>::Identity(n, n);
    m(j, j) = lambda;
    m(k, k) = lambda;
    m(j, k) = mix;
    m(k, j) = mix;
    return m;
  }
};

template <typename Scalar = double>
struct TTransformChain {
  std::vector<TTransform<Scalar>> factors;  // applied first to last
  Matrix<Scalar> product;                   // factors.back() * ... * factors.front()

  /// Product recomputed from dense factors.
  Matrix<Scalar> compose() const {
    const Index n = product.rows();
    Matrix<Scalar> s = Matrix<Scalar>::Identity(n, n);
    for (const auto& t : factors) s = t.dense(n) * s;
    return s;
  }
};

/// Doubly stochastic S with S f* = h from at most n - 1 T-transforms, for
/// nonincreasing h majorized by nonincreasing f* with equal sums.
template <typename Scalar>
TTransformChain<Scalar> t_transform_chain(const Vector<Scalar>& fstar, const Vector<Scalar>& h) {
  using std::abs;
  using std::min;
  if (fstar.size() != h.size()) throw StructuralError("chain on vectors of different length");
  detail::require_nonincreasing_nonnegative(fstar, "f*");
  detail::require_nonincreasing_nonnegative(h, "h");
  const Index n = fstar.size();
  if (!close_rel(fstar.sum(), h.sum(), Scalar(1e-12), Scalar(1e-300))) {
    throw DomainError("h and f* must have equal sums");
  }
  if (auto k = first_submajorization_failure(fstar, h, Scalar(1e-12))) {
    throw DomainError("h is not majorized by f* (prefix " + std::to_string(*k) + ")");
  }

  TTransformChain<Scalar> chain;
  chain.product = Matrix<Scalar>::Identity(n, n);
  // Coordinates are compared relative to their own size: all arithmetic below
  // is on positive combinations, so small entries stay relatively accurate.
  const Scalar eps64 = Scalar(64) * std::numeric_limits<Scalar>::epsilon();
  const auto tau = [&](const Vector<Scalar>& x, Index i) {
    return eps64 * std::max(x[i], h[i]) + std::numeric_limits<Scalar>::min();
  };
  Vector<Scalar> x = fstar;
  for (Index step = 0; step < n; ++step) {
    Index j = -1;
    for (Index i = n - 1; i >= 0; --i) {
      if (x[i] > h[i] + tau(x, i)) {
        j = i;
        break;
      }
    }
    if (j < 0) break;
    Index k = -1;
    for (Index i = j + 1; i < n; ++i) {
      if (x[i] < h[i] - tau(x, i)) {
        k = i;
        break;
      }
    }
    if (k < 0) break;
    const Scalar delta = min(x[j] - h[j], h[k] - x[k]);
    const Scalar mix = delta / (x[j] - x[k]);
    const Scalar lambda = Scalar(1) - mix;
    const Scalar xj = x[j], xk = x[k];
    x[j] = lambda * xj + mix * xk;
    x[k] = lambda * xk + mix * xj;
    chain.factors.push_back({j, k, lambda, mix});
    const Vector<Scalar> rj = chain.product.row(j);
    const Vector<Scalar> rk = chain.product.row(k);
    chain.product.row(j) = (lambda * rj + mix * rk).transpose();
    chain.product.row(k) = (lambda * rk + mix * rj).transpose();
  }
  const Scalar residual = n > 0 ? (chain.product * fstar - h).cwiseAbs().maxCoeff() : Scalar(0);
  const Scalar bound = Scalar(1e-10) * std::max(Scalar(1), h.size() ? h.cwiseAbs().maxCoeff() : Scalar(0));
  if (!(residual <= bound)) {
    throw NumericalFailure("T-transform chain residual above tolerance", static_cast<double>(residual),
                           static_cast<double>(residual));
  }
  return chain;
}

// ---------------------------------------------------------------------------
// Positive operators
// ---------------------------------------------------------------------------

template <typename Scalar = double>
struct PositiveConstruction {
  MatrixOperator<Scalar> op;
  Vector<Scalar> fill;             // h with g* <= h majorized by f*
  TTransformChain<Scalar> chain;   // S with S f* ~= h
  Scalar norm1;
  Scalar norminf;
  Scalar residual;                 // ||Tf - g||_inf
  std::string fill_strategy = "uniform-tail water-fill";
};

/// Max absolute column sum (l^1 -> l^1 on uniform weights).
template <typename Scalar>
Scalar operator_norm_1(const MatrixOperator<Scalar>& t) {
  return t.entries().cwiseAbs().colwise().sum().maxCoeff();
}

/// Max absolute row sum (l^inf -> l^inf).
template <typename Scalar>
Scalar operator_norm_inf(const MatrixOperator<Scalar>& t) {
  return t.entries().cwiseAbs().rowwise().sum().maxCoeff();
}

/// Positive T with Tf = g and both operator norms <= 1, for f, g >= 0 on a
/// uniform space with g weakly submajorized by f.
template <typename Scalar>
PositiveConstruction<Scalar> construct_positive_operator(const LatticeVector<Scalar>& f,
                                                         const LatticeVector<Scalar>& g) {
  require_same_space(f, g);
  const auto& space = f.space();
  if (!space->is_uniform()) throw DomainError("positive operator construction needs uniform weights");
  if (!f.is_nonnegative() || !g.is_nonnegative()) throw DomainError("f and g must be nonnegative");
  if (f.is_zero()) throw DomainError("f must not vanish");
  if (auto k = first_submajorization_failure(f.values(), g.values(), Scalar(1e-12))) {
    throw DomainError("g is not weakly submajorized by f: prefix " + std::to_string(*k) +
                      " fails");
  }
  const Index n = f.size();
  const auto rf = decreasing_rearrangement(f.values());
  const auto rg = decreasing_rearrangement(g.values());
  Vector<Scalar> h = fill_to_exact_majorization(rf.sorted, rg.sorted);
  auto chain = t_transform_chain(rf.sorted, h);

  // Diagonal contraction g*/(S f*), clipped to [0, 1].
  const Vector<Scalar> sf = chain.product * rf.sorted;
  Matrix<Scalar> sorted_op = chain.product;
  for (Index k = 0; k < n; ++k) {
    const Scalar d = sf[k] > Scalar(0) ? std::min(Scalar(1), rg.sorted[k] / sf[k]) : Scalar(0);
    sorted_op.row(k) *= d;
  }
  Matrix<Scalar> entries(n, n);
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      entries(rg.permutation[static_cast<std::size_t>(k)], rf.permutation[static_cast<std::size_t>(l)]) =
          sorted_op(k, l);
    }
  }
  MatrixOperator<Scalar> op(space, std::move(entries), true);
  const Scalar residual = (op.apply(f.values()) - g.values()).cwiseAbs().maxCoeff();
  const Scalar n1 = operator_norm_1(op);
  const Scalar ninf = operator_norm_inf(op);
  return PositiveConstruction<Scalar>{std::move(op), std::move(h), std::move(chain), n1, ninf, residual};
}

/// Lower bound on the operator norm of T on (space, spec) from random trials.
template <typename Scalar>
Scalar sample_operator_norm(const MatrixOperator<Scalar>& t, const NormSpec<Scalar>& spec,
                            std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw DomainError("at least one trial is required");
  const auto& w = t.space()->weights();
  Rng rng(seed);
  Scalar best = 0;
  Vector<Scalar> h(t.size());
  for (std::size_t s = 0; s < trials; ++s) {
    for (Index i = 0; i < h.size(); ++i) h[i] = Scalar(rng.uniform(-1.0, 1.0));
    const Scalar nh = norm(spec, w, h);
    if (!(nh > Scalar(0))) continue;
    best = std::max(best, norm(spec, w, t.apply(h)) / nh);
  }
  return best;
}

using MatrixOperatord = MatrixOperator<double>;

}  // namespace caldera

#endif  // CALDERA_MAJORIZATION_HPP
