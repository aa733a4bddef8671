#ifndef CALDERA_LATTICE_HPP
#define CALDERA_LATTICE_HPP

// Finite atomic measure spaces and the Banach lattices of functions on them.
//
// Every measure space here has finitely many atoms with strictly positive
// mass, so "almost everywhere" is plain equality and every order-bounded
// family has a pointwise maximum. Norms are weighted l^p norms and their
// p-convexifications.

#include "caldera/core.hpp"

#include <algorithm>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace caldera {

template <typename Scalar = double>
class MeasureSpace {
 public:
  explicit MeasureSpace(Vector<Scalar> weights) : weights_(std::move(weights)) {
    if (weights_.size() < 1) throw DomainError("measure space needs at least one atom");
    for (Index i = 0; i < weights_.size(); ++i) {
      if (!std::isfinite(weights_[i]) || !(weights_[i] > Scalar(0))) {
        throw DomainError("atom weights must be finite and strictly positive");
      }
    }
  }

  /// Counting measure on n atoms.
  static std::shared_ptr<const MeasureSpace> counting(Index n) {
    return std::make_shared<const MeasureSpace>(Vector<Scalar>::Ones(n));
  }

  static std::shared_ptr<const MeasureSpace> make(Vector<Scalar> weights) {
    return std::make_shared<const MeasureSpace>(std::move(weights));
  }

  Index size() const { return weights_.size(); }
  const Vector<Scalar>& weights() const { return weights_; }

  /// All atoms carry the same mass.
  bool is_uniform() const {
    return (weights_.array() == weights_[0]).all();
  }

  friend bool operator==(const MeasureSpace& a, const MeasureSpace& b) {
    return a.weights_.size() == b.weights_.size() && a.weights_ == b.weights_;
  }

 private:
  Vector<Scalar> weights_;
};

template <typename Scalar>
using SpacePtr = std::shared_ptr<const MeasureSpace<Scalar>>;

template <typename Scalar>
bool same_space(const SpacePtr<Scalar>& a, const SpacePtr<Scalar>& b) {
  return a == b || (a && b && *a == *b);
}

/// A real function on the atoms of a measure space.
template <typename Scalar = double>
class LatticeVector {
 public:
  LatticeVector(SpacePtr<Scalar> space, Vector<Scalar> values)
      : space_(std::move(space)), values_(std::move(values)) {
    if (!space_) throw StructuralError("lattice vector without a measure space");
    if (values_.size() != space_->size()) {
      throw StructuralError("lattice vector length does not match its space");
    }
    if (!values_.allFinite()) throw DomainError("lattice vector values must be finite");
  }

  static LatticeVector zero(SpacePtr<Scalar> space) {
    const Index n = space->size();
    return LatticeVector(std::move(space), Vector<Scalar>::Zero(n));
  }

  const SpacePtr<Scalar>& space() const { return space_; }
  const Vector<Scalar>& values() const { return values_; }
  Index size() const { return values_.size(); }
  Scalar operator[](Index i) const { return values_[i]; }

  bool is_zero() const { return (values_.array() == Scalar(0)).all(); }
  bool is_nonnegative() const { return (values_.array() >= Scalar(0)).all(); }

  friend bool operator==(const LatticeVector& a, const LatticeVector& b) {
    return same_space(a.space_, b.space_) && a.values_ == b.values_;
  }

 private:
  SpacePtr<Scalar> space_;
  Vector<Scalar> values_;
};

template <typename Scalar>
void require_same_space(const LatticeVector<Scalar>& a, const LatticeVector<Scalar>& b) {
  if (!same_space(a.space(), b.space())) {
    throw StructuralError("lattice vectors live on different measure spaces");
  }
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

/// A lattice norm: a weighted l^p norm, or the p-convexification of another
/// NormSpec. Immutable; convexified specs share their base.
template <typename Scalar = double>
class NormSpec {
 public:
  enum class Kind { WeightedP, Convexified };

  static NormSpec weighted_p(Exponent<Scalar> p) {
    NormSpec s;
    s.kind_ = Kind::WeightedP;
    s.p_ = p;
    return s;
  }
  static NormSpec weighted_p(Scalar p) { return weighted_p(Exponent<Scalar>(p)); }
  static NormSpec weighted_inf() { return weighted_p(Exponent<Scalar>::infinity()); }

  static NormSpec convexified(const NormSpec& base, Scalar p) {
    if (!std::isfinite(p) || !(p > Scalar(1))) {
      throw DomainError("convexification exponent must lie in (1, inf)");
    }
    NormSpec s;
    s.kind_ = Kind::Convexified;
    s.p_ = Exponent<Scalar>(p);
    s.base_ = std::make_shared<const NormSpec>(base);
    return s;
  }

  Kind kind() const { return kind_; }
  /// The variant's own exponent (l^p exponent or convexification exponent).
  const Exponent<Scalar>& p() const { return p_; }
  const NormSpec& base() const {
    if (!base_) throw DomainError("weighted_p norm has no base");
    return *base_;
  }

  /// On nonnegative functions every spec is a weighted l^r norm; r is the
  /// product of the exponents along the nesting.
  Exponent<Scalar> effective_exponent() const {
    if (kind_ == Kind::WeightedP) return p_;
    return base_->effective_exponent() * p_;
  }

  int depth() const { return kind_ == Kind::WeightedP ? 0 : 1 + base_->depth(); }

  std::string describe() const {
    if (kind_ == Kind::WeightedP) return "weighted_p(" + p_.to_string() + ")";
    return "convexified(" + base_->describe() + ", " + p_.to_string() + ")";
  }

 private:
  NormSpec() = default;
  Kind kind_ = Kind::WeightedP;
  Exponent<Scalar> p_;
  std::shared_ptr<const NormSpec> base_;
};

namespace detail {

// Spec evaluated on u with 0 <= u <= 1.
template <typename Scalar>
Scalar unit_norm(const NormSpec<Scalar>& spec, const Vector<Scalar>& w,
                 const Vector<Scalar>& u) {
  using std::pow;
  if (spec.kind() == NormSpec<Scalar>::Kind::WeightedP) {
    if (spec.p().is_infinite()) return u.maxCoeff();
    const Scalar r = spec.p().value();
    if (r == Scalar(1)) return w.dot(u);
    return pow(w.dot(u.array().pow(r).matrix()), Scalar(1) / r);
  }
  const Scalar p = spec.p().value();
  const Vector<Scalar> up = u.array().pow(p).matrix();
  return pow(unit_norm(spec.base(), w, up), Scalar(1) / p);
}

}  // namespace detail

/// Norm of x under spec with atom weights w.
template <typename Scalar, typename Derived>
Scalar norm(const NormSpec<Scalar>& spec, const Vector<Scalar>& w,
            const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != w.size()) throw StructuralError("vector length does not match weights");
  if (x.size() == 0) return Scalar(0);
  const Scalar m = x.cwiseAbs().maxCoeff();
  if (!(m > Scalar(0))) return Scalar(0);
  const Vector<Scalar> u = x.cwiseAbs() / m;
  return m * detail::unit_norm(spec, w, u);
}

template <typename Scalar>
Scalar norm(const NormSpec<Scalar>& spec, const LatticeVector<Scalar>& f) {
  return norm(spec, f.space()->weights(), f.values());
}

/// Weighted l^r norm of a nonnegative vector; r may be infinite.
template <typename Scalar, typename Derived>
Scalar weighted_norm(const Vector<Scalar>& w, const Eigen::MatrixBase<Derived>& u,
                     const Exponent<Scalar>& r) {
  using std::pow;
  if (u.size() == 0) return Scalar(0);
  const Scalar m = u.cwiseAbs().maxCoeff();
  if (!(m > Scalar(0))) return Scalar(0);
  if (r.is_infinite()) return m;
  const Scalar q = r.value();
  if (q == Scalar(1)) return w.dot(u.cwiseAbs());
  return m * pow(w.dot((u.cwiseAbs() / m).array().pow(q).matrix()), Scalar(1) / q);
}

/// p-convexification of a norm; p must lie in (1, inf).
template <typename Scalar>
NormSpec<Scalar> convexify(const NormSpec<Scalar>& spec, Scalar p) {
  return NormSpec<Scalar>::convexified(spec, p);
}

// ---------------------------------------------------------------------------
// Couples
// ---------------------------------------------------------------------------

template <typename Scalar = double>
struct Couple {
  Couple(SpacePtr<Scalar> space_, NormSpec<Scalar> n0, NormSpec<Scalar> n1,
         std::optional<Scalar> c = std::nullopt)
      : space(std::move(space_)), norm0(std::move(n0)), norm1(std::move(n1)), c_constant(c) {
    if (!space) throw StructuralError("couple without a measure space");
    if (c_constant && !(*c_constant >= Scalar(1))) {
      throw DomainError("Calderon constant must be >= 1");
    }
  }

  /// (L^1, L^inf) over the given space; C = 1.
  static Couple l1_linf(SpacePtr<Scalar> space) {
    return Couple(std::move(space), NormSpec<Scalar>::weighted_p(Scalar(1)),
                  NormSpec<Scalar>::weighted_inf(), Scalar(1));
  }

  bool is_l1_linf() const {
    const auto r0 = norm0.effective_exponent();
    const auto r1 = norm1.effective_exponent();
    return !r0.is_infinite() && r0.value() == Scalar(1) && r1.is_infinite();
  }

  Couple swapped() const { return Couple(space, norm1, norm0, c_constant); }

  SpacePtr<Scalar> space;
  NormSpec<Scalar> norm0;
  NormSpec<Scalar> norm1;
  std::optional<Scalar> c_constant;
};

/// Both members p-convexified. The constant is not carried over.
template <typename Scalar>
Couple<Scalar> convexify(const Couple<Scalar>& couple, Scalar p) {
  return Couple<Scalar>(couple.space, convexify(couple.norm0, p), convexify(couple.norm1, p));
}

template <typename Scalar>
void require_on(const Couple<Scalar>& couple, const LatticeVector<Scalar>& f) {
  if (!same_space(couple.space, f.space())) {
    throw StructuralError("vector does not live on the couple's space");
  }
}

// ---------------------------------------------------------------------------
// Order operations
// ---------------------------------------------------------------------------

template <typename Scalar>
LatticeVector<Scalar> abs(const LatticeVector<Scalar>& f) {
  return LatticeVector<Scalar>(f.space(), f.values().cwiseAbs());
}

/// Pointwise product with a unimodular function (entries +1 or -1).
template <typename Scalar>
LatticeVector<Scalar> sign_multiply(const LatticeVector<Scalar>& f, const Vector<Scalar>& s) {
  if (s.size() != f.size()) throw StructuralError("sign vector length mismatch");
  for (Index i = 0; i < s.size(); ++i) {
    if (s[i] != Scalar(1) && s[i] != Scalar(-1)) {
      throw DomainError("sign vector entries must be +1 or -1");
    }
  }
  return LatticeVector<Scalar>(f.space(), f.values().cwiseProduct(s));
}

/// |f|^p pointwise.
template <typename Scalar>
LatticeVector<Scalar> abs_pow(const LatticeVector<Scalar>& f, Scalar p) {
  return LatticeVector<Scalar>(f.space(), f.values().cwiseAbs().array().pow(p).matrix());
}

/// Least upper bound of a nonempty finite family: the pointwise maximum.
template <typename Scalar>
LatticeVector<Scalar> lub(std::span<const LatticeVector<Scalar>> family) {
  if (family.empty()) throw DomainError("least upper bound of an empty family");
  Vector<Scalar> y = family.front().values();
  for (const auto& q : family.subspan(1)) {
    require_same_space(family.front(), q);
    y = y.cwiseMax(q.values());
  }
  return LatticeVector<Scalar>(family.front().space(), std::move(y));
}

template <typename Scalar>
LatticeVector<Scalar> lub(const std::vector<LatticeVector<Scalar>>& family) {
  return lub(std::span<const LatticeVector<Scalar>>(family));
}

/// q <= y pointwise for all q in the family.
template <typename Scalar>
bool is_upper_bound(std::span<const LatticeVector<Scalar>> family, const LatticeVector<Scalar>& y) {
  return std::all_of(family.begin(), family.end(), [&](const LatticeVector<Scalar>& q) {
    return (q.values().array() <= y.values().array()).all();
  });
}

/// Atoms where f does not vanish.
template <typename Scalar>
std::vector<Index> support(const LatticeVector<Scalar>& f) {
  std::vector<Index> out;
  for (Index i = 0; i < f.size(); ++i) {
    if (f[i] != Scalar(0)) out.push_back(i);
  }
  return out;
}

/// Indicator of a set of atoms given as a mask.
template <typename Scalar>
Vector<Scalar> indicator(const std::vector<bool>& mask) {
  Vector<Scalar> chi(static_cast<Index>(mask.size()));
  for (std::size_t i = 0; i < mask.size(); ++i) chi[static_cast<Index>(i)] = mask[i] ? Scalar(1) : Scalar(0);
  return chi;
}

using MeasureSpaced = MeasureSpace<double>;
using LatticeVectord = LatticeVector<double>;
using NormSpecd = NormSpec<double>;
using Coupled = Couple<double>;

}  // namespace caldera

#endif  // CALDERA_LATTICE_HPP
