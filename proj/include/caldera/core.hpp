#ifndef CALDERA_CORE_HPP
#define CALDERA_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace caldera {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shape or space mismatch between operands.
struct StructuralError : Error {
  using Error::Error;
};

/// An argument lies outside the domain of the operation.
struct DomainError : Error {
  using Error::Error;
};

/// Instance too large for an exhaustive routine.
struct CapacityError : Error {
  using Error::Error;
};

/// An iterative method stopped without certifying its answer.
struct NumericalFailure : Error {
  NumericalFailure(const std::string& what, double best, double gap_)
      : Error(what), best_value(best), gap(gap_) {}
  double best_value;
  double gap;
};

/// A property that must hold by theory was observed to fail.
struct PropertyViolation : Error {
  PropertyViolation(const std::string& what, double where_)
      : Error(what), where(where_) {}
  double where;
};

/// K-order precondition fails for an ordered pair (f, g).
struct OrderedPairError : Error {
  OrderedPairError(const std::string& what, double t_)
      : Error(what), t(t_) {}
  double t;
};

/// Two independent routes disagree.
struct InternalConsistencyError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Exponents
// ---------------------------------------------------------------------------

/// A Lebesgue exponent in [1, inf]; infinity is a distinguished state, never
/// a large float.
template <typename Scalar = double>
class Exponent {
 public:
  constexpr Exponent() = default;
  explicit Exponent(Scalar value) : value_(value) {
    if (!std::isfinite(value) || value < Scalar(1)) {
      throw DomainError("exponent must be a finite real >= 1 or infinity");
    }
  }

  static constexpr Exponent infinity() {
    Exponent e;
    e.infinite_ = true;
    return e;
  }

  bool is_infinite() const { return infinite_; }
  Scalar value() const {
    if (infinite_) throw DomainError("infinite exponent has no finite value");
    return value_;
  }

  /// Product of exponents; infinity absorbs.
  Exponent operator*(const Exponent& other) const {
    if (infinite_ || other.infinite_) return infinity();
    return Exponent(value_ * other.value_);
  }

  /// Hoelder conjugate.
  Exponent conjugate() const {
    if (infinite_) return Exponent(Scalar(1));
    if (value_ == Scalar(1)) return infinity();
    return Exponent(value_ / (value_ - Scalar(1)));
  }

  friend bool operator==(const Exponent& a, const Exponent& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

  std::string to_string() const {
    return infinite_ ? std::string("inf") : std::to_string(value_);
  }

 private:
  Scalar value_ = Scalar(1);
  bool infinite_ = false;
};

// ---------------------------------------------------------------------------
// Tolerances
// ---------------------------------------------------------------------------

/// a <= b up to a relative tolerance with an absolute floor.
template <typename Scalar>
bool leq_rel(Scalar a, Scalar b, Scalar rel, Scalar abs_floor = Scalar(0)) {
  using std::abs;
  using std::max;
  return a <= b + rel * max(abs(a), abs(b)) + abs_floor;
}

template <typename Scalar>
bool close_rel(Scalar a, Scalar b, Scalar rel, Scalar abs_floor = Scalar(0)) {
  using std::abs;
  using std::max;
  return abs(a - b) <= rel * max(abs(a), abs(b)) + abs_floor;
}

/// Tolerances used for norm comparisons throughout the lattice layer.
template <typename Scalar>
struct NormTolerance {
  static constexpr Scalar relative = Scalar(1e-12);
  static constexpr Scalar absolute = Scalar(1e-15);
};

}  // namespace caldera

#endif  // CALDERA_CORE_HPP
