#ifndef CALDERA_LUB_CONSTRUCTIONS_HPP
#define CALDERA_LUB_CONSTRUCTIONS_HPP

// Alternative routes to the least upper bound of a family, each following a
// classical completeness argument. On atoms every route must reproduce the
// pointwise maximum; the property suites compare them against lub().

#include "caldera/lattice.hpp"

namespace caldera {

/// g0 + lub{ max(g, g0) - g0 : g in A } for a chosen member g0 of A.
template <typename Scalar>
LatticeVector<Scalar> lub_by_nonnegative_shift(const std::vector<LatticeVector<Scalar>>& family,
                                               std::size_t anchor) {
  if (family.empty()) throw DomainError("least upper bound of an empty family");
  if (anchor >= family.size()) throw DomainError("anchor index outside the family");
  const Vector<Scalar>& g0 = family[anchor].values();
  std::vector<LatticeVector<Scalar>> shifted;
  shifted.reserve(family.size());
  for (const auto& g : family) {
    require_same_space(g, family[anchor]);
    shifted.emplace_back(g.space(), Vector<Scalar>(g.values().cwiseMax(g0) - g0));
  }
  const auto b = lub(shifted);
  return LatticeVector<Scalar>(b.space(), Vector<Scalar>(b.values() + g0));
}

/// lub{a chi_E} + lub{a chi_(complement of E)} for a nonnegative family.
template <typename Scalar>
LatticeVector<Scalar> lub_by_splitting(const std::vector<LatticeVector<Scalar>>& family,
                                       const std::vector<bool>& in_e) {
  if (family.empty()) throw DomainError("least upper bound of an empty family");
  const Index n = family.front().size();
  if (static_cast<Index>(in_e.size()) != n) throw StructuralError("split mask length mismatch");
  const Vector<Scalar> chi = indicator<Scalar>(in_e);
  const Vector<Scalar> chi_c = Vector<Scalar>::Ones(n) - chi;
  std::vector<LatticeVector<Scalar>> part0, part1;
  for (const auto& a : family) {
    if (!a.is_nonnegative()) throw DomainError("splitting construction needs a nonnegative family");
    part0.emplace_back(a.space(), Vector<Scalar>(a.values().cwiseProduct(chi)));
    part1.emplace_back(a.space(), Vector<Scalar>(a.values().cwiseProduct(chi_c)));
  }
  const auto b0 = lub(part0);
  const auto b1 = lub(part1);
  return LatticeVector<Scalar>(b0.space(), Vector<Scalar>(b0.values() + b1.values()));
}

/// f0 * lub{ chi_(supp f0) u / f0 : u in A } for a nonnegative family vanishing
/// off the support of the nonnegative f0.
template <typename Scalar>
LatticeVector<Scalar> lub_by_localization(const std::vector<LatticeVector<Scalar>>& family,
                                          const LatticeVector<Scalar>& f0) {
  if (family.empty()) throw DomainError("least upper bound of an empty family");
  if (!f0.is_nonnegative()) throw DomainError("localizing function must be nonnegative");
  const Index n = f0.size();
  std::vector<LatticeVector<Scalar>> local;
  for (const auto& u : family) {
    require_same_space(u, f0);
    Vector<Scalar> v = Vector<Scalar>::Zero(n);
    for (Index i = 0; i < n; ++i) {
      if (f0[i] != Scalar(0)) {
        v[i] = u[i] / f0[i];
      } else if (u[i] != Scalar(0)) {
        throw DomainError("family member does not vanish off the support of f0");
      }
    }
    local.emplace_back(u.space(), std::move(v));
  }
  const auto g0 = lub(local);
  return LatticeVector<Scalar>(g0.space(), Vector<Scalar>(g0.values().cwiseProduct(f0.values())));
}

/// lub{ a^p : a in A } for a nonnegative family.
template <typename Scalar>
LatticeVector<Scalar> lub_of_powers(const std::vector<LatticeVector<Scalar>>& family, Scalar p) {
  if (family.empty()) throw DomainError("least upper bound of an empty family");
  std::vector<LatticeVector<Scalar>> powered;
  for (const auto& a : family) {
    if (!a.is_nonnegative()) throw DomainError("power construction needs a nonnegative family");
    powered.push_back(abs_pow(a, p));
  }
  return lub(powered);
}

}  // namespace caldera

#endif  // CALDERA_LUB_CONSTRUCTIONS_HPP
