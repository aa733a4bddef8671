#ifndef CALDERA_TESTS_SUPPORT_HPP
#define CALDERA_TESTS_SUPPORT_HPP

// Hand-rolled generators for the property tests. Every case draws from its own
// stream so a failure is reproduced by (seed, case) alone.

#include "caldera/rng.hpp"
#include "caldera/lattice.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace gen {

using caldera::Index;
using caldera::Rng;
using Vec = caldera::Vector<double>;

inline Index size(Rng& rng, Index lo, Index hi) { return static_cast<Index>(rng.between(lo, hi)); }

/// Magnitudes log-uniform on [lo, hi], random signs, about one zero in `zero_odds`.
inline Vec signed_vector(Rng& rng, Index n, double lo = 1e-2, double hi = 1e2, std::uint64_t zero_odds = 0) {
  Vec v(n);
  for (Index i = 0; i < n; ++i) {
    v[i] = (zero_odds && rng.below(zero_odds) == 0) ? 0.0 : rng.sign() * rng.log_uniform(lo, hi);
  }
  return v;
}

inline Vec positive_vector(Rng& rng, Index n, double lo = 1e-2, double hi = 1e2) {
  return signed_vector(rng, n, lo, hi).cwiseAbs();
}

inline Vec uniform_vector(Rng& rng, Index n, double lo, double hi) {
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

inline Vec weights(Rng& rng, Index n) {
  Vec w(n);
  for (Index i = 0; i < n; ++i) w[i] = rng.log_uniform(0.1, 10.0);
  return w;
}

inline caldera::Exponent<double> exponent(Rng& rng) {
  switch (rng.below(5)) {
    case 0: return caldera::Exponent<double>(1.0);
    case 1: return caldera::Exponent<double>::infinity();
    default: return caldera::Exponent<double>(rng.uniform(1.05, 6.0));
  }
}

inline std::vector<Index> permutation(Rng& rng, Index n) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  for (std::size_t i = p.size(); i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

/// s M |f| with M an average of three permutations and s in [1/2, 1].
inline Vec submajorized(Rng& rng, const Vec& f) {
  const Index n = f.size();
  Vec g = Vec::Zero(n);
  for (int k = 0; k < 3; ++k) {
    const auto p = permutation(rng, n);
    for (Index i = 0; i < n; ++i) g[i] += std::abs(f[p[static_cast<std::size_t>(i)]]) / 3.0;
  }
  return rng.uniform(0.5, 1.0) * g;
}

/// Runs prop(rng, case) for `count` cases; the failing case index is reported.
template <typename Prop>
void forall(std::size_t count, std::uint64_t seed, Prop&& prop) {
  for (std::size_t i = 0; i < count; ++i) {
    CAPTURE(i);
    Rng rng = Rng::stream(seed, i);
    prop(rng, i);
  }
}

}  // namespace gen

#endif  // CALDERA_TESTS_SUPPORT_HPP
