#include "caldera/inequalities.hpp"
#include "support.hpp"

#include <cmath>

using namespace caldera;
using gen::Vec;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

double wnorm(const Vec& w, const Vec& u, const Exponent<double>& r) {
  if (r.is_infinite()) return u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
  double s = 0;
  for (Index i = 0; i < u.size(); ++i) s += w[i] * std::pow(std::abs(u[i]), r.value());
  return std::pow(s, 1.0 / r.value());
}

// min over c >= 0 of |(|f| - c)_+|_{1,w} + t c: convex and piecewise linear in
// c with knots at the |f_i|, so the minimum sits on a knot.
double k_l1_linf_by_knots(const Vec& w, const Vec& f, double t) {
  const Vec u = f.cwiseAbs();
  double best = INFINITY;
  std::vector<double> knots{0.0};
  for (Index i = 0; i < u.size(); ++i) knots.push_back(u[i]);
  for (double c : knots) {
    double s = t * c;
    for (Index i = 0; i < u.size(); ++i) s += w[i] * std::max(0.0, u[i] - c);
    best = std::min(best, s);
  }
  return best;
}

// Couples with an l^inf side: the optimal split is a truncation at some level c,
// and the objective is convex in c. Ternary search on [0, max|f|].
double k_truncation_search(const Vec& w, const Vec& f, double t, const Exponent<double>& r0) {
  const Vec u = f.cwiseAbs();
  const auto obj = [&](double c) {
    return wnorm(w, Vec((u.array() - c).max(0.0).matrix()), r0) + t * c;
  };
  double lo = 0, hi = u.maxCoeff();
  for (int it = 0; it < 300; ++it) {
    const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
    if (obj(a) < obj(b)) hi = b; else lo = a;
  }
  return std::min({obj(0.5 * (lo + hi)), obj(0.0), obj(u.maxCoeff())});
}

// Exhaustive D straight from the definition.
double d_by_subsets(const Vec& w, const Vec& f, double t, const Exponent<double>& r0, const Exponent<double>& r1) {
  const Index n = f.size();
  double best = INFINITY;
  for (std::uint32_t e = 0; e < (1U << n); ++e) {
    Vec a0 = Vec::Zero(n), a1 = Vec::Zero(n);
    for (Index i = 0; i < n; ++i) ((e >> i) & 1U ? a0 : a1)[i] = f[i];
    best = std::min(best, wnorm(w, a0, r0) + t * wnorm(w, a1, r1));
  }
  return best;
}

Coupled random_couple(Rng& rng, SpacePtr<double> sp) {
  return Coupled(sp, NormSpecd::weighted_p(gen::exponent(rng)), NormSpecd::weighted_p(gen::exponent(rng)));
}

}  // namespace

TEST_CASE("grids") {
  const auto g = default_grid<double>();
  REQUIRE(g.size() == 61);
  CHECK(g.front() == doctest::Approx(1e-3));
  CHECK(g.back() == doctest::Approx(1e3));
  const auto g3 = parse_grid("geometric:1,100,3");
  REQUIRE(g3.size() == 3);
  CHECK(g3[1] == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(g3[2] == 100.0);
  CHECK_THROWS_AS(parse_grid("linear:1,2,3"), DomainError);
  CHECK_THROWS_AS(parse_grid("geometric:0,2,3"), DomainError);
  CHECK(parse_grid("geometric:2,2,1") == std::vector<double>{2.0});
}

TEST_CASE("exact K on (l^1, l^inf): examples") {
  const auto sp = MeasureSpaced::counting(3);
  const auto c = Coupled::l1_linf(sp);
  const LatticeVectord f(sp, vec({3, 1, 2}));
  CHECK(k_exact_l1_linf(c, f, 1.0).value == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(k_exact_l1_linf(c, f, 3.0).value == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(k_exact_l1_linf(c, f, 5.0).value == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(k_exact_l1_linf(c, LatticeVectord::zero(sp), 0.7).value == 0.0);
  CHECK_THROWS_AS(k_exact_l1_linf(c, f, 0.0), DomainError);
  CHECK_THROWS_AS(k_exact_l1_linf(c, f, -1.0), DomainError);
  CHECK_THROWS_AS(k_exact_l1_linf(convexify(c, 2.0), f, 1.0), DomainError);
}

TEST_CASE("exact K matches the knot oracle and returns a dominated truncation split") {
  gen::forall(1000, 21, [](Rng& rng, std::size_t) {
    const Index n = gen::size(rng, 1, 12);
    const Vec w = gen::weights(rng, n);
    const auto sp = MeasureSpaced::make(w);
    const LatticeVectord f(sp, gen::signed_vector(rng, n, 1e-2, 1e2, 5));
    const double t = rng.log_uniform(1e-3, 1e3);
    const auto k = k_exact_l1_linf(Coupled::l1_linf(sp), f, t);
    CHECK(close_rel(k.value, k_l1_linf_by_knots(w, f.values(), t), 1e-12, 1e-300));
    CHECK(k.decomposition.reproduces(f));
    for (Index i = 0; i < n; ++i) {
      CHECK(std::abs(k.decomposition.a0[i]) <= std::abs(f[i]));
      CHECK(k.decomposition.a0[i] * f[i] >= 0.0);
      CHECK(k.decomposition.a1[i] * f[i] >= 0.0);
    }
  });
}

TEST_CASE("numeric K agrees with the closed form on (l^1, l^inf)") {
  gen::forall(300, 22, [](Rng& rng, std::size_t) {
    const Index n = gen::size(rng, 1, 12);
    const auto sp = MeasureSpaced::make(gen::weights(rng, n));
    const auto c = Coupled::l1_linf(sp);
    const LatticeVectord f(sp, gen::signed_vector(rng, n));
    const double t = rng.log_uniform(1e-3, 1e3);
    CHECK(close_rel(k_numeric(c, f, t).value, k_exact_l1_linf(c, f, t).value, 1e-6));
  });
}

TEST_CASE("numeric K on (l^r, l^inf) matches a truncation-level search") {
  gen::forall(300, 23, [](Rng& rng, std::size_t) {
    const Index n = gen::size(rng, 1, 10);
    const Vec w = gen::weights(rng, n);
    const auto sp = MeasureSpaced::make(w);
    const Exponent<double> r0(rng.uniform(1.05, 6.0));
    const Coupled c(sp, NormSpecd::weighted_p(r0), NormSpecd::weighted_inf());
    const LatticeVectord f(sp, gen::signed_vector(rng, n));
    const double t = rng.log_uniform(1e-3, 1e3);
    const auto k = k_numeric(c, f, t);
    CHECK(close_rel(k.value, k_truncation_search(w, f.values(), t, r0), 1e-6));
  });
}

TEST_CASE("numeric K: feasibility, certificate and no random split does better") {
  gen::forall(300, 24, [](Rng& rng, std::size_t) {
    const Index n = gen::size(rng, 1, 8);
    const Vec w = gen::weights(rng, n);
    const auto sp = MeasureSpaced::make(w);
    const auto c = random_couple(rng, sp);
    const LatticeVectord f(sp, gen::signed_vector(rng, n, 1e-2, 1e2, 5));
    const double t = rng.log_uniform(1e-3, 1e3);
    const auto k = k_numeric(c, f, t);
    const auto r0 = c.norm0.effective_exponent(), r1 = c.norm1.effective_exponent();
    CHECK(k.decomposition.reproduces(f));
    const double objective = wnorm(w, k.decomposition.a0.values(), r0) + t * wnorm(w, k.decomposition.a1.values(), r1);
    CHECK(close_rel(objective, k.value, 1e-9, 1e-300));
    CHECK(k.gap <= 1e-6 * k.value + 1e-300);
    CHECK(leq_rel(k.value, wnorm(w, f.values(), r0), 1e-12));
    CHECK(leq_rel(k.value, t * wnorm(w, f.values(), r1), 1e-12));
    for (int s = 0; s < 200; ++s) {
      const Vec a0 = f.values().cwiseProduct(gen::uniform_vector(rng, n, 0.0, 1.0));
      const double v = wnorm(w, a0, r0) + t * wnorm(w, Vec(f.values() - a0), r1);
      CHECK(k.value - k.gap <= v * (1 + 1e-9));
    }
    const double d = d_exact(c, f, t).value;
    CHECK(k.value - k.gap <= d * (1 + 1e-12));
  });
}

TEST_CASE("K symmetry under swapping the couple") {
  gen::forall(300, 25, [](Rng& rng, std::size_t) {
    const Index n = gen::size(rng, 1, 8);
    const auto sp = MeasureSpaced::make(gen::weights(rng, n));
    const auto c = random_couple(rng, sp);
    const LatticeVectord f(sp, gen::signed_vector(rng, n));
    const double t = rng.log_uniform(1e-2, 1e2);
    CHECK(close_rel(k_numeric(c, f, t).value, t * k_numeric(c.swapped(), f, 1.0 / t).value, 1e-6));
  });
}

TEST_CASE("numeric K on the zero vector") {
  const auto sp = MeasureSpaced::counting(3);
  const Coupled c(sp, NormSpecd::weighted_p(2.0), NormSpecd::weighted_p(3.0));
  const auto k = k_numeric(c, LatticeVectord::zero(sp), 2.0);
  CHECK(k.value == 0.0);
  CHECK(k.decomposition.a0.is_zero());
  CHECK(k.decomposition.a1.is_zero());
}

TEST_CASE("exact D: examples") {
  const auto sp = MeasureSpaced::counting(3);
  const auto c = Coupled::l1_linf(sp);
  const auto d = d_exact(c, LatticeVectord(sp, vec({3, 1, 2})), 1.0);
  CHECK(d.value == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(d.decomposition.disjoint());
  CHECK(d_exact(c, LatticeVectord::zero(sp), 1.0).value == 0.0);
  const auto one = MeasureSpaced::counting(1);
  for (double t : {0.1, 1.0, 4.0}) {
    CHECK(d_exact(Coupled::l1_linf(one), LatticeVectord(one, vec({5})), t).value ==
          doctest::Approx(5.0 * std::min(1.0, t)));
  }
  const auto big = MeasureSpaced::counting(23);
  CHECK_THROWS_AS(d_exact(Coupled::l1_linf(big), LatticeVectord::zero(big), 1.0), CapacityError);
}

TEST_CASE("exact D matches a direct subset enumeration") {
  gen::forall(300, 26, [](Rng& rng, std::size_t) {
    const Index n = gen::size(rng, 1, 9);
    const Vec w = gen::weights(rng, n);
    const auto sp = MeasureSpaced::make(w);
    const auto c = random_couple(rng, sp);
    const LatticeVectord f(sp, gen::signed_vector(rng, n, 1e-2, 1e2, 5));
    const double t = rng.log_uniform(1e-3, 1e3);
    const auto d = d_exact(c, f, t);
    const double oracle =
        d_by_subsets(w, f.values(), t, c.norm0.effective_exponent(), c.norm1.effective_exponent());
    CHECK(close_rel(d.value, oracle, 1e-12, 1e-300));
    CHECK(d.decomposition.disjoint());
    CHECK(d.decomposition.reproduces(f));
  });
}

TEST_CASE("K profile on (l^1, l^inf) is linear between cumulative weights") {
  const auto sp = MeasureSpaced::counting(3);
  const auto c = Coupled::l1_linf(sp);
  const LatticeVectord f(sp, vec({3, 1, 2}));
  const auto grid = default_grid<double>();
  const auto prof = profile(FunctionalKind::K, c, f, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    // integral of f* = (3, 2, 1) over [0, t]
    const double expect = t <= 1 ? 3 * t : t <= 2 ? 3 + 2 * (t - 1) : t <= 3 ? 5 + (t - 2) : 6.0;
    CHECK(prof.values[i] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(prof.a0_norms[i] + t * prof.a1_norms[i] == doctest::Approx(expect).epsilon(1e-12));
  }
  const auto zero = profile(FunctionalKind::K, c, LatticeVectord::zero(sp), grid);
  CHECK(std::all_of(zero.values.begin(), zero.values.end(), [](double v) { return v == 0.0; }));
  const auto single = profile(FunctionalKind::D, c, f, std::vector<double>{1.7});
  REQUIRE(single.values.size() == 1);
  CHECK(single.values[0] == d_exact(c, f, 1.7).value);
  CHECK_THROWS_AS(profile(FunctionalKind::K, c, f, std::vector<double>{2.0, 1.0}), DomainError);
}

TEST_CASE("profile shape enforcement reports the offending t") {
  KProfile<double> bad{{1.0, 2.0, 3.0}, {1.0, 0.5, 2.0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}, FunctionalKind::K};
  try {
    detail::enforce_profile_shape(bad);
    FAIL("expected a property violation");
  } catch (const PropertyViolation& e) {
    CHECK(e.where == 2.0);
  }
  KProfile<double> convex{{1.0, 2.0, 3.0}, {1.0, 1.1, 2.0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}, FunctionalKind::K};
  CHECK_THROWS_AS(detail::enforce_profile_shape(convex), PropertyViolation);
}

TEST_CASE("random K profiles are nondecreasing, concave, and K/t nonincreasing") {
  gen::forall(40, 27, [](Rng& rng, std::size_t) {
    const Index n = gen::size(rng, 1, 8);
    const auto sp = MeasureSpaced::make(gen::weights(rng, n));
    const auto c = random_couple(rng, sp);
    const LatticeVectord f(sp, gen::signed_vector(rng, n));
    CHECK_NOTHROW(profile(FunctionalKind::K, c, f, default_grid<double>()));
    CHECK_NOTHROW(profile(FunctionalKind::D, c, f, default_grid<double>()));
  });
}

TEST_CASE("K/D sandwich: examples and random couples") {
  const auto sp = MeasureSpaced::counting(3);
  const auto c = Coupled::l1_linf(sp);
  const auto rep = check_k_d_sandwich(c, LatticeVectord(sp, vec({3, 1, 2})), std::vector<double>{1.0});
  CHECK(rep.passed());
  CHECK(rep.max_ratio == doctest::Approx(1.0));
  CHECK(check_k_d_sandwich(c, LatticeVectord::zero(sp), default_grid<double>()).passed());
  gen::forall(100, 28, [](Rng& rng, std::size_t) {
    const Index n = gen::size(rng, 1, 10);
    const auto s = MeasureSpaced::make(gen::weights(rng, n));
    const auto r = check_k_d_sandwich(random_couple(rng, s), LatticeVectord(s, gen::signed_vector(rng, n)),
                                      default_grid<double>());
    CHECK(r.passed());
    CHECK(r.max_ratio <= 2.0 + 1e-9);
  });
}

TEST_CASE("D sandwich under convexification: example") {
  const auto sp = MeasureSpaced::counting(2);
  const auto c = Coupled::l1_linf(sp);
  const LatticeVectord f(sp, vec({2, 1}));
  // D(1, (4, 1)) = 4 on (l^1, l^inf).
  const double left = std::sqrt(d_by_subsets(Vec::Ones(2), vec({4, 1}), 1.0, Exponent<double>(1.0),
                                             Exponent<double>::infinity()));
  CHECK(left == doctest::Approx(2.0));
  const double mid = d_by_subsets(Vec::Ones(2), f.values(), 1.0, Exponent<double>(2.0), Exponent<double>::infinity());
  CHECK(left <= mid + 1e-12);
  CHECK(mid <= std::sqrt(2.0) * left + 1e-12);
  const auto rep = check_claim1(c, f, 2.0, std::vector<double>{1.0});
  CHECK(rep.passed());
  CHECK(check_claim1(c, LatticeVectord::zero(sp), 2.0, default_grid<double>()).passed());
}

TEST_CASE("D sandwich under convexification on random weighted couples") {
  gen::forall(60, 29, [](Rng& rng, std::size_t i) {
    const Index n = gen::size(rng, 1, 8);
    const auto sp = MeasureSpaced::make(gen::weights(rng, n));
    const double p = i % 3 == 0 ? 1.01 : rng.uniform(1.05, 4.0);
    const auto rep = check_claim1(random_couple(rng, sp), LatticeVectord(sp, gen::signed_vector(rng, n)), p,
                                  default_grid<double>());
    CHECK(rep.passed());
    CHECK(rep.max_ratio <= std::pow(2.0, 1.0 - 1.0 / p) * (1 + 1e-9));
  });
}

TEST_CASE("K sandwich under convexification: examples") {
  const auto sp = MeasureSpaced::counting(2);
  const auto c = Coupled::l1_linf(sp);
  const LatticeVectord f(sp, vec({2, 1}));
  const double left = std::sqrt(k_l1_linf_by_knots(Vec::Ones(2), vec({4, 1}), 1.0));
  CHECK(left == doctest::Approx(2.0));
  const double mid = k_truncation_search(Vec::Ones(2), f.values(), 1.0, Exponent<double>(2.0));
  CHECK(left <= mid + 1e-9);
  CHECK(mid <= std::sqrt(2.0) * left + 1e-9);
  CHECK(k_numeric(convexify(c, 2.0), f, 1.0).value == doctest::Approx(mid).epsilon(1e-7));
  CHECK(check_maligranda(c, f, 2.0, std::vector<double>{1.0}).passed());

  const auto one = MeasureSpaced::counting(1);
  const LatticeVectord g(one, vec({-3}));
  const auto rep = check_maligranda(Coupled::l1_linf(one), g, 3.0, default_grid<double>());
  CHECK(rep.passed());
  CHECK(rep.max_ratio == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("K sandwich under convexification on random weighted couples") {
  gen::forall(60, 30, [](Rng& rng, std::size_t) {
    const Index n = gen::size(rng, 1, 8);
    const auto sp = MeasureSpaced::make(gen::weights(rng, n));
    const double p = rng.uniform(1.1, 4.0);
    const auto rep = check_maligranda(random_couple(rng, sp), LatticeVectord(sp, gen::signed_vector(rng, n)), p,
                                      default_grid<double>());
    CHECK(rep.math_violations() == 0);
    CHECK(rep.passed());
    CHECK(rep.max_ratio <= std::pow(2.0, 1.0 - 1.0 / p) + 1e-6);
  });
}

TEST_CASE("K-order: examples") {
  const auto sp = MeasureSpaced::counting(3);
  const auto c = Coupled::l1_linf(sp);
  CHECK(k_order_dominates(c, LatticeVectord(sp, vec({3, 2, 1})), LatticeVectord(sp, vec({2, 1, 1}))));
  const LatticeVectord f(sp, vec({1, -4, 2}));
  CHECK(k_order_dominates(c, f, f));
  const auto r = k_order_check(c, LatticeVectord(sp, vec({1, 1, 1})), LatticeVectord(sp, vec({3, 0, 0})),
                               default_grid<double>());
  CHECK_FALSE(r.dominates);
  REQUIRE(r.first_violation.has_value());
  CHECK(*r.first_violation <= 1.0);
}

TEST_CASE("K-order on (l^1, l^inf) agrees with prefix sums of rearrangements") {
  gen::forall(500, 31, [](Rng& rng, std::size_t i) {
    const Index n = gen::size(rng, 1, 10);
    const auto sp = MeasureSpaced::counting(n);
    const Vec f = gen::positive_vector(rng, n);
    Vec g = i % 2 ? gen::submajorized(rng, f) : gen::positive_vector(rng, n);
    if (i % 4 == 1) g *= 1.0 + rng.uniform(0.0, 0.2);
    Vec fs = f, gs = g;
    std::sort(fs.data(), fs.data() + n, std::greater<>());
    std::sort(gs.data(), gs.data() + n, std::greater<>());
    bool expect = true;
    double pf = 0, pg = 0;
    for (Index k = 0; k < n; ++k) {
      pf += fs[k];
      pg += gs[k];
      expect = expect && pg <= pf * (1 + 1e-9);
    }
    CHECK(k_order_dominates(Coupled::l1_linf(sp), LatticeVectord(sp, f), LatticeVectord(sp, g)) == expect);
  });
}
