#include "caldera/extension.hpp"
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

Matrix<double> random_positive(Rng& rng, Index n) {
  Matrix<double> g(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) g(i, j) = rng.below(4) == 0 ? 0.0 : rng.uniform(0.0, 1.0);
  }
  return g;
}

// Samples h and counts |l.h| > q(h) (1 + 1e-8).
std::size_t domination_failures(const RowMajorant<double>& q, const Vec& l, Rng& rng, int samples) {
  std::size_t bad = 0;
  for (int s = 0; s < samples; ++s) {
    const Vec h = s % 2 ? gen::uniform_vector(rng, l.size(), -1, 1) : gen::signed_vector(rng, l.size(), 1e-3, 1e3, 3);
    if (std::abs(l.dot(h)) > q.value(h) * (1 + 1e-8) + 1e-14 * l.cwiseAbs().dot(h.cwiseAbs())) ++bad;
  }
  return bad;
}

}  // namespace

TEST_CASE("majorant with identity T") {
  const auto sp = MeasureSpaced::counting(3);
  const SublinearMajorant<double> h(MatrixOperator<double>::identity(sp), 2.0, 2.0);
  const Vec x = vec({1, -2, 0.5});
  CHECK((h.apply(x) - std::sqrt(2.0) * x.cwiseAbs()).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(h.apply(Vec(Vec::Zero(3))).isZero(0.0));
  CHECK(apply_majorant(h, LatticeVectord(sp, x)).values() == h.apply(x));
  CHECK_THROWS_AS(SublinearMajorant<double>(MatrixOperator<double>(sp, Matrix<double>::Identity(3, 3), false), 1.0, 2.0),
                  DomainError);
  CHECK_THROWS_AS(SublinearMajorant<double>(MatrixOperator<double>::identity(sp), 0.0, 2.0), DomainError);
  CHECK_THROWS_AS(SublinearMajorant<double>(MatrixOperator<double>::identity(sp), 1.0, 1.0), DomainError);
}

TEST_CASE("majorant built from a pipeline T reproduces |g| at f") {
  gen::forall(200, 51, [](Rng& rng, std::size_t) {
    const Index n = gen::size(rng, 1, 12);
    const auto sp = MeasureSpaced::counting(n);
    const double p = rng.uniform(1.1, 4.0), alpha = std::pow(2.0, p - 1.0);
    const Vec f = gen::signed_vector(rng, n);
    const Vec g = gen::submajorized(rng, f);
    const Vec a = alpha * f.cwiseAbs().array().pow(p).matrix();
    const Vec b = g.cwiseAbs().array().pow(p).matrix();
    const auto t = construct_positive_operator(LatticeVectord(sp, a), LatticeVectord(sp, b));
    const SublinearMajorant<double> h(t.op, alpha, p);
    const Vec hf = h.apply(f);
    for (Index i = 0; i < n; ++i) CHECK(close_rel(hf[i], std::abs(g[i]), 1e-10, 1e-300));
    const Vec x = gen::signed_vector(rng, n);
    CHECK((h.apply(Vec(-x)) - h.apply(x)).cwiseAbs().maxCoeff() == 0.0);
  });
}

TEST_CASE("Minkowski inequality for positive operators: examples") {
  const auto sp = MeasureSpaced::counting(3);
  const Vec h1 = vec({1, -2, 3});
  const auto id = MatrixOperator<double>::identity(sp);
  const auto zero_rep = check_minkowski(id, h1, Vec(Vec::Zero(3)), 2.5);
  CHECK(zero_rep.passed());
  CHECK(zero_rep.max_excess == 0.0);
  // With G = Id the inequality is the scalar triangle inequality; equality for like signs.
  const auto r = check_minkowski(id, h1, Vec(2 * h1), 3.0);
  CHECK(r.passed());
  CHECK(r.max_excess <= 1e-15);
  CHECK_THROWS_AS(check_minkowski(id, h1, Vec(Vec::Zero(2)), 2.0), StructuralError);
}

TEST_CASE("Minkowski inequality for random positive operators") {
  gen::forall(3000, 52, [](Rng& rng, std::size_t) {
    const Index n = gen::size(rng, 1, 10);
    const auto sp = MeasureSpaced::counting(n);
    const MatrixOperator<double> g(sp, random_positive(rng, n), true);
    const auto rep = check_minkowski(g, gen::uniform_vector(rng, n, -1, 1), gen::uniform_vector(rng, n, -1, 1),
                                     rng.uniform(1.01, 8.0));
    CHECK(rep.passed());
  });
}

TEST_CASE("majorants are sublinear") {
  const auto sp = MeasureSpaced::counting(2);
  const SublinearMajorant<double> id(MatrixOperator<double>::identity(sp), 2.0, 3.0);
  CHECK(check_sublinear(id, 64, 1).passed());
  gen::forall(100, 53, [](Rng& rng, std::size_t) {
    const Index n = gen::size(rng, 1, 10);
    const auto s = MeasureSpaced::counting(n);
    const SublinearMajorant<double> h(MatrixOperator<double>(s, random_positive(rng, n), true),
                                      rng.uniform(0.5, 4.0), rng.uniform(1.05, 5.0));
    const auto rep = check_sublinear(h, 100, rng.next());
    CHECK(rep.passed());
  });
}

TEST_CASE("Hoelder row: examples") {
  const RowMajorant<double> q(vec({2.0}), 2.0);
  const Vec f = vec({3});
  CHECK(q.value(f) == doctest::Approx(3 * std::sqrt(2.0)));
  const Vec l = holder_extension_row(q, f, 3 * std::sqrt(2.0));
  CHECK(l[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(l.dot(f) == doctest::Approx(3 * std::sqrt(2.0)).epsilon(1e-15));
  Rng rng(7);
  for (int s = 0; s < 100; ++s) {
    const double h = rng.uniform(-10, 10);
    CHECK(std::abs(l[0] * h) <= std::sqrt(2.0) * std::abs(h) * (1 + 1e-15));
  }
  CHECK(holder_extension_row(q, f, 0.0).isZero(0.0));
  const RowMajorant<double> off(vec({0.0, 1.0}), 2.0);
  CHECK_THROWS_AS(holder_extension_row(off, vec({1.0, 0.0}), 0.5), DomainError);
  CHECK_THROWS_AS(holder_extension_row(q, f, 10.0), DomainError);
}

TEST_CASE("Hoelder and greedy rows: exact on f and dominated by q") {
  gen::forall(200, 54, [](Rng& rng, std::size_t i) {
    const Index n = gen::size(rng, 1, 8);
    Vec w = gen::uniform_vector(rng, n, 0.0, 1.0);
    if (i % 3 == 0) w[rng.below(static_cast<std::uint64_t>(n))] = 0.0;
    if (w.isZero(0.0)) w[0] = 1.0;
    const RowMajorant<double> q(w, rng.uniform(1.1, 4.0));
    Vec f = gen::signed_vector(rng, n, 1e-2, 1e2, 4);
    if (q.value(f) == 0.0) f = Vec::Ones(n);
    const double qf = q.value(f);
    const double g = (i % 4 == 0) ? qf : rng.uniform(-1.0, 1.0) * qf;
    const Vec lh = holder_extension_row(q, f, g);
    const Vec lg = greedy_hb_extension_row(q, f, g);
    CHECK(std::abs(lh.dot(f) - g) <= 1e-10 * std::max(1.0, std::abs(g)));
    CHECK(std::abs(lg.dot(f) - g) <= 1e-10 * std::max(1.0, std::abs(g)));
    CHECK(domination_failures(q, lh, rng, 500) == 0);
    CHECK(domination_failures(q, lg, rng, 500) == 0);
  });
}

TEST_CASE("greedy row with identity T agrees with the Hoelder row on f") {
  const RowMajorant<double> q(vec({0.0, 2.0, 0.0}), 2.0);  // row 1 of 2 Id, p = 2
  const Vec f = vec({1, 3, -2});
  const double g = q.value(f);
  CHECK(greedy_hb_extension_row(q, f, g).dot(f) == doctest::Approx(holder_extension_row(q, f, g).dot(f)));
}

TEST_CASE("greedy row for g = 0 is zero") {
  gen::forall(100, 55, [](Rng& rng, std::size_t) {
    const Index n = gen::size(rng, 1, 8);
    const RowMajorant<double> q(gen::uniform_vector(rng, n, 0.1, 1.0), rng.uniform(1.1, 4.0));
    CHECK(greedy_hb_extension_row(q, gen::signed_vector(rng, n), 0.0).cwiseAbs().maxCoeff() <= 1e-12);
  });
}
