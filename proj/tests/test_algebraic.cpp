#include <doctest.h>

#include <cmath>

#include "gridwit/algebraic.hpp"

using namespace gridwit;

namespace {

// Independent root finder: coarse sign scan in double precision followed by
// plain bisection.  Deliberately avoids the Sturm machinery.
std::vector<double> bisection_oracle(const std::vector<double>& coeffs, double lo, double hi) {
  auto eval = [&](double x) {
    double acc = 0;
    for (size_t i = coeffs.size(); i > 0; --i) acc = acc * x + coeffs[i - 1];
    return acc;
  };
  std::vector<double> roots;
  const int grid = 40000;
  double prev_x = lo, prev_f = eval(lo);
  for (int i = 1; i <= grid; ++i) {
    double x = lo + (hi - lo) * i / grid;
    double f = eval(x);
    if (prev_f == 0) roots.push_back(prev_x);
    if (prev_f * f < 0) {
      double a = prev_x, b = x;
      for (int it = 0; it < 200; ++it) {
        double m = (a + b) / 2;
        if (eval(a) * eval(m) <= 0) {
          b = m;
        } else {
          a = m;
        }
      }
      roots.push_back((a + b) / 2);
    }
    prev_x = x;
    prev_f = f;
  }
  return roots;
}

}  // namespace

TEST_CASE("roots of x^2 - 2 match the bisection oracle and the frozen value") {
  QPoly p = qpoly_parse("-2,0,1");
  auto oracle = bisection_oracle({-2, 0, 1}, -3, 3);
  auto roots = AlgebraicNumber::real_roots(p);
  REQUIRE(roots.size() == 2);
  REQUIRE(oracle.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    double got = roots[i].approx(64).midpoint_double();
    CHECK(std::abs(got - oracle[i]) < 1e-9);
  }
  // frozen: sqrt(2) = 1.41421356237309504880
  Real r = roots[1].approx(256);
  Real ref = Real::of_decimal("1.41421356237309504880168872420969807857", 256);
  CHECK((r - ref).abs().upper_double() < 1e-35);
  CHECK(roots[0].sign() == -1);
  CHECK(roots[1].sign() == 1);
}

TEST_CASE("roots of the discriminant-49 cubic match the bisection oracle") {
  QPoly p = qpoly_parse("1,-2,-1,1");  // x^3 - x^2 - 2x + 1
  auto oracle = bisection_oracle({1, -2, -1, 1}, -3, 3);
  auto roots = AlgebraicNumber::real_roots(p);
  REQUIRE(roots.size() == 3);
  REQUIRE(oracle.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    double got = roots[i].approx(64).midpoint_double();
    CHECK(std::abs(got - oracle[i]) < 1e-9);
  }
  // frozen 15-digit values
  CHECK(std::abs(roots[0].approx(64).midpoint_double() - (-1.246979603717467)) < 1e-12);
  CHECK(std::abs(roots[1].approx(64).midpoint_double() - 0.445041867912629) < 1e-12);
  CHECK(std::abs(roots[2].approx(64).midpoint_double() - 1.801937735804838) < 1e-12);
  for (int i = 0; i < 3; ++i) CHECK(roots[i].embedding_index() == i);
}

TEST_CASE("root count equals the independent Sturm-chain count") {
  for (const char* s : {"-2,0,1", "1,-2,-1,1", "-1,0,0,0,1", "1,0,1"}) {
    QPoly p = qpoly_parse(s);
    SturmChain chain = sturm_chain(p);
    mpq_class b = cauchy_root_bound(p);
    int expected = chain.count_roots(-b, b);
    if (expected == 0) {
      CHECK(AlgebraicNumber::real_roots(p).empty());
    } else {
      CHECK(static_cast<int>(AlgebraicNumber::real_roots(p).size()) == expected);
    }
  }
}

TEST_CASE("non-squarefree input is rejected") {
  QPoly p = qpoly_parse("1,2,1");  // (x+1)^2
  CHECK_THROWS_AS(AlgebraicNumber::real_roots(p), std::invalid_argument);
}

TEST_CASE("rational roots collapse to exact points") {
  QPoly p = qpoly_parse("0,-1,0,1");  // x^3 - x = x(x-1)(x+1)
  auto roots = AlgebraicNumber::real_roots(p);
  REQUIRE(roots.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(roots[i].interval().is_point());
    CHECK(roots[i].compare_rational(mpq_class(i - 1)) == 0);
  }
  CHECK(roots[1].sign() == 0);
}

TEST_CASE("approx radius honors the precision contract") {
  QPoly p = qpoly_parse("1,-2,-1,1");
  auto roots = AlgebraicNumber::real_roots(p);
  for (long prec : {64L, 128L, 256L, 512L}) {
    for (const auto& r : roots) {
      Real a = r.approx(prec);
      double bound = std::ldexp(std::max(1.0, std::abs(a.midpoint_double())), static_cast<int>(1 - prec));
      CHECK(a.radius_double() <= bound * 1.0000001 + 1e-300);
    }
  }
}

TEST_CASE("refinement never loses the root: interval endpoints keep opposite signs") {
  QPoly p = qpoly_parse("-2,0,1");
  auto iv = isolate_real_roots(p);
  REQUIRE(iv.size() == 2);
  for (auto r : iv) {
    auto fine = refine_root(p, r, mpq_class(1, mpz_class(1) << 200));
    if (!fine.is_point()) {
      CHECK(sgn(qpoly_eval(p, fine.lo)) * sgn(qpoly_eval(p, fine.hi)) == -1);
      CHECK(fine.hi - fine.lo <= mpq_class(1, mpz_class(1) << 200));
      CHECK(fine.lo >= r.lo);
      CHECK(fine.hi <= r.hi);
    }
  }
}

TEST_CASE("compare_rational is exact near the root") {
  QPoly p = qpoly_parse("-2,0,1");
  auto roots = AlgebraicNumber::real_roots(p);
  const auto& sqrt2 = roots[1];
  CHECK(sqrt2.compare_rational(mpq_class(141421356, 100000000)) == 1);   // sqrt2 > 1.41421356
  CHECK(sqrt2.compare_rational(mpq_class(141421357, 100000000)) == -1);  // sqrt2 < 1.41421357
  CHECK(sqrt2.compare_rational(mpq_class(1)) == 1);
  CHECK(sqrt2.compare_rational(mpq_class(2)) == -1);
}
