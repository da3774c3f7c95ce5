#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "gridwit/grid.hpp"

using namespace gridwit;

namespace {

std::mt19937_64 rng(0x9e1dull);

Real Rq(const mpq_class& q, long p = 128) { return Real::of_mpq(q, p); }
Real Rl(long v, long p = 128) { return Real::of_long(v, p); }

bool ball_contains_q(const Real& b, const mpq_class& q) {
  Real diff = b - Real::of_mpq(q, 2 * b.precision());
  return diff.abs().lower_double() <= 0.0;
}

Grid z3() {
  RMat basis(3, RVec(3, Rl(0)));
  for (int i = 0; i < 3; ++i) basis[i][i] = Rl(1);
  return Grid(Lattice(basis), RVec(3, Rl(0)));
}

ZMat rand_unimodular3(int steps = 20) {
  ZMat u(3, ZVec(3, 0));
  for (int i = 0; i < 3; ++i) u[i][i] = 1;
  std::uniform_int_distribution<int> pick(0, 2), coef(-2, 2);
  for (int s = 0; s < steps; ++s) {
    int i = pick(rng), j = pick(rng);
    if (i == j) continue;
    mpz_class c = coef(rng);
    for (int k = 0; k < 3; ++k) u[i][k] += c * u[j][k];
  }
  return u;
}

// Exact-rational brute force over a coefficient cube: all points of
// (basis * k + shift) with sup-norm < bound, plus the minimal |N| in a window.
struct OraclePoint {
  std::array<long, 3> k;
  mpq_class n_abs;
};
std::vector<OraclePoint> oracle_points(const ZMat& basis_cols, const std::vector<mpq_class>& shift,
                                       const mpq_class& bound, long range) {
  std::vector<OraclePoint> out;
  for (long a = -range; a <= range; ++a)
    for (long b = -range; b <= range; ++b)
      for (long c = -range; c <= range; ++c) {
        mpq_class v[3], n = 1;
        bool inside = true;
        for (int i = 0; i < 3; ++i) {
          v[i] = basis_cols[i][0] * a + basis_cols[i][1] * b + basis_cols[i][2] * c + shift[i];
          if (abs(v[i]) >= bound) {
            inside = false;
            break;
          }
        }
        if (!inside) continue;
        for (int i = 0; i < 3; ++i) n *= v[i];
        out.push_back({{a, b, c}, abs(n)});
      }
  return out;
}

}  // namespace

TEST_CASE("product form on frozen examples") {
  CHECK(norm_product({Rl(1), Rl(1), Rl(1)}).midpoint_double() == 1.0);
  CHECK(norm_product({Rl(2), Rl(3), Rl(4)}).midpoint_double() == 24.0);
  Real r = norm_product({Rl(1), Rl(-1), Rq(mpq_class(1, 2))});
  CHECK(ball_contains_q(r, mpq_class(-1, 2)));
  CHECK(r.is_exact());
}

TEST_CASE("unimodularity is checked at construction") {
  RMat bad(2, RVec(2, Rl(0)));
  bad[0][0] = Rl(2);
  bad[1][1] = Rl(1);
  CHECK_THROWS_AS((void)Lattice{bad}, std::invalid_argument);
  RMat singular(2, RVec(2, Rl(1)));
  CHECK_THROWS_AS((void)Lattice{singular}, std::invalid_argument);
}

TEST_CASE("trivial parameter family gives the integer grid as a set") {
  Grid g = cassels_grid(Rl(0), Rl(0), Rl(0), Rl(0));
  auto pts = enumerate_box(g, Rq(mpq_class(3, 2)));
  REQUIRE(pts.size() == 27);
  std::set<std::array<long, 3>> seen;
  for (const auto& w : pts) {
    std::array<long, 3> v;
    for (int i = 0; i < 3; ++i) {
      auto [n, amb] = w.vector[i].nearest_int();
      CHECK(!amb);
      v[i] = n.get_si();
      CHECK(std::abs(v[i]) <= 1);
    }
    CHECK(!w.boundary_ambiguous);
    seen.insert(v);
  }
  CHECK(seen.size() == 27);
}

TEST_CASE("grid points follow the affine formula") {
  Real u = Rq(mpq_class(1, 2)), v = Rq(mpq_class(1, 3));
  Real al = Rq(mpq_class(1, 4)), be = Rq(mpq_class(1, 5));
  Grid g = cassels_grid(u, v, al, be);
  // k = (1,0,0) -> (1, u - alpha, v - beta)
  RVec p1 = g.point({1, 0, 0});
  CHECK(ball_contains_q(p1[0], 1));
  CHECK(ball_contains_q(p1[1], mpq_class(1, 4)));       // 1/2 - 1/4
  CHECK(ball_contains_q(p1[2], mpq_class(2, 15)));      // 1/3 - 1/5
  // k = (2,1,0) -> (2, 2u - 1 - alpha, 2v - beta)
  RVec p2 = g.point({2, 1, 0});
  CHECK(ball_contains_q(p2[0], 2));
  CHECK(ball_contains_q(p2[1], mpq_class(-1, 4)));      // 1 - 1 - 1/4
  CHECK(ball_contains_q(p2[2], mpq_class(7, 15)));      // 2/3 - 1/5
}

TEST_CASE("shifted integer grid has no points in a small box") {
  Grid g(Lattice(z3().lattice().basis()), RVec(3, Rq(mpq_class(1, 2))));
  auto pts = enumerate_box(g, Rq(mpq_class(2, 5)));
  CHECK(pts.empty());
}

TEST_CASE("box enumeration matches the exact brute-force oracle") {
  // cassels grid (1/2, 1/3, 1/4, 1/5), bound 2.1
  ZMat basis = {{1, 0, 0}, {0, -2, 0}, {0, 0, -2}};  // times 1/2-ish? use exact rows below
  (void)basis;
  std::vector<mpq_class> shift = {0, mpq_class(-1, 4), mpq_class(-1, 5)};
  mpq_class u(1, 2), v(1, 3);
  // columns: (1,u,v), (0,-1,0), (0,0,-1)
  std::vector<OraclePoint> expect;
  for (long x = -10; x <= 10; ++x)
    for (long y = -10; y <= 10; ++y)
      for (long z = -10; z <= 10; ++z) {
        mpq_class p0 = x;
        mpq_class p1 = x * u - y + shift[1];
        mpq_class p2 = x * v - z + shift[2];
        mpq_class bound(21, 10);
        if (abs(p0) < bound && abs(p1) < bound && abs(p2) < bound)
          expect.push_back({{x, y, z}, abs(p0 * p1 * p2)});
      }
  Grid g = cassels_grid(Rq(u), Rq(v), Rq(mpq_class(1, 4)), Rq(mpq_class(1, 5)));
  auto pts = enumerate_box(g, Rq(mpq_class(21, 10)));
  CHECK(pts.size() == expect.size());
  for (const auto& w : pts) {
    CHECK(!w.boundary_ambiguous);
    bool found = false;
    for (const auto& e : expect)
      if (e.k[0] == w.integer_coords[0].get_si() && e.k[1] == w.integer_coords[1].get_si() &&
          e.k[2] == w.integer_coords[2].get_si()) {
        CHECK(ball_contains_q(w.abs_product, e.n_abs));
        found = true;
      }
    CHECK(found);
  }
}

TEST_CASE("witness search on the shifted integer grid") {
  Grid g(Lattice(z3().lattice().basis()), RVec(3, Rq(mpq_class(1, 2))));
  auto res = w_witness(g, Rl(1), Rl(0), Rq(mpq_class(1, 5)));
  REQUIRE(res.witness.has_value());
  CHECK(ball_contains_q(res.witness->abs_product, mpq_class(1, 8)));
  CHECK(ball_contains_q(res.witness->sup_norm, mpq_class(1, 2)));
  for (int i = 0; i < 3; ++i)
    CHECK(ball_contains_q(res.witness->vector[i].abs(), mpq_class(1, 2)));
}

TEST_CASE("no witness on the integer grid in a sub-unit window") {
  auto res = w_witness(z3(), Rl(2), Rl(0), Rq(mpq_class(1, 2)));
  CHECK(!res.witness.has_value());
  CHECK(!res.undecided_only);
}

TEST_CASE("witness agrees with the brute-force oracle on random unimodular grids") {
  std::uniform_int_distribution<int> num(-3, 3);
  int checked = 0;
  for (int trial = 0; trial < 24; ++trial) {
    ZMat zb = rand_unimodular3();
    // reject wildly skewed bases so the enumeration stays small
    mpz_class big = 0;
    for (auto& row : zb)
      for (auto& x : row) big = std::max(big, mpz_class(abs(x)));
    if (big > 6) continue;
    std::vector<mpq_class> shift{mpq_class(num(rng), 7), mpq_class(num(rng), 7), mpq_class(num(rng), 7)};
    RMat basis(3, RVec(3, Rl(0)));
    RVec rshift(3, Rl(0));
    for (int i = 0; i < 3; ++i) {
      rshift[i] = Rq(shift[i]);
      for (int j = 0; j < 3; ++j) basis[i][j] = Rl(zb[i][j].get_si());
    }
    Grid g(Lattice(basis), rshift);
    mpq_class theta(3), e1(1, 100), e2(1, 2);

    auto oracle = oracle_points(zb, shift, theta, 40);
    mpq_class best(-1);
    for (const auto& op : oracle)
      if (op.n_abs > e1 && op.n_abs < e2 && (best < 0 || op.n_abs < best)) best = op.n_abs;

    auto res = w_witness(g, Rq(theta), Rq(e1), Rq(e2));
    if (best < 0) {
      CHECK(!res.witness.has_value());
    } else {
      REQUIRE(res.witness.has_value());
      CHECK(ball_contains_q(res.witness->abs_product, best));
    }
    ++checked;
  }
  CHECK(checked >= 6);
}

TEST_CASE("enumeration of a symmetric grid is closed under negation") {
  int done = 0;
  for (int trial = 0; trial < 16 && done < 8; ++trial) {
    ZMat zb = rand_unimodular3();
    mpz_class big = 0;
    for (auto& row : zb)
      for (auto& x : row) big = std::max(big, mpz_class(abs(x)));
    if (big > 5) continue;
    ++done;
    RMat basis(3, RVec(3, Rl(0)));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) basis[i][j] = Rl(zb[i][j].get_si());
    Grid g(Lattice(basis), RVec(3, Rl(0)));
    auto pts = enumerate_box(g, Rq(mpq_class(3, 2)));
    std::set<std::array<long, 3>> coords;
    for (const auto& w : pts)
      coords.insert({w.integer_coords[0].get_si(), w.integer_coords[1].get_si(),
                     w.integer_coords[2].get_si()});
    for (const auto& c : coords) CHECK(coords.count({-c[0], -c[1], -c[2]}) == 1);
  }
}

TEST_CASE("witness existence is monotone in the window") {
  for (int trial = 0; trial < 10; ++trial) {
    ZMat zb = rand_unimodular3();
    mpz_class big = 0;
    for (auto& row : zb)
      for (auto& x : row) big = std::max(big, mpz_class(abs(x)));
    if (big > 6) continue;
    std::uniform_int_distribution<int> num(-3, 3);
    RMat basis(3, RVec(3, Rl(0)));
    RVec rshift(3, Rl(0));
    for (int i = 0; i < 3; ++i) {
      rshift[i] = Rq(mpq_class(num(rng), 5));
      for (int j = 0; j < 3; ++j) basis[i][j] = Rl(zb[i][j].get_si());
    }
    Grid g(Lattice(basis), rshift);
    auto small = w_witness(g, Rl(2), Rq(mpq_class(1, 10)), Rq(mpq_class(2, 5)));
    auto large = w_witness(g, Rl(3), Rq(mpq_class(1, 20)), Rq(mpq_class(4, 5)));
    if (small.witness) CHECK(large.witness.has_value());
  }
}

TEST_CASE("witnesses re-verify from integer coordinates") {
  Grid g = cassels_grid(Rq(mpq_class(1, 2)), Rq(mpq_class(1, 3)), Rq(mpq_class(1, 4)),
                        Rq(mpq_class(1, 5)));
  auto res = w_witness(g, Rl(2), Rq(mpq_class(1, 100)), Rl(1));
  REQUIRE(res.witness.has_value());
  const Witness& w = *res.witness;
  RVec again = g.point(w.integer_coords);
  for (int i = 0; i < 3; ++i) {
    Real diff = again[i] - w.vector[i];
    CHECK(diff.abs().lower_double() <= 0.0);
  }
  Real n = norm_product(again).abs();
  CHECK((n - w.abs_product).abs().lower_double() <= 0.0);
}

TEST_CASE("cap violations throw with an estimate") {
  try {
    enumerate_box(z3(), Rl(200), 1000);
    CHECK(false);
  } catch (const CapExceededError& e) {
    CHECK(e.estimated_count > 1e6);
  }
}
