#include <doctest.h>

#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <set>

#include "gridwit/orbit.hpp"

using namespace gridwit;

namespace {

std::vector<mpz_class> zc(std::initializer_list<long> v) {
  return std::vector<mpz_class>(v.begin(), v.end());
}

TotallyRealField default_field() { return TotallyRealField(zc({1, -2, -1, 1})); }

// Frozen roots of x^3 - x^2 - 2x + 1 (ascending).
const double kRoots[3] = {-1.246979603717467, 0.445041867912629, 1.801937735804838};

bool balls_overlap(const Real& a, const Real& b) {
  return Real::compare(a, b) == Order::Undecided || Real::definitely_equal(a, b);
}

ZVec ze(std::initializer_list<long> v) { return ZVec(v.begin(), v.end()); }

QVec qcoords(std::initializer_list<mpq_class> v) { return QVec(v.begin(), v.end()); }

// Membership of v in the integer row span of an echelon (HNF) basis.
bool in_row_lattice(const ZMat& h, ZVec v) {
  size_t row = 0;
  int n = static_cast<int>(v.size());
  for (int col = 0; col < n; ++col) {
    if (row < h.size() && h[row][col] != 0) {
      if (v[col] % h[row][col] != 0) return false;
      mpz_class f = v[col] / h[row][col];
      for (int j = col; j < n; ++j) v[j] -= f * h[row][j];
      ++row;
    } else if (v[col] != 0) {
      return false;
    }
  }
  for (const mpz_class& x : v) {
    if (x != 0) return false;
  }
  return true;
}

std::vector<long> apply_mod(const ZMat& m, const std::vector<long>& s, long q) {
  int d = static_cast<int>(s.size());
  std::vector<long> out(d);
  for (int i = 0; i < d; ++i) {
    mpz_class acc = 0;
    for (int j = 0; j < d; ++j) acc += m[i][j] * s[j];
    acc = ((acc % q) + q) % q;
    out[i] = acc.get_si();
  }
  return out;
}

// Plain breadth-first closure of a point under the generator matrices mod q.
std::set<std::vector<long>> orbit_closure(const UnitStabilizer& b, const std::vector<long>& start,
                                          long q) {
  std::vector<ZMat> mats;
  for (const UnitGenerator& g : b.generators()) {
    mats.push_back(g.mult);
    mats.push_back(zmat_inverse_unimodular(g.mult));
  }
  std::set<std::vector<long>> seen{start};
  std::queue<std::vector<long>> todo;
  todo.push(start);
  while (!todo.empty()) {
    std::vector<long> s = todo.front();
    todo.pop();
    for (const ZMat& m : mats) {
      std::vector<long> t = apply_mod(m, s, q);
      if (seen.insert(t).second) todo.push(t);
    }
  }
  return seen;
}

// 3x3 double linear solve for the diophantine oracle.
std::array<double, 3> solve3(double a[3][3], const double rhs[3]) {
  double m[3][4];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = a[i][j];
    m[i][3] = rhs[i];
  }
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int i = c + 1; i < 3; ++i)
      if (std::abs(m[i][c]) > std::abs(m[piv][c])) piv = i;
    std::swap(m[piv], m[c]);
    for (int i = 0; i < 3; ++i) {
      if (i == c) continue;
      double f = m[i][c] / m[c][c];
      for (int j = c; j < 4; ++j) m[i][j] -= f * m[c][j];
    }
  }
  return {m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

// Min sup distance from target to the lattice (double oracle, box +-4 around
// the rounded coefficient solution).
double min_dist_oracle(double basis[3][3], const double target[3]) {
  std::array<double, 3> c = solve3(basis, target);
  double best = std::numeric_limits<double>::infinity();
  for (long k0 = std::lround(c[0]) - 4; k0 <= std::lround(c[0]) + 4; ++k0)
    for (long k1 = std::lround(c[1]) - 4; k1 <= std::lround(c[1]) + 4; ++k1)
      for (long k2 = std::lround(c[2]) - 4; k2 <= std::lround(c[2]) + 4; ++k2) {
        double dist = 0;
        for (int i = 0; i < 3; ++i) {
          double coord = basis[i][0] * k0 + basis[i][1] * k1 + basis[i][2] * k2;
          dist = std::max(dist, std::abs(target[i] - coord));
        }
        best = std::min(best, dist);
      }
  return best;
}

}  // namespace

TEST_CASE("compact point of the discriminant-49 cubic") {
  TotallyRealField f = default_field();
  CompactPoint x0 = build_compact_point(f);
  const Lattice& lat = x0.lattice;
  const UnitStabilizer& b = x0.stabilizer;

  REQUIRE(lat.dim() == 3);
  CHECK((lat.det().abs() - Real::of_long(1, 320)).abs().upper_double() < 1e-40);

  REQUIRE(b.rank() == 2);
  CHECK(b.fundamental_verified());

  // Each generator is a totally positive unit of norm 1 acting exactly.
  for (const UnitGenerator& g : b.generators()) {
    CHECK(f.norm(g.elem) == 1);
    CHECK(zmat_det(g.mult) == 1);
    for (int i = 0; i < 3; ++i) {
      CHECK(f.embedding_sign(g.elem, i) == +1);
      CHECK(g.embeddings[i].lower_double() > 0);
    }
    // diag(sigma(u)) * V = V * M as an exact identity (ball overlap).
    RMat lhs = lat.basis();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) lhs[i][j] = lhs[i][j] * f.embed(g.elem, i, 320);
    RMat rhs = rmat_mul(lat.basis(), zmat_to_rmat(g.mult, 320));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(balls_overlap(lhs[i][j], rhs[i][j]));
  }

  // The totally positive units are exactly the squares here, so the log
  // basis determinant is 4x the unit regulator (oracle: frozen roots).
  double v1[3], v2[3];
  for (int i = 0; i < 3; ++i) {
    v1[i] = std::log(std::abs(kRoots[i]));
    v2[i] = std::log(std::abs(kRoots[i] - 1.0));
  }
  double reg = std::abs(v1[0] * v2[1] - v1[1] * v2[0]);
  CHECK(reg == doctest::Approx(0.5254).epsilon(1e-3));  // sanity on the oracle itself
  RMat minor(2, RVec(2));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) minor[i][j] = b.log_basis()[i][j];
  CHECK(rmat_det(minor).abs().midpoint_double() == doctest::Approx(4 * reg).epsilon(1e-9));

  // Covering radius box bound: every candidate generator log has the same
  // sup norm, twice the largest |log| of a root.
  double sup = 0;
  for (int i = 0; i < 3; ++i) sup = std::max(sup, std::abs(v1[i]));
  CHECK(b.covering_radius_bound().midpoint_double() == doctest::Approx(2 * sup).epsilon(1e-9));

  // Exponent helpers.
  CHECK(b.unit_elem(ze({0, 0})) == f.one());
  CHECK(b.unit_elem(ze({1, 0})) == b.generators()[0].elem);
  CHECK(b.unit_matrix(ze({1, 1})) ==
        zmat_mul(b.generators()[0].mult, b.generators()[1].mult));
  DiagElement d10 = b.diag_image(ze({1, 0}));
  for (int i = 0; i < 3; ++i)
    CHECK(d10.entries()[i].midpoint_double() ==
          doctest::Approx(b.generators()[0].embeddings[i].midpoint_double()).epsilon(1e-30));
}

TEST_CASE("compact point of a second cyclic cubic") {
  TotallyRealField f(zc({-1, -3, 0, 1}));  // x^3 - 3x - 1, discriminant 81
  CompactPoint x0 = build_compact_point(f);
  CHECK(x0.lattice.dim() == 3);
  CHECK((x0.lattice.det().abs() - Real::of_long(1, 320)).abs().upper_double() < 1e-40);
  CHECK(x0.stabilizer.rank() == 2);
  CHECK(x0.stabilizer.fundamental_verified());
  for (const UnitGenerator& g : x0.stabilizer.generators())
    for (int i = 0; i < 3; ++i) CHECK(f.embedding_sign(g.elem, i) == +1);
}

TEST_CASE("q-rational fiber coordinates") {
  std::vector<QVec> one = q_rational_points(3, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == qcoords({0, 0, 0}));

  std::vector<QVec> two = q_rational_points(3, 2);
  REQUIRE(two.size() == 8);
  CHECK(two.front() == qcoords({0, 0, 0}));
  CHECK(two.back() == qcoords({mpq_class(1, 2), mpq_class(1, 2), mpq_class(1, 2)}));
  std::set<QVec> uniq(two.begin(), two.end());
  CHECK(uniq.size() == 8);
  CHECK(std::is_sorted(two.begin(), two.end()));

  CHECK(q_rational_points(2, 3).size() == 9);
}

TEST_CASE("stabilizer of a torsion point: orbit-stabilizer bookkeeping is exact") {
  CompactPoint x0 = build_compact_point(default_field());
  const UnitStabilizer& b = x0.stabilizer;

  SubgroupB1 full = stab_subgroup(b, qcoords({0, 0, 0}), 1);
  CHECK(full.index == 1);
  CHECK(in_row_lattice(full.exponent_lattice, ze({1, 0})));
  CHECK(in_row_lattice(full.exponent_lattice, ze({0, 1})));

  for (long q : {2L, 3L, 5L}) {
    std::vector<QVec> pts = q_rational_points(3, q);
    // Spot-check a few fiber points, including the origin.
    for (size_t idx : {size_t(0), size_t(1), pts.size() - 1, pts.size() / 2}) {
      const QVec& y = pts[idx];
      SubgroupB1 sub = stab_subgroup(b, y, q);
      mpz_class qd;
      mpz_ui_pow_ui(qd.get_mpz_t(), q, 3);
      CHECK(sub.index <= qd);

      // Independent orbit size: plain closure under the matrices mod q.
      std::vector<long> start(3);
      for (int i = 0; i < 3; ++i) {
        mpq_class s = y[i] * q;
        REQUIRE(s.get_den() == 1);
        start[i] = mpz_class(((s.get_num() % q) + q) % q).get_si();
      }
      CHECK(sub.index == static_cast<long>(orbit_closure(b, start, q).size()));

      // Every basis exponent fixes the point exactly.
      for (const ZVec& e : sub.exponent_lattice) {
        ZMat m = b.unit_matrix(e);
        std::vector<long> image = apply_mod(m, start, q);
        CHECK(image == start);
      }

      // Lagrange: the index-th power of anything lands in the subgroup.
      ZVec i10(2, 0), i01(2, 0);
      i10[0] = sub.index;
      i01[1] = sub.index;
      CHECK(in_row_lattice(sub.exponent_lattice, i10));
      CHECK(in_row_lattice(sub.exponent_lattice, i01));

      // Covering radius bound of the sublattice is a finite positive ball.
      CHECK(sub.covering_radius_bound().lower_double() > 0);
    }
  }

  CHECK_THROWS_AS((void)stab_subgroup(b, qcoords({mpq_class(1, 2), 0, 0}), 3),
                  std::invalid_argument);
}

TEST_CASE("log approximation in the stabilizer matches brute force") {
  CompactPoint x0 = build_compact_point(default_field());
  const UnitStabilizer& b = x0.stabilizer;

  ApproxResult at_e = approximate_in_stabilizer(b, DiagElement::identity(3));
  CHECK(at_e.generator_exponents == ze({0, 0}));
  CHECK(at_e.log_distance.upper_double() < 1e-50);

  ApproxResult at_gen = approximate_in_stabilizer(b, b.diag_image(ze({1, 0})));
  CHECK(at_gen.generator_exponents == ze({1, 0}));
  CHECK(at_gen.log_distance.upper_double() < 1e-30);

  ApproxResult far = approximate_in_stabilizer(b, b.diag_image(ze({3, -2})));
  CHECK(far.generator_exponents == ze({3, -2}));

  // Random targets against a coefficient-box brute force on midpoints.
  double rows[2][3];
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 3; ++i) rows[k][i] = b.log_basis()[k][i].midpoint_double();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(-8.0, 8.0);
  for (int trial = 0; trial < 20; ++trial) {
    double l0 = unif(rng), l1 = unif(rng);
    RVec entries = {Real::of_double(std::exp(l0)), Real::of_double(std::exp(l1)),
                    Real::of_double(std::exp(-l0 - l1))};
    DiagElement a(entries);
    ApproxResult res = approximate_in_stabilizer(b, a);
    double target[3];
    for (int i = 0; i < 3; ++i) target[i] = std::log(a.entries()[i].midpoint_double());
    double best = std::numeric_limits<double>::infinity();
    for (long f0 = -30; f0 <= 30; ++f0)
      for (long f1 = -30; f1 <= 30; ++f1) {
        double dist = 0;
        for (int i = 0; i < 3; ++i)
          dist = std::max(dist, std::abs(target[i] - f0 * rows[0][i] - f1 * rows[1][i]));
        best = std::min(best, dist);
      }
    CHECK(res.log_distance.midpoint_double() == doctest::Approx(best).epsilon(1e-9));
    CHECK(res.log_distance.upper_double() <= b.covering_radius_bound().upper_double() + 1e-12);
  }

  // Subgroup version: exponents stay inside the exponent lattice.
  SubgroupB1 sub = stab_subgroup(b, qcoords({mpq_class(1, 2), 0, 0}), 2);
  for (int trial = 0; trial < 5; ++trial) {
    double l0 = unif(rng), l1 = unif(rng);
    RVec entries = {Real::of_double(std::exp(l0)), Real::of_double(std::exp(l1)),
                    Real::of_double(std::exp(-l0 - l1))};
    ApproxResult res = approximate_in_subgroup(sub, DiagElement(entries));
    CHECK(in_row_lattice(sub.exponent_lattice, res.generator_exponents));
    CHECK(res.log_distance.upper_double() <= sub.covering_radius_bound().upper_double() + 1e-12);
  }
}

TEST_CASE("diophantine window test against a double oracle") {
  CompactPoint x0 = build_compact_point(default_field());
  const Lattice& lat = x0.lattice;
  long p = 320;
  Real k3 = Real::of_long(3, p), c01 = Real::of_mpq(mpq_class(1, 10), p);

  double basis[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) basis[i][j] = lat.basis()[i][j].midpoint_double();

  auto oracle_first_violation = [&](const double w[3], long q_max) -> long {
    for (long q = 2; q <= q_max; ++q) {
      double target[3] = {q * w[0], q * w[1], q * w[2]};
      if (min_dist_oracle(basis, target) < 0.1 / (q * q)) return q;
    }
    return 0;
  };

  SUBCASE("the origin violates immediately") {
    RVec w(3, Real::of_long(0, p));
    DiophantineResult res = diophantine_test(w, lat, k3, c01, 50);
    CHECK(res.case_label == 2);
    CHECK(res.q == 2);
    CHECK(res.coeffs == ze({0, 0, 0}));
    CHECK(res.distance.upper_double() < 1e-50);
  }

  SUBCASE("a 5-torsion point violates at its denominator, label depends on the cut") {
    QVec c = qcoords({mpq_class(1, 5), mpq_class(2, 5), mpq_class(3, 5)});
    RVec w(3, Real::of_long(0, p));
    for (int i = 0; i < 3; ++i) {
      w[i] = Real::of_long(0, p);
      for (int j = 0; j < 3; ++j) w[i] = w[i] + lat.basis()[i][j] * Real::of_mpq(c[j], p);
    }
    double wd[3] = {w[0].midpoint_double(), w[1].midpoint_double(), w[2].midpoint_double()};
    long first = oracle_first_violation(wd, 100);
    REQUIRE(first != 0);
    CHECK(first <= 5);  // exact hit at q = 5 at the latest

    DiophantineResult res = diophantine_test(w, lat, k3, c01, 100, 100);
    CHECK(res.case_label == 2);
    CHECK(res.q == first);

    DiophantineResult res_cut = diophantine_test(w, lat, k3, c01, 100, 1);
    CHECK(res_cut.case_label == 3);
    CHECK(res_cut.q == first);
  }

  SUBCASE("generic points agree with the oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
      double wd[3] = {unif(rng), unif(rng), unif(rng)};
      RVec w = {Real::of_double(wd[0], p), Real::of_double(wd[1], p),
                Real::of_double(wd[2], p)};
      long first = oracle_first_violation(wd, 300);
      DiophantineResult res = diophantine_test(w, lat, k3, c01, 300, 100);
      if (first == 0) {
        CHECK(res.case_label == 1);
      } else {
        CHECK(res.case_label == (first <= 100 ? 2 : 3));
        CHECK(res.q == first);
      }
      // Reported distance is reproducible at the reported q.
      REQUIRE(res.q.has_value());
      double target[3] = {*res.q * wd[0], *res.q * wd[1], *res.q * wd[2]};
      CHECK(res.distance.midpoint_double() ==
            doctest::Approx(min_dist_oracle(basis, target)).epsilon(1e-9));
    }
  }
}

TEST_CASE("fiber density probe") {
  CompactPoint x0 = build_compact_point(default_field());
  const UnitStabilizer& b = x0.stabilizer;

  SUBCASE("a fixed point sees the worst empty cell of the mesh") {
    QVec origin = qcoords({0, 0, 0});
    DensityProbeResult r8 = fiber_density_probe(b, origin, Real::of_long(10), 8);
    CHECK(r8.orbit_size == 1);
    CHECK(r8.covering_estimate == doctest::Approx(0.4375).epsilon(1e-12));
    DensityProbeResult r9 = fiber_density_probe(b, origin, Real::of_long(10), 9);
    CHECK(r9.covering_estimate == doctest::Approx(0.5).epsilon(1e-12));
    DensityProbeResult r1 = fiber_density_probe(b, origin, Real::of_long(10), 1);
    CHECK(r1.covering_estimate == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("norm bound 1 keeps only the identity") {
    QVec y = qcoords({mpq_class(1, 3), 0, mpq_class(1, 2)});
    DensityProbeResult r = fiber_density_probe(b, y, Real::of_long(1), 4);
    CHECK(r.orbit_size == 1);
  }

  SUBCASE("orbit counts match an independent exponent enumeration") {
    QVec y = qcoords({mpq_class(1, 5), 0, 0});
    Real bound = Real::of_double(std::exp(2.0));
    DensityProbeResult r = fiber_density_probe(b, y, bound, 4);

    double rows[2][3];
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 3; ++i) rows[k][i] = b.log_basis()[k][i].midpoint_double();
    double lq = std::log(std::exp(2.0));
    std::set<std::vector<long>> oracle;
    std::vector<long> start = {1, 0, 0};  // numerators of y mod 5
    for (long e0 = -6; e0 <= 6; ++e0)
      for (long e1 = -6; e1 <= 6; ++e1) {
        bool ok = true;
        for (int i = 0; i < 3; ++i)
          if (e0 * rows[0][i] + e1 * rows[1][i] > lq + 1e-12) ok = false;
        if (!ok) continue;
        std::vector<long> v = start;
        const ZMat m0 = e0 >= 0 ? b.generators()[0].mult
                                : zmat_inverse_unimodular(b.generators()[0].mult);
        const ZMat m1 = e1 >= 0 ? b.generators()[1].mult
                                : zmat_inverse_unimodular(b.generators()[1].mult);
        for (long s = 0; s < std::abs(e0); ++s) v = apply_mod(m0, v, 5);
        for (long s = 0; s < std::abs(e1); ++s) v = apply_mod(m1, v, 5);
        oracle.insert(v);
      }
    CHECK(r.orbit_size == static_cast<long>(oracle.size()));
    CHECK(r.orbit_size > 1);
  }

  SUBCASE("growing the norm bound only fills in the orbit") {
    QVec y = qcoords({mpq_class(1, 5), 0, 0});
    std::set<std::vector<long>> closure = orbit_closure(b, {1, 0, 0}, 5);
    long prev_size = 0;
    double prev_est = 1.0;
    for (double q : {100.0, 1000.0, 10000.0}) {
      DensityProbeResult r = fiber_density_probe(b, y, Real::of_double(q), 6);
      CHECK(r.orbit_size >= prev_size);
      CHECK(r.covering_estimate <= prev_est + 1e-12);
      CHECK(r.orbit_size <= static_cast<long>(closure.size()));
      prev_size = r.orbit_size;
      prev_est = r.covering_estimate;
    }
  }

  SUBCASE("the exponent box respects the cap") {
    QVec y = qcoords({mpq_class(1, 5), 0, 0});
    CHECK_THROWS_AS(
        (void)fiber_density_probe(b, y, Real::of_double(1e10), 4, 10),
        CapExceededError);
  }
}
