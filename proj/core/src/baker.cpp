#include "gridwit/baker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <initializer_list>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>

namespace gridwit {

namespace {

mpq_class mpq_pow_si(const mpq_class& x, long e) {
  mpq_class acc(1);
  mpq_class base = e >= 0 ? x : mpq_class(1) / x;
  unsigned long n = static_cast<unsigned long>(e >= 0 ? e : -e);
  while (n > 0) {
    if (n & 1) acc *= base;
    base *= base;
    n >>= 1;
  }
  return acc;
}

// Characteristic polynomial of a rational matrix (Faddeev-LeVerrier), monic,
// coefficients for x^0 .. x^d.
QPoly char_poly(const QMat& m) {
  int d = static_cast<int>(m.size());
  QMat mk = qmat_identity(d);
  QPoly coeffs(d + 1, mpq_class(0));
  coeffs[d] = 1;
  mpq_class ck(1);
  for (int k = 1; k <= d; ++k) {
    // mk <- m * (mk + c_{k-1} I) with c_0 = 1 folded into the start
    QMat shifted = mk;
    if (k > 1) {
      for (int i = 0; i < d; ++i) shifted[i][i] += ck;
    }
    mk = qmat_mul(m, shifted);
    mpq_class tr(0);
    for (int i = 0; i < d; ++i) tr += mk[i][i];
    ck = -tr / k;
    coeffs[d - k] = ck;
  }
  return coeffs;
}

long checked_mul(std::initializer_list<long> factors, const char* what) {
  __int128 acc = 1;
  for (long f : factors) {
    acc *= f;
    if (acc > std::numeric_limits<long>::max() || acc < std::numeric_limits<long>::min())
      throw std::overflow_error(std::string(what) + " overflows long");
  }
  return static_cast<long>(acc);
}

}  // namespace

LogPair log_pair_rational(const mpq_class& l1, const mpq_class& l2, long bound, long prec) {
  if (l1 <= 0 || l2 <= 0) throw std::invalid_argument("log_pair_rational: values must be positive");
  if (l1 == 1 || l2 == 1) throw std::invalid_argument("log_pair_rational: values must differ from 1");
  // Exhaustive exact relation check: l1^m1 * l2^m2 = 1 with 0 < max|mi| <= bound.
  for (long m1 = 0; m1 <= bound; ++m1) {
    for (long m2 = -bound; m2 <= bound; ++m2) {
      if (m1 == 0 && m2 <= 0) continue;
      if (mpq_pow_si(l1, m1) * mpq_pow_si(l2, m2) == 1)
        throw std::invalid_argument("log_pair_rational: multiplicative relation (" +
                                    std::to_string(m1) + ", " + std::to_string(m2) + ")");
    }
  }
  LogPair p{Real::of_mpq(l1, prec), Real::of_mpq(l2, prec), Real::of_long(0, prec), Real::of_long(0, prec),
            bound};
  p.a1 = p.lambda1.log();
  p.a2 = p.lambda2.log();
  return p;
}

LogPair log_pair_characters(const UnitStabilizer& b, const RootIndex& alpha, const ZVec& e1,
                            const ZVec& e2, long bound, long prec) {
  DiagElement d1 = b.diag_image(e1, prec);
  DiagElement d2 = b.diag_image(e2, prec);
  Real l1 = d1.weight(alpha);
  Real l2 = d2.weight(alpha);
  Real a1 = l1.log();
  Real a2 = l2.log();
  int r = b.rank();
  for (long m1 = 0; m1 <= bound; ++m1) {
    for (long m2 = -bound; m2 <= bound; ++m2) {
      if (m1 == 0 && m2 <= 0) continue;
      Real comb = Real::of_long(m1, prec) * a1 + Real::of_long(m2, prec) * a2;
      if (comb.compare(comb, Real::of_long(0, prec)) != Order::Undecided) continue;
      // Ball straddles zero: decide exactly in the field.  alpha(w) = 1 means
      // two conjugates of the unit w coincide (shear) or w = 1 (translation).
      ZVec e(r);
      for (int j = 0; j < r; ++j) e[j] = m1 * e1[j] + m2 * e2[j];
      FieldElem w = b.unit_elem(e);
      bool relation = false;
      if (alpha.is_translation()) {
        relation = (w == b.field().one());
      } else {
        QPoly cp = char_poly(b.field().mult_matrix(w));
        relation = (poly_discriminant(cp) == 0);
      }
      if (relation)
        throw std::invalid_argument("log_pair_characters: relation (" + std::to_string(m1) +
                                    ", " + std::to_string(m2) + ") for " + alpha.str());
      // Discriminant nonzero: all conjugates distinct, so no relation here.
    }
  }
  return LogPair{l1, l2, a1, a2, bound};
}

std::pair<long, long> small_log_combination(const LogPair& p, const Real& m) {
  long prec = std::max(p.a1.precision(), static_cast<long>(kDefaultPrecision));
  Real recip = Real::of_long(1, prec) / m;
  Real x = p.a1 / p.a2;
  mpz_class pp = 1, pc, qp = 0, qc = 1;  // convergent numerators/denominators
  // First term a0 = floor(x); when the ball straddles an integer either
  // branch works, because the combination test below is the ground truth.
  auto fl0 = x.floor_int();
  pc = fl0.second ? x.nearest_int().first : fl0.first;
  Real rem = x - Real::of_mpz(pc, prec);
  long max_iters = prec;  // denominators grow at least like Fibonacci numbers
  for (long iter = 0; iter < max_iters; ++iter) {
    if (!qc.fits_slong_p() || !pc.fits_slong_p())
      throw std::runtime_error("small_log_combination: convergents exceed long range");
    long n1 = qc.get_si();
    long n2 = -pc.get_si();
    Real comb = (Real::of_long(n1, prec) * p.a1 + Real::of_long(n2, prec) * p.a2).abs();
    Order cmp = Real::compare(comb, recip);
    if (cmp == Order::Less || Real::definitely_equal(comb, recip) ||
        Real::definitely_equal(comb, Real::of_long(0, prec))) {
      return {n1, n2};
    }
    if (Real::compare(rem, Real::of_long(0, prec)) == Order::Undecided) {
      // Exactly rational ratio but the last convergent did not reach 1/m:
      // the combination is exactly zero only at the final convergent, which
      // the check above accepts; reaching here means precision ran out.
      throw std::runtime_error("small_log_combination: ratio remainder indistinct from zero");
    }
    Real inv = Real::of_long(1, prec) / rem;
    auto fl = inv.floor_int();
    mpz_class a = fl.second ? inv.nearest_int().first : fl.first;
    mpz_class pn = a * pc + pp;
    mpz_class qn = a * qc + qp;
    pp = pc;
    pc = pn;
    qp = qc;
    qc = qn;
    rem = inv - Real::of_mpz(a, prec);
  }
  throw std::runtime_error("small_log_combination: no combination within precision budget");
}

PowerProduct near_target_product(const LogPair& p, const Real& t, const Real& m, long q,
                                 double eta_cap) {
  long prec = std::max(t.precision(), p.a1.precision());
  Real zero = Real::of_long(0, prec);
  Real one = Real::of_long(1, prec);
  if (Real::compare(t, zero) != Order::Greater)
    throw std::invalid_argument("near_target_product: target must be positive");
  if (q < 1) throw std::invalid_argument("near_target_product: q must be >= 1");
  Real qm = Real::of_long(q, prec) / m;  // ladder rung target scale q/m
  Real bound = Real::of_long(4, prec) * qm * t;
  if (q == 1) {
    // Exact-target shortcuts.
    if (Real::definitely_equal(t, p.lambda1))
      return PowerProduct{1, 0, p.lambda1, zero, bound, zero, 0};
    if (Real::definitely_equal(t, p.lambda2))
      return PowerProduct{0, 1, p.lambda2, zero, bound, zero, 0};
    if (Real::definitely_equal(t, one)) return PowerProduct{0, 0, one, zero, bound, zero, 0};
  }

  auto [n1, n2] = small_log_combination(p, m);
  Real comb = Real::of_long(n1, prec) * p.a1 + Real::of_long(n2, prec) * p.a2;
  Order sgn = Real::compare(comb, zero);
  if (sgn == Order::Undecided)
    throw std::domain_error("near_target_product: base combination indistinct from zero");
  if (sgn == Order::Less) {
    n1 = -n1;
    n2 = -n2;
    comb = -comb;
  }
  Real a_q = Real::of_long(q, prec) * comb;  // rung of the exponent-q subgroup

  // b := ceil((q/m)/a_q) * a_q lies in [q/m, 2q/m).
  Real ratio = qm / a_q;
  auto fl = ratio.floor_int();
  mpz_class kc = fl.first + 1;
  if (!fl.second) {
    // If ratio is exactly integral the ceiling equals the floor.
    Real frac = ratio - Real::of_mpz(fl.first, prec);
    if (Real::definitely_equal(frac, zero)) kc = fl.first;
  }
  if (!kc.fits_slong_p()) throw std::overflow_error("near_target_product: rung multiplier");
  long k_ceil = kc.get_si();
  Real rung = Real::of_long(k_ceil, prec) * a_q;
  if (Real::compare(rung, qm) == Order::Less ||
      Real::compare(rung, Real::of_long(2, prec) * qm) == Order::Greater)
    throw std::logic_error("near_target_product: ladder rung escaped [q/m, 2q/m)");

  Real log_t = t.log();
  double cap = std::max(1.0, std::abs(log_t.midpoint_double())) *
               std::pow(m.midpoint_double(), eta_cap + 1.0);
  double i_est = log_t.midpoint_double() / rung.midpoint_double();
  double rung_exp = std::max(std::abs(static_cast<double>(n1)), std::abs(static_cast<double>(n2))) *
                    static_cast<double>(k_ceil) * static_cast<double>(q);
  if (std::abs(i_est) * rung_exp > cap)
    throw StepCapError(std::abs(i_est) * rung_exp, cap);

  auto ni = (log_t / rung).nearest_int();
  if (!ni.first.fits_slong_p()) throw std::overflow_error("near_target_product: ladder index");
  long i_star = ni.first.get_si();
  long l1 = checked_mul({i_star, k_ceil, q, n1}, "exponent l1");
  long l2 = checked_mul({i_star, k_ceil, q, n2}, "exponent l2");

  // Net property: the chosen multiple lands within half a rung of log t.
  Real miss = (Real::of_long(i_star, prec) * rung - log_t).abs();
  if (Real::compare(miss, rung.mul_2si(-1) * Real::of_double(1.0 + 1e-9, prec)) ==
      Order::Greater)
    throw std::logic_error("near_target_product: ladder multiple missed the half-rung net");

  Real value = (Real::of_long(l1, prec) * p.a1 + Real::of_long(l2, prec) * p.a2).exp();
  Real error = (value - t).abs();
  if (Real::compare(qm, one) != Order::Greater &&
      Real::compare(error, bound) == Order::Greater)
    throw std::logic_error("near_target_product: calibrated error bound violated");
  PowerProduct out{l1, l2, value, error, bound, rung, std::labs(i_star)};
  return out;
}

double empirical_baker_exponent(const LogPair& p, long bound) {
  // Best approximations to a1/a2 are the continued-fraction convergents, so
  // the box minima of |m1 a1 + m2 a2| occur at (q_k, -p_k).
  long prec = p.a1.precision();
  Real x = p.a1 / p.a2;
  mpz_class pp = 1, pc, qp = 0, qc = 1;
  auto fl0 = x.floor_int();
  pc = fl0.first;
  Real rem = x - Real::of_mpz(fl0.first, prec);
  double eta = 0.0;
  for (long iter = 0; iter < prec; ++iter) {
    mpz_class height = std::max(abs(pc), abs(qc));
    if (height > bound) break;
    if (height >= 2) {
      double comb = std::abs(qc.get_d() * p.a1.midpoint_double() +
                             (-pc.get_d()) * p.a2.midpoint_double());
      if (comb > 0)
        eta = std::max(eta, std::log(1.0 / comb) / std::log(height.get_d()));
    }
    if (Real::compare(rem, Real::of_long(0, prec)) == Order::Undecided) break;
    Real inv = Real::of_long(1, prec) / rem;
    auto fl = inv.floor_int();
    if (fl.second) break;
    mpz_class a = fl.first;
    mpz_class pn = a * pc + pp;
    mpz_class qn = a * qc + qp;
    pp = pc;
    pc = pn;
    qp = qc;
    qc = qn;
    rem = inv - Real::of_mpz(a, prec);
  }
  return eta;
}

CharacterApprox character_approx(const SubgroupB1& b1, const RootIndex& alpha, const Real& t,
                                 const Real& m, double eta_cap) {
  const UnitStabilizer& parent = b1.parent;
  int r = parent.rank();
  long prec = std::max(t.precision(), static_cast<long>(kDefaultPrecision));

  // Exponent of the quotient Z^r / exponent_lattice: largest elementary
  // divisor; q_exp * Z^r lies inside the lattice.
  ZVec snf = zmat_snf_diagonal(b1.exponent_lattice);
  mpz_class q_mpz = 1;
  for (const auto& dgn : snf) {
    mpz_class ad = abs(dgn);
    if (ad > q_mpz) q_mpz = ad;
  }
  if (!q_mpz.fits_slong_p()) throw std::overflow_error("character_approx: quotient exponent");
  long q_exp = q_mpz.get_si();

  // Candidate exponent vectors, small box, sign-canonicalised.
  std::vector<ZVec> cands;
  {
    std::vector<long> e(r, -2);
    while (true) {
      ZVec z(r);
      bool nonzero = false, leading_neg = false, seen = false;
      for (int i = 0; i < r; ++i) {
        z[i] = e[i];
        if (e[i] != 0 && !seen) {
          seen = true;
          leading_neg = e[i] < 0;
        }
        if (e[i] != 0) nonzero = true;
      }
      if (nonzero && !leading_neg) cands.push_back(z);
      int k = 0;
      while (k < r && e[k] == 2) e[k++] = -2;
      if (k == r) break;
      ++e[k];
    }
  }
  // Prefer short vectors for well-conditioned pairs.
  std::stable_sort(cands.begin(), cands.end(), [](const ZVec& a, const ZVec& b) {
    mpz_class na = 0, nb = 0;
    for (const auto& v : a) na += v * v;
    for (const auto& v : b) nb += v * v;
    return na < nb;
  });
  // Skip near-trivial characters.
  auto usable = [&](const ZVec& e) {
    Real lg = parent.diag_image(e, prec).weight(alpha).log();
    return std::abs(lg.midpoint_double()) > 1e-6;
  };

  for (size_t i = 0; i < cands.size(); ++i) {
    if (!usable(cands[i])) continue;
    for (size_t j = i + 1; j < cands.size(); ++j) {
      if (!usable(cands[j])) continue;
      std::optional<LogPair> pair;
      try {
        pair = log_pair_characters(parent, alpha, cands[i], cands[j], 20, prec);
      } catch (const std::invalid_argument&) {
        continue;  // dependent pair; try the next candidate
      }
      PowerProduct pp = near_target_product(*pair, t, m, q_exp, eta_cap);
      ZVec e_total(r);
      for (int k = 0; k < r; ++k) e_total[k] = pp.l1 * cands[i][k] + pp.l2 * cands[j][k];
      DiagElement b = parent.diag_image(e_total, prec);
      Real alpha_value = b.weight(alpha);
      Real error = (alpha_value - t).abs();
      return CharacterApprox{b, e_total, alpha_value, error, pp.bound, *pair};
    }
  }
  throw std::runtime_error("character_approx: no independent character pair in the scan box");
}

}  // namespace gridwit
