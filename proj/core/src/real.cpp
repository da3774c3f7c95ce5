#include "gridwit/real.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <vector>

namespace gridwit {

namespace {

// One-ulp upper bound for a value computed at precision `prec` whose result
// landed at exponent `e` (mpfr convention: |m| in [1/2, 1), value m*2^e).
void add_ulp(mpfr_ptr rad, mpfr_srcptr val, long prec) {
  mpfr_exp_t e = mpfr_zero_p(val) ? mpfr_get_emin() + prec : mpfr_get_exp(val);
  mpfr_t ulp;
  mpfr_init2(ulp, kRadiusPrecision);
  mpfr_set_ui_2exp(ulp, 1, e - prec, MPFR_RNDU);
  mpfr_add(rad, rad, ulp, MPFR_RNDU);
  mpfr_clear(ulp);
}

struct Tmp {
  mpfr_t t;
  explicit Tmp(long prec = kRadiusPrecision) { mpfr_init2(t, prec); }
  ~Tmp() { mpfr_clear(t); }
  operator mpfr_ptr() { return t; }
  operator mpfr_srcptr() const { return t; }
  // mpfr's predicate/set macros expand to `(x)->field`; route them to the
  // underlying struct pointer.
  mpfr_ptr operator->() { return t; }
  mpfr_srcptr operator->() const { return t; }
};

}  // namespace

Real::Real(long prec) {
  if (prec < 2 || prec > kMaxPrecision) throw std::invalid_argument("Real: bad precision");
  mpfr_init2(val_, prec);
  mpfr_set_zero(val_, 1);
  mpfr_init2(rad_, kRadiusPrecision);
  mpfr_set_zero(rad_, 1);
}

Real::Real(const Real& o) {
  mpfr_init2(val_, mpfr_get_prec(o.val_));
  mpfr_set(val_, o.val_, MPFR_RNDN);
  mpfr_init2(rad_, kRadiusPrecision);
  mpfr_set(rad_, o.rad_, MPFR_RNDU);
}

Real::Real(Real&& o) noexcept {
  mpfr_init2(val_, mpfr_get_prec(o.val_));
  mpfr_init2(rad_, kRadiusPrecision);
  mpfr_swap(val_, o.val_);
  mpfr_swap(rad_, o.rad_);
}

Real& Real::operator=(const Real& o) {
  if (this != &o) {
    mpfr_set_prec(val_, mpfr_get_prec(o.val_));
    mpfr_set(val_, o.val_, MPFR_RNDN);
    mpfr_set(rad_, o.rad_, MPFR_RNDU);
  }
  return *this;
}

Real& Real::operator=(Real&& o) noexcept {
  mpfr_swap(val_, o.val_);
  mpfr_swap(rad_, o.rad_);
  return *this;
}

Real::~Real() {
  mpfr_clear(val_);
  mpfr_clear(rad_);
}

void Real::bump_radius_ulp(int ternary) {
  if (ternary != 0) add_ulp(rad_, val_, mpfr_get_prec(val_));
}

Real Real::of_long(long v, long prec) {
  Real r(prec);
  int t = mpfr_set_si(r.val_, v, MPFR_RNDN);
  r.bump_radius_ulp(t);
  return r;
}

Real Real::of_double(double v, long prec) {
  Real r(prec);
  int t = mpfr_set_d(r.val_, v, MPFR_RNDN);
  r.bump_radius_ulp(t);
  return r;
}

Real Real::of_mpz(const mpz_class& v, long prec) {
  Real r(prec);
  int t = mpfr_set_z(r.val_, v.get_mpz_t(), MPFR_RNDN);
  r.bump_radius_ulp(t);
  return r;
}

Real Real::of_mpq(const mpq_class& v, long prec) {
  Real r(prec);
  int t = mpfr_set_q(r.val_, v.get_mpq_t(), MPFR_RNDN);
  r.bump_radius_ulp(t);
  return r;
}

Real Real::of_decimal(const std::string& s, long prec) {
  Real r(prec);
  int t = mpfr_set_str(r.val_, s.c_str(), 10, MPFR_RNDN);
  if (t == -1) throw std::invalid_argument("Real::of_decimal: cannot parse '" + s + "'");
  // mpfr_set_str does not report inexactness; assume one ulp.
  add_ulp(r.rad_, r.val_, prec);
  return r;
}

Real Real::pi(long prec) {
  Real r(prec);
  int t = mpfr_const_pi(r.val_, MPFR_RNDN);
  r.bump_radius_ulp(t);
  return r;
}

Real Real::ball(double v, double rad, long prec) {
  if (rad < 0) throw std::invalid_argument("Real::ball: negative radius");
  Real r(prec);
  mpfr_set_d(r.val_, v, MPFR_RNDN);
  mpfr_set_d(r.rad_, rad, MPFR_RNDU);
  return r;
}

double Real::radius_double() const { return mpfr_get_d(rad_, MPFR_RNDU); }

double Real::lower_double() const {
  Tmp t(64);
  mpfr_sub(t, val_, rad_, MPFR_RNDD);
  return mpfr_get_d(t, MPFR_RNDD);
}

double Real::upper_double() const {
  Tmp t(64);
  mpfr_add(t, val_, rad_, MPFR_RNDU);
  return mpfr_get_d(t, MPFR_RNDU);
}

Real Real::operator-() const {
  Real r(*this);
  mpfr_neg(r.val_, r.val_, MPFR_RNDN);
  return r;
}

Real Real::operator+(const Real& o) const {
  Real r(std::max(precision(), o.precision()));
  int t = mpfr_add(r.val_, val_, o.val_, MPFR_RNDN);
  mpfr_add(r.rad_, rad_, o.rad_, MPFR_RNDU);
  r.bump_radius_ulp(t);
  return r;
}

Real Real::operator-(const Real& o) const {
  Real r(std::max(precision(), o.precision()));
  int t = mpfr_sub(r.val_, val_, o.val_, MPFR_RNDN);
  mpfr_add(r.rad_, rad_, o.rad_, MPFR_RNDU);
  r.bump_radius_ulp(t);
  return r;
}

Real Real::operator*(const Real& o) const {
  Real r(std::max(precision(), o.precision()));
  int t = mpfr_mul(r.val_, val_, o.val_, MPFR_RNDN);
  // |a|*rb + |b|*ra + ra*rb
  Tmp va, vb, acc;
  mpfr_abs(va, val_, MPFR_RNDU);
  mpfr_abs(vb, o.val_, MPFR_RNDU);
  mpfr_mul(acc, va, o.rad_, MPFR_RNDU);
  mpfr_add(r.rad_, r.rad_, acc, MPFR_RNDU);
  mpfr_mul(acc, vb, rad_, MPFR_RNDU);
  mpfr_add(r.rad_, r.rad_, acc, MPFR_RNDU);
  mpfr_mul(acc, rad_, o.rad_, MPFR_RNDU);
  mpfr_add(r.rad_, r.rad_, acc, MPFR_RNDU);
  r.bump_radius_ulp(t);
  return r;
}

Real Real::operator/(const Real& o) const {
  if (o.contains_zero()) throw std::domain_error("Real: division by ball containing zero");
  Real r(std::max(precision(), o.precision()));
  int t = mpfr_div(r.val_, val_, o.val_, MPFR_RNDN);
  // (ra + rb*|a/b|) / (|b| - rb), numerator up, denominator down
  Tmp q, num, den;
  mpfr_abs(q, r.val_, MPFR_RNDU);
  add_ulp(q, r.val_, mpfr_get_prec(r.val_));  // |a/b| <= |computed| + ulp
  mpfr_mul(num, q, o.rad_, MPFR_RNDU);
  mpfr_add(num, num, rad_, MPFR_RNDU);
  mpfr_abs(den, o.val_, MPFR_RNDD);
  mpfr_sub(den, den, o.rad_, MPFR_RNDD);
  mpfr_div(q, num, den, MPFR_RNDU);
  mpfr_add(r.rad_, r.rad_, q, MPFR_RNDU);
  r.bump_radius_ulp(t);
  return r;
}

Real Real::abs() const {
  Tmp lo(precision()), hi(precision());
  mpfr_sub(lo, val_, rad_, MPFR_RNDD);
  mpfr_add(hi, val_, rad_, MPFR_RNDU);
  if (mpfr_sgn(lo.t) >= 0) {
    return *this;
  }
  if (mpfr_sgn(hi.t) <= 0) {
    return -*this;
  }
  // Straddles zero: |x| ranges over [0, max(-lo, hi)].
  mpfr_neg(lo, lo, MPFR_RNDU);
  if (mpfr_cmp(lo, hi) > 0) mpfr_set(hi, lo, MPFR_RNDU);
  Real r(precision());
  mpfr_div_2ui(r.val_, hi, 1, MPFR_RNDU);
  mpfr_set(r.rad_, r.val_, MPFR_RNDU);
  return r;
}

Real Real::sqrt() const {
  Tmp lo(precision());
  mpfr_sub(lo, val_, rad_, MPFR_RNDD);
  if (mpfr_sgn(lo.t) < 0) throw std::domain_error("Real::sqrt: argument may be negative");
  Real r(precision());
  int t = mpfr_sqrt(r.val_, val_, MPFR_RNDN);
  Tmp den, d;
  mpfr_sqrt(den, lo, MPFR_RNDD);
  mpfr_mul_2ui(den, den, 1, MPFR_RNDD);
  if (mpfr_zero_p(den.t)) {
    // Interval touches zero: fall back to the hull bound sqrt(hi).
    Tmp hi(precision());
    mpfr_add(hi, val_, rad_, MPFR_RNDU);
    mpfr_sqrt(d, hi, MPFR_RNDU);
    mpfr_add(r.rad_, r.rad_, d, MPFR_RNDU);
  } else {
    mpfr_div(d, rad_, den, MPFR_RNDU);
    mpfr_add(r.rad_, r.rad_, d, MPFR_RNDU);
  }
  r.bump_radius_ulp(t);
  return r;
}

Real Real::root_n(unsigned long n) const {
  if (n == 0) throw std::invalid_argument("Real::root_n: n must be positive");
  if (n == 1) return *this;
  Tmp lo(precision()), hi(precision());
  mpfr_sub(lo, val_, rad_, MPFR_RNDD);
  mpfr_add(hi, val_, rad_, MPFR_RNDU);
  if (n % 2 == 0 && mpfr_sgn(lo.t) < 0)
    throw std::domain_error("Real::root_n: argument may be negative");
  // rootn is monotone, so the image of the ball is [rootn(lo), rootn(hi)].
  Tmp rlo(precision()), rhi(precision());
  mpfr_rootn_ui(rlo, lo, n, MPFR_RNDD);
  mpfr_rootn_ui(rhi, hi, n, MPFR_RNDU);
  Real r(precision());
  int t = mpfr_add(r.val_, rlo, rhi, MPFR_RNDN);
  mpfr_div_2ui(r.val_, r.val_, 1, MPFR_RNDN);  // exact
  Tmp w;
  mpfr_sub(w, rhi, rlo, MPFR_RNDU);
  mpfr_div_2ui(w, w, 1, MPFR_RNDU);
  mpfr_add(r.rad_, r.rad_, w, MPFR_RNDU);
  r.bump_radius_ulp(t);
  return r;
}

Real Real::exp() const {
  Real r(precision());
  int t = mpfr_exp(r.val_, val_, MPFR_RNDN);
  // |e^x - e^v| <= r * e^(v+r)
  Tmp m(64), e;
  mpfr_add(m, val_, rad_, MPFR_RNDU);
  mpfr_exp(e, m, MPFR_RNDU);
  mpfr_mul(e, e, rad_, MPFR_RNDU);
  mpfr_add(r.rad_, r.rad_, e, MPFR_RNDU);
  r.bump_radius_ulp(t);
  return r;
}

Real Real::log() const {
  Tmp lo(precision());
  mpfr_sub(lo, val_, rad_, MPFR_RNDD);
  if (mpfr_sgn(lo.t) <= 0) throw std::domain_error("Real::log: argument may be <= 0");
  Real r(precision());
  int t = mpfr_log(r.val_, val_, MPFR_RNDN);
  Tmp d;
  mpfr_div(d, rad_, lo, MPFR_RNDU);
  mpfr_add(r.rad_, r.rad_, d, MPFR_RNDU);
  r.bump_radius_ulp(t);
  return r;
}

Real Real::pow_si(long n) const {
  if (n == 0) return of_long(1, precision());
  if (n < 0) return of_long(1, precision()) / pow_si(-n);
  Real acc = of_long(1, precision());
  Real base = *this;
  unsigned long e = static_cast<unsigned long>(n);
  while (e > 0) {
    if (e & 1) acc = acc * base;
    e >>= 1;
    if (e > 0) base = base * base;
  }
  return acc;
}

Real Real::mul_2si(long k) const {
  Real r(*this);
  mpfr_mul_2si(r.val_, r.val_, k, MPFR_RNDN);
  mpfr_mul_2si(r.rad_, r.rad_, k, MPFR_RNDU);
  return r;
}

Real Real::min(const Real& o) const {
  long p = std::max(precision(), o.precision());
  Tmp alo(p), ahi(p), blo(p), bhi(p);
  mpfr_sub(alo, val_, rad_, MPFR_RNDD);
  mpfr_add(ahi, val_, rad_, MPFR_RNDU);
  mpfr_sub(blo, o.val_, o.rad_, MPFR_RNDD);
  mpfr_add(bhi, o.val_, o.rad_, MPFR_RNDU);
  if (mpfr_cmp(blo, alo) < 0) mpfr_set(alo, blo, MPFR_RNDD);
  if (mpfr_cmp(bhi, ahi) < 0) mpfr_set(ahi, bhi, MPFR_RNDU);
  Real r(p);
  int t = mpfr_add(r.val_, alo, ahi, MPFR_RNDN);
  mpfr_div_2ui(r.val_, r.val_, 1, MPFR_RNDN);
  Tmp w(p);
  mpfr_sub(w, ahi, alo, MPFR_RNDU);
  mpfr_div_2ui(w, w, 1, MPFR_RNDU);
  mpfr_set(r.rad_, w, MPFR_RNDU);
  r.bump_radius_ulp(t ? t : 1);
  return r;
}

Real Real::max(const Real& o) const { return -((-*this).min(-o)); }

Real Real::widened(const Real& extra) const {
  Real r(*this);
  Tmp e;
  mpfr_abs(e, extra.val_, MPFR_RNDU);
  mpfr_add(e, e, extra.rad_, MPFR_RNDU);
  mpfr_add(r.rad_, r.rad_, e, MPFR_RNDU);
  return r;
}

Real Real::hull(const Real& a, const Real& b) {
  long p = std::max(a.precision(), b.precision());
  Tmp lo(p), hi(p), t(p);
  mpfr_sub(lo, a.val_, a.rad_, MPFR_RNDD);
  mpfr_sub(t, b.val_, b.rad_, MPFR_RNDD);
  if (mpfr_cmp(t, lo) < 0) mpfr_set(lo, t, MPFR_RNDD);
  mpfr_add(hi, a.val_, a.rad_, MPFR_RNDU);
  mpfr_add(t, b.val_, b.rad_, MPFR_RNDU);
  if (mpfr_cmp(t, hi) > 0) mpfr_set(hi, t, MPFR_RNDU);
  Real r(p);
  mpfr_add(r.val_, lo, hi, MPFR_RNDN);
  mpfr_div_2ui(r.val_, r.val_, 1, MPFR_RNDN);
  Tmp w(p);
  mpfr_sub(w, hi, lo, MPFR_RNDU);
  mpfr_div_2ui(w, w, 1, MPFR_RNDU);
  mpfr_set(r.rad_, w, MPFR_RNDU);
  add_ulp(r.rad_, r.val_, p);
  return r;
}

Real Real::midpoint_exact() const {
  Real r(*this);
  mpfr_set_zero(r.rad_, 1);
  return r;
}

bool Real::contains_zero() const {
  Tmp a;
  mpfr_abs(a, val_, MPFR_RNDD);
  return mpfr_cmp(a, rad_) <= 0;
}

bool Real::definitely_positive() const {
  Tmp lo(precision());
  mpfr_sub(lo, val_, rad_, MPFR_RNDD);
  return mpfr_sgn(lo.t) > 0;
}

bool Real::definitely_negative() const {
  Tmp hi(precision());
  mpfr_add(hi, val_, rad_, MPFR_RNDU);
  return mpfr_sgn(hi.t) < 0;
}

Order Real::compare(const Real& a, const Real& b) {
  long p = std::max(a.precision(), b.precision()) + 8;
  Tmp ahi(p), blo(p), alo(p), bhi(p);
  mpfr_add(ahi, a.val_, a.rad_, MPFR_RNDU);
  mpfr_sub(blo, b.val_, b.rad_, MPFR_RNDD);
  if (mpfr_cmp(ahi, blo) < 0) return Order::Less;
  mpfr_sub(alo, a.val_, a.rad_, MPFR_RNDD);
  mpfr_add(bhi, b.val_, b.rad_, MPFR_RNDU);
  if (mpfr_cmp(alo, bhi) > 0) return Order::Greater;
  return Order::Undecided;
}

bool Real::definitely_equal(const Real& a, const Real& b) {
  return a.is_exact() && b.is_exact() && mpfr_cmp(a.val_, b.val_) == 0;
}

std::pair<mpz_class, bool> Real::nearest_int() const {
  mpz_class n;
  mpfr_get_z(n.get_mpz_t(), val_, MPFR_RNDN);
  // Ambiguous iff the ball touches a half-integer boundary.
  Tmp d(precision());
  mpfr_sub_z(d, val_, n.get_mpz_t(), MPFR_RNDN);
  mpfr_abs(d, d, MPFR_RNDU);
  mpfr_add(d, d, rad_, MPFR_RNDU);
  bool ambiguous = mpfr_cmp_d(d, 0.5) >= 0;
  return {n, ambiguous};
}

std::pair<mpz_class, bool> Real::floor_int() const {
  Tmp lo(precision()), hi(precision());
  mpfr_sub(lo, val_, rad_, MPFR_RNDD);
  mpfr_add(hi, val_, rad_, MPFR_RNDU);
  mpz_class flo, fhi;
  mpfr_get_z(flo.get_mpz_t(), lo, MPFR_RNDD);
  mpfr_get_z(fhi.get_mpz_t(), hi, MPFR_RNDD);
  return {flo, flo != fhi};
}

Real Real::dist_to_nearest_int(bool* ambiguous) const {
  long p = precision();
  Tmp lo(p), hi(p);
  mpfr_sub(lo, val_, rad_, MPFR_RNDD);
  mpfr_add(hi, val_, rad_, MPFR_RNDU);

  // Directed endpoint distance: |x - round(x)| rounded toward zero (lower
  // bound) or away from zero (upper bound).
  auto point_dist = [p](mpfr_srcptr x, mpfr_ptr out, bool toward_zero) {
    mpz_class n;
    mpfr_get_z(n.get_mpz_t(), x, MPFR_RNDN);
    mpfr_sub_z(out, x, n.get_mpz_t(), toward_zero ? MPFR_RNDZ : MPFR_RNDA);
    mpfr_abs(out, out, MPFR_RNDN);  // exact
    (void)p;
  };

  mpz_class k;
  mpfr_get_z(k.get_mpz_t(), lo, MPFR_RNDU);  // ceil(lo)
  Tmp kz(p);
  mpfr_set_z(kz, k.get_mpz_t(), MPFR_RNDN);
  bool has_integer = mpfr_cmp(kz, hi) <= 0;

  // Half-integer inside iff ceil(lo - 1/2) <= hi - 1/2.
  Tmp lo2(p), hi2(p);
  mpfr_sub_d(lo2, lo, 0.5, MPFR_RNDD);
  mpfr_sub_d(hi2, hi, 0.5, MPFR_RNDU);
  mpz_class h;
  mpfr_get_z(h.get_mpz_t(), lo2, MPFR_RNDU);
  mpfr_set_z(kz, h.get_mpz_t(), MPFR_RNDN);
  bool has_half = mpfr_cmp(kz, hi2) <= 0;

  if (ambiguous) *ambiguous = has_half;

  // Range endpoints of the distance over the input interval: extremes occur
  // at the interval endpoints or at an interior integer / half-integer.
  Tmp lo_c(p), hi_c(p), t1(p), t2(p);
  if (has_integer) {
    mpfr_set_zero(lo_c, 1);
  } else {
    point_dist(lo, t1, true);
    point_dist(hi, t2, true);
    mpfr_min(lo_c, t1, t2, MPFR_RNDD);
  }
  if (has_half) {
    mpfr_set_d(hi_c, 0.5, MPFR_RNDN);
  } else {
    point_dist(lo, t1, false);
    point_dist(hi, t2, false);
    mpfr_max(hi_c, t1, t2, MPFR_RNDU);
    mpfr_set_d(t1, 0.5, MPFR_RNDN);
    if (mpfr_cmp(hi_c, t1) > 0) mpfr_set(hi_c, t1, MPFR_RNDN);
  }
  if (mpfr_sgn(lo_c.t) < 0) mpfr_set_zero(lo_c, 1);

  // Build the result so that it stays a sub-ball of [0, 1/2] exactly.  A
  // plain midpoint/radius hull cannot do that in general (the radius has a
  // short mantissa), so anchor the construction on whichever boundary the
  // interval touches.
  Real r(p);
  Tmp rr;  // radius workspace at radius precision
  mpfr_set_d(t1, 0.5, MPFR_RNDN);
  mpfr_sub(t2, t1, hi_c, MPFR_RNDD);        // margin to the top boundary
  bool top = mpfr_cmp_ui_2exp(t2, 1, -28) < 0;
  bool bottom = mpfr_cmp_ui_2exp(lo_c, 1, -28) <= 0;
  if (top && bottom) {
    mpfr_set_ui_2exp(r.val_, 1, -2, MPFR_RNDN);  // exactly [0, 1/2]
    mpfr_set_ui_2exp(r.rad_, 1, -2, MPFR_RNDN);
  } else if (top) {
    // hi anchored at exactly 1/2: radius covers down to lo_c.
    mpfr_sub(t2, t1, lo_c, MPFR_RNDU);
    mpfr_div_2ui(t2, t2, 1, MPFR_RNDU);
    mpfr_set(rr, t2, MPFR_RNDU);
    // keep 1/2 - rr exactly representable at precision p
    Tmp rmin;
    mpfr_set_ui_2exp(rmin, 1, -std::max(6L, p - 34), MPFR_RNDN);
    if (mpfr_cmp(rr, rmin) < 0) mpfr_set(rr, rmin, MPFR_RNDN);
    int inexact = mpfr_sub(r.val_, t1, rr, MPFR_RNDD);
    if (inexact != 0) {
      mpfr_set_ui_2exp(r.val_, 1, -2, MPFR_RNDN);
      mpfr_set_ui_2exp(r.rad_, 1, -2, MPFR_RNDN);
      return r;
    }
    mpfr_set(r.rad_, rr, MPFR_RNDN);
  } else if (bottom) {
    // lo anchored at exactly 0: ball is [0, 2r] with 2r >= hi_c.
    mpfr_div_2ui(t2, hi_c, 1, MPFR_RNDU);
    mpfr_set(rr, t2, MPFR_RNDU);
    mpfr_set(r.val_, rr, MPFR_RNDN);  // 32-bit mantissa, exact at p
    mpfr_set(r.rad_, rr, MPFR_RNDN);
  } else {
    // interior: margins >= 2^-28 on both sides absorb the quantization
    mpfr_add(r.val_, lo_c, hi_c, MPFR_RNDN);
    mpfr_div_2ui(r.val_, r.val_, 1, MPFR_RNDN);
    mpfr_sub(t2, hi_c, lo_c, MPFR_RNDU);
    mpfr_div_2ui(t2, t2, 1, MPFR_RNDU);
    mpfr_set(r.rad_, t2, MPFR_RNDU);
    r.bump_radius_ulp(1);
  }
  return r;
}

Real Real::at_precision(long prec) const {
  Real r(prec);
  int t = mpfr_set(r.val_, val_, MPFR_RNDN);
  mpfr_set(r.rad_, rad_, MPFR_RNDU);
  r.bump_radius_ulp(t);
  return r;
}

std::string Real::str(int digits) const {
  char buf[4096];
  mpfr_snprintf(buf, sizeof buf, "%.*Re", digits, val_);
  return std::string(buf);
}

std::string Real::debug_str() const {
  char buf[4096];
  mpfr_snprintf(buf, sizeof buf, "%.8Re +/- %.3Re", val_, rad_);
  return std::string(buf);
}

Real operator+(long a, const Real& b) { return Real::of_long(a, b.precision()) + b; }
Real operator-(long a, const Real& b) { return Real::of_long(a, b.precision()) - b; }
Real operator*(long a, const Real& b) { return Real::of_long(a, b.precision()) * b; }

Real iterated_log(int s, const Real& x) {
  if (s < 1) throw std::invalid_argument("iterated_log: s must be >= 1");
  Real one = Real::of_long(1, x.precision());
  // Clamping the argument to [1, inf) first makes the function total and
  // matches the convention that every iterate equals 1 on (-inf, e].
  Real y = x.max(one);
  for (int i = 0; i < s; ++i) {
    y = y.log().max(one);
  }
  return y;
}

mpq_class parse_rational(const std::string& s) {
  auto fail = [&]() -> mpq_class {
    throw std::invalid_argument("parse_rational: cannot parse '" + s + "'");
  };
  if (s.empty()) fail();
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    mpz_class num, den;
    if (mpz_set_str(num.get_mpz_t(), s.substr(0, slash).c_str(), 10) != 0) fail();
    if (mpz_set_str(den.get_mpz_t(), s.substr(slash + 1).c_str(), 10) != 0) fail();
    if (den == 0) fail();
    mpq_class q(num, den);
    q.canonicalize();
    return q;
  }
  // Decimal with optional exponent: [+-]ddd[.ddd][e[+-]ddd]
  size_t i = 0;
  bool neg = false;
  if (s[i] == '+' || s[i] == '-') neg = (s[i++] == '-');
  std::string digits;
  long frac_places = 0;
  long expo = 0;
  bool seen_dot = false, seen_digit = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits += c;
      seen_digit = true;
      if (seen_dot) ++frac_places;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else if ((c == 'e' || c == 'E') && seen_digit) {
      try {
        expo = std::stol(s.substr(i + 1));
      } catch (...) {
        fail();
      }
      break;
    } else {
      fail();
    }
  }
  if (!seen_digit) fail();
  mpz_class num;
  mpz_set_str(num.get_mpz_t(), digits.c_str(), 10);
  if (neg) num = -num;
  long net = expo - frac_places;
  mpz_class p10;
  mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(net < 0 ? -net : net));
  mpq_class q = net < 0 ? mpq_class(num, p10) : mpq_class(num * p10);
  q.canonicalize();
  return q;
}

Real parse_real(const std::string& s, long prec) {
  return Real::of_mpq(parse_rational(s), prec);
}

}  // namespace gridwit
