#pragma once

#include <mpfr.h>
#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace gridwit {

inline constexpr long kDefaultPrecision = 256;
inline constexpr long kMaxPrecision = 4096;
// Radius is kept at low precision and always rounded up, so every Real is a
// closed ball [value - radius, value + radius] guaranteed to contain the
// exact quantity it stands for.
inline constexpr long kRadiusPrecision = 32;

enum class Order { Less, Greater, Undecided };

class Real {
 public:
  Real() : Real(kDefaultPrecision) {}
  explicit Real(long prec);
  Real(const Real& o);
  Real(Real&& o) noexcept;
  Real& operator=(const Real& o);
  Real& operator=(Real&& o) noexcept;
  ~Real();

  static Real of_long(long v, long prec = kDefaultPrecision);
  static Real of_double(double v, long prec = kDefaultPrecision);
  static Real of_mpz(const mpz_class& v, long prec = kDefaultPrecision);
  static Real of_mpq(const mpq_class& v, long prec = kDefaultPrecision);
  // Decimal string; the rounding error is absorbed into the radius.
  static Real of_decimal(const std::string& s, long prec = kDefaultPrecision);
  static Real pi(long prec = kDefaultPrecision);
  // Ball centered at v with explicit radius (both doubles).
  static Real ball(double v, double rad, long prec = kDefaultPrecision);

  long precision() const { return mpfr_get_prec(val_); }
  bool is_exact() const { return mpfr_zero_p(rad_); }
  double midpoint_double() const { return mpfr_get_d(val_, MPFR_RNDN); }
  double radius_double() const;  // rounded up
  // Certified bounds: lower() <= exact value <= upper().
  double lower_double() const;
  double upper_double() const;

  Real operator-() const;
  Real operator+(const Real& o) const;
  Real operator-(const Real& o) const;
  Real operator*(const Real& o) const;
  Real operator/(const Real& o) const;  // throws if divisor may contain 0
  Real& operator+=(const Real& o) { *this = *this + o; return *this; }
  Real& operator-=(const Real& o) { *this = *this - o; return *this; }
  Real& operator*=(const Real& o) { *this = *this * o; return *this; }
  Real& operator/=(const Real& o) { *this = *this / o; return *this; }

  Real abs() const;
  Real sqrt() const;           // throws if argument may be negative
  // n-th root; even n requires a definitely nonnegative argument.
  Real root_n(unsigned long n) const;
  Real exp() const;
  Real log() const;            // throws if argument may be <= 0
  Real pow_si(long n) const;   // binary powering on balls
  Real mul_2si(long k) const;  // exact scaling by 2^k
  Real min(const Real& o) const;
  Real max(const Real& o) const;

  // Widens the radius by `extra` (used when folding an external error bound).
  Real widened(const Real& extra) const;
  // Hull of two balls: smallest ball containing both.
  static Real hull(const Real& a, const Real& b);
  // Returns a copy with the exact same midpoint and zero radius.
  Real midpoint_exact() const;

  bool contains_zero() const;
  bool definitely_positive() const;
  bool definitely_negative() const;
  bool is_zero_exact() const { return mpfr_zero_p(val_) && is_exact(); }

  static Order compare(const Real& a, const Real& b);
  // True only when both are exact and represent the same value.
  static bool definitely_equal(const Real& a, const Real& b);
  bool definitely_less(const Real& o) const { return compare(*this, o) == Order::Less; }
  bool definitely_greater(const Real& o) const { return compare(*this, o) == Order::Greater; }
  bool overlaps(const Real& o) const { return compare(*this, o) == Order::Undecided; }

  // Nearest integer to the midpoint.  Ambiguity (ball straddling a half-way
  // point) is reported by the bool.
  std::pair<mpz_class, bool> nearest_int() const;
  // Largest integer n with n <= every point of the ball false positives
  // avoided by flagging straddles.
  std::pair<mpz_class, bool> floor_int() const;

  // Distance to the nearest integer, always a sub-ball of [0, 1/2].  When the
  // ball straddles a half-integer the interval hull of attained values is
  // returned (flag set via *ambiguous if given).
  Real dist_to_nearest_int(bool* ambiguous = nullptr) const;

  // Returns a copy rounded to `prec` bits (radius grows by the rounding).
  Real at_precision(long prec) const;

  // Deterministic decimal rendering of the midpoint, scientific form.
  std::string str(int digits = 20) const;
  std::string debug_str() const;  // midpoint and radius

  mpfr_srcptr raw_value() const { return val_; }
  mpfr_srcptr raw_radius() const { return rad_; }

 private:
  void bump_radius_ulp(int ternary);  // folds a rounding step into the radius
  mpfr_t val_;
  mpfr_t rad_;
};

Real operator+(long a, const Real& b);
Real operator-(long a, const Real& b);
Real operator*(long a, const Real& b);

// max(1, log x) iterated s times; equals 1 for x <= e.
Real iterated_log(int s, const Real& x);

// Parses "p/q" or a decimal literal into an exact rational.
mpq_class parse_rational(const std::string& s);
// Parses "p/q", decimal, or plain integer into a Real at `prec`.
Real parse_real(const std::string& s, long prec = kDefaultPrecision);

// Runs f(prec) at doubling precision starting from `start` until it returns
// an engaged optional; nullopt once kMaxPrecision is exhausted.  The standard
// answer to an undecided comparison: recompute the quantity sharper.
template <typename F>
auto with_precision_escalation(long start, F&& f) -> decltype(f(start)) {
  for (long p = start; p <= kMaxPrecision; p *= 2) {
    if (auto r = f(p)) return r;
  }
  return {};
}

}  // namespace gridwit
