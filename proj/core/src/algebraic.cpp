#include "gridwit/algebraic.hpp"

namespace gridwit {

namespace {

mpq_class pow2_eps(long prec) {
  // 2^(1-prec) as an exact rational
  mpz_class d;
  mpz_ui_pow_ui(d.get_mpz_t(), 2, static_cast<unsigned long>(prec - 1));
  return mpq_class(1, d);
}

Real interval_to_real(const RootInterval& iv, long prec) {
  Real lo = Real::of_mpq(iv.lo, prec + 8);
  Real hi = Real::of_mpq(iv.hi, prec + 8);
  return Real::hull(lo, hi);
}

}  // namespace

AlgebraicNumber::AlgebraicNumber(QPoly poly, int embedding_index, RootInterval iv)
    : poly_(qpoly_trim(std::move(poly))),
      index_(embedding_index),
      iv_(refine_root(poly_, std::move(iv), pow2_eps(kDefaultPrecision + 2))),
      cached_(interval_to_real(iv_, kDefaultPrecision)) {}

std::vector<AlgebraicNumber> AlgebraicNumber::real_roots(const QPoly& poly) {
  std::vector<RootInterval> ivs = isolate_real_roots(poly);
  std::vector<AlgebraicNumber> out;
  out.reserve(ivs.size());
  for (size_t i = 0; i < ivs.size(); ++i)
    out.emplace_back(poly, static_cast<int>(i), ivs[i]);
  return out;
}

Real AlgebraicNumber::approx(long prec) const {
  if (prec < 2) throw std::invalid_argument("AlgebraicNumber::approx: bad precision");
  RootInterval iv = refine_root(poly_, iv_, pow2_eps(prec + 2));
  return interval_to_real(iv, prec);
}

int AlgebraicNumber::sign() const {
  if (iv_.is_point()) return sgn(iv_.lo);
  if (sgn(iv_.lo) == sgn(iv_.hi)) return sgn(iv_.lo);
  // Interval straddles zero; since the root is the unique root inside, its
  // sign is decided by whether zero is the root.
  if (qpoly_eval(poly_, 0) == 0) return 0;
  RootInterval iv = iv_;
  while (sgn(iv.lo) != sgn(iv.hi)) {
    mpq_class w = iv.hi - iv.lo;
    iv = refine_root(poly_, iv, w / 4);
    if (iv.is_point()) return sgn(iv.lo);
  }
  return sgn(iv.lo);
}

int AlgebraicNumber::compare_rational(const mpq_class& q) const {
  if (iv_.is_point()) return cmp(iv_.lo, q);
  // Sign-change intervals keep non-root endpoints, so boundary cases decide.
  if (q <= iv_.lo) return 1;
  if (q >= iv_.hi) return -1;
  // q strictly inside: decide by whether q is the isolated root.
  if (qpoly_eval(poly_, q) == 0) return 0;
  RootInterval iv = iv_;
  while (q > iv.lo && q < iv.hi) {
    mpq_class w = iv.hi - iv.lo;
    iv = refine_root(poly_, iv, w / 4);
    if (iv.is_point()) return cmp(iv.lo, q);
  }
  return q <= iv.lo ? 1 : -1;
}

}  // namespace gridwit
