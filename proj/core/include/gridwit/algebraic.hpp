#pragma once

#include "gridwit/rat_poly.hpp"
#include "gridwit/real.hpp"

namespace gridwit {

// A real algebraic number: a squarefree minimal-candidate polynomial plus an
// exact isolating interval.  The embedding index is the position among the
// ascending real roots of the same polynomial.
class AlgebraicNumber {
 public:
  AlgebraicNumber(QPoly poly, int embedding_index, RootInterval iv);

  // All real roots of a squarefree polynomial, ascending.
  static std::vector<AlgebraicNumber> real_roots(const QPoly& poly);

  const QPoly& poly() const { return poly_; }
  int embedding_index() const { return index_; }
  const RootInterval& interval() const { return iv_; }

  // Ball containing the exact root with radius <= 2^(1-prec); the midpoint is
  // carried at prec + 8 bits.  Pure: repeated calls refine a local copy.
  Real approx(long prec) const;
  // Construction-time approximation at the default precision.
  const Real& cached() const { return cached_; }

  int sign() const;
  // -1, 0, +1 comparing the root against an exact rational.
  int compare_rational(const mpq_class& q) const;

 private:
  QPoly poly_;
  int index_;
  RootInterval iv_;  // refined once at construction
  Real cached_;
};

}  // namespace gridwit
