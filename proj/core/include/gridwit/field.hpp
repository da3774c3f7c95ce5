#pragma once

#include <vector>

#include "gridwit/algebraic.hpp"
#include "gridwit/linalg.hpp"

namespace gridwit {

// Element of Q[x]/(minpoly) as exact rational coordinates in the power basis
// 1, theta, ..., theta^(d-1).
using FieldElem = QVec;

// Discriminant of a monic integer polynomial, exact (Sylvester resultant).
mpz_class poly_discriminant(const QPoly& monic);

// Totally real number field Q[x]/(f) with the order Z[theta]; embeddings are
// the ascending real roots of f.
class TotallyRealField {
 public:
  // Coefficients ascending, monic (leading 1), integer, degree >= 2.  Throws
  // when the polynomial is not monic/squarefree, has a rational root, or is
  // not totally real.
  explicit TotallyRealField(std::vector<mpz_class> coeffs);

  int degree() const { return degree_; }
  const QPoly& minpoly() const { return poly_; }
  const std::vector<AlgebraicNumber>& embeddings() const { return roots_; }
  const mpz_class& discriminant() const { return disc_; }

  FieldElem zero() const { return FieldElem(degree_, mpq_class(0)); }
  FieldElem one() const;
  FieldElem generator() const;  // theta

  FieldElem add(const FieldElem& a, const FieldElem& b) const;
  FieldElem sub(const FieldElem& a, const FieldElem& b) const;
  FieldElem mul(const FieldElem& a, const FieldElem& b) const;
  FieldElem scale(const FieldElem& a, const mpq_class& c) const;
  FieldElem inverse(const FieldElem& a) const;  // throws on zero
  FieldElem power(const FieldElem& a, long n) const;

  // Matrix of multiplication by a in the power basis (columns = a * theta^j).
  QMat mult_matrix(const FieldElem& a) const;
  mpq_class norm(const FieldElem& a) const;
  mpq_class trace(const FieldElem& a) const;
  bool is_integral(const FieldElem& a) const;  // all coordinates integers
  bool is_zero(const FieldElem& a) const;

  // Ball image under the i-th embedding (0-based, ascending roots).
  Real embed(const FieldElem& a, int i, long prec = kDefaultPrecision) const;
  RVec embed_all(const FieldElem& a, long prec = kDefaultPrecision) const;
  // Exact sign of sigma_i(a); escalates precision (a nonzero element never
  // embeds to zero, so this terminates).  Zero input returns 0.
  int embedding_sign(const FieldElem& a, int i) const;

 private:
  int degree_;
  QPoly poly_;
  std::vector<AlgebraicNumber> roots_;
  mpz_class disc_;
};

}  // namespace gridwit
