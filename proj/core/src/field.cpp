#include "gridwit/field.hpp"

#include <stdexcept>

namespace gridwit {

namespace {

// Resultant of two polynomials as the Sylvester determinant.
mpq_class resultant(const QPoly& f, const QPoly& g) {
  int m = qpoly_degree(f), n = qpoly_degree(g);
  if (m < 0 || n < 0) return 0;
  int size = m + n;
  QMat s(size, QVec(size, mpq_class(0)));
  for (int r = 0; r < n; ++r)
    for (int k = 0; k <= m; ++k) s[r][r + k] = f[m - k];
  for (int r = 0; r < m; ++r)
    for (int k = 0; k <= n; ++k) s[n + r][r + k] = g[n - k];
  return qmat_det(s);
}

}  // namespace

mpz_class poly_discriminant(const QPoly& monic) {
  int d = qpoly_degree(monic);
  if (d < 1) throw std::invalid_argument("poly_discriminant: degree must be >= 1");
  if (monic[d] != 1) throw std::invalid_argument("poly_discriminant: polynomial must be monic");
  mpq_class res = resultant(monic, qpoly_derivative(monic));
  if ((d * (d - 1) / 2) % 2 == 1) res = -res;
  if (res.get_den() != 1) throw std::logic_error("poly_discriminant: non-integer result");
  return res.get_num();
}

TotallyRealField::TotallyRealField(std::vector<mpz_class> coeffs) {
  poly_.reserve(coeffs.size());
  for (const auto& c : coeffs) poly_.emplace_back(c);
  poly_ = qpoly_trim(std::move(poly_));
  degree_ = qpoly_degree(poly_);
  if (degree_ < 2) throw std::invalid_argument("TotallyRealField: degree must be >= 2");
  if (poly_[degree_] != 1) throw std::invalid_argument("TotallyRealField: polynomial must be monic");
  if (!qpoly_squarefree(poly_))
    throw std::invalid_argument("TotallyRealField: polynomial must be squarefree");
  roots_ = AlgebraicNumber::real_roots(poly_);
  if (static_cast<int>(roots_.size()) != degree_)
    throw std::invalid_argument("TotallyRealField: polynomial is not totally real");
  // A rational root means the polynomial is reducible (complete test for d=3).
  for (const auto& r : roots_)
    if (r.interval().is_point())
      throw std::invalid_argument("TotallyRealField: polynomial has a rational root");
  disc_ = poly_discriminant(poly_);
  if (disc_ == 0) throw std::invalid_argument("TotallyRealField: zero discriminant");
}

FieldElem TotallyRealField::one() const {
  FieldElem e = zero();
  e[0] = 1;
  return e;
}

FieldElem TotallyRealField::generator() const {
  FieldElem e = zero();
  e[1] = 1;
  return e;
}

FieldElem TotallyRealField::add(const FieldElem& a, const FieldElem& b) const {
  FieldElem r = zero();
  for (int i = 0; i < degree_; ++i) r[i] = a[i] + b[i];
  return r;
}

FieldElem TotallyRealField::sub(const FieldElem& a, const FieldElem& b) const {
  FieldElem r = zero();
  for (int i = 0; i < degree_; ++i) r[i] = a[i] - b[i];
  return r;
}

FieldElem TotallyRealField::mul(const FieldElem& a, const FieldElem& b) const {
  QPoly prod = qpoly_mul(QPoly(a.begin(), a.end()), QPoly(b.begin(), b.end()));
  QPoly rem = qpoly_rem(prod, poly_);
  FieldElem r = zero();
  for (size_t i = 0; i < rem.size(); ++i) r[i] = rem[i];
  return r;
}

FieldElem TotallyRealField::scale(const FieldElem& a, const mpq_class& c) const {
  FieldElem r = zero();
  for (int i = 0; i < degree_; ++i) r[i] = a[i] * c;
  return r;
}

FieldElem TotallyRealField::inverse(const FieldElem& a) const {
  if (is_zero(a)) throw std::invalid_argument("TotallyRealField::inverse: zero element");
  return qmat_solve(mult_matrix(a), one());
}

FieldElem TotallyRealField::power(const FieldElem& a, long n) const {
  FieldElem base = n < 0 ? inverse(a) : a;
  unsigned long e = n < 0 ? -static_cast<unsigned long>(n) : static_cast<unsigned long>(n);
  FieldElem acc = one();
  while (e) {
    if (e & 1) acc = mul(acc, base);
    base = mul(base, base);
    e >>= 1;
  }
  return acc;
}

QMat TotallyRealField::mult_matrix(const FieldElem& a) const {
  QMat m(degree_, QVec(degree_, mpq_class(0)));
  FieldElem col = a;
  for (int j = 0; j < degree_; ++j) {
    for (int i = 0; i < degree_; ++i) m[i][j] = col[i];
    if (j + 1 < degree_) col = mul(col, generator());
  }
  return m;
}

mpq_class TotallyRealField::norm(const FieldElem& a) const { return qmat_det(mult_matrix(a)); }

mpq_class TotallyRealField::trace(const FieldElem& a) const {
  QMat m = mult_matrix(a);
  mpq_class t = 0;
  for (int i = 0; i < degree_; ++i) t += m[i][i];
  return t;
}

bool TotallyRealField::is_integral(const FieldElem& a) const {
  for (const auto& c : a)
    if (c.get_den() != 1) return false;
  return true;
}

bool TotallyRealField::is_zero(const FieldElem& a) const {
  for (const auto& c : a)
    if (c != 0) return false;
  return true;
}

Real TotallyRealField::embed(const FieldElem& a, int i, long prec) const {
  Real x = roots_.at(i).approx(prec + 64);
  Real acc = Real::of_mpq(a[degree_ - 1], prec + 64);
  for (int k = degree_ - 2; k >= 0; --k) acc = acc * x + Real::of_mpq(a[k], prec + 64);
  return acc.at_precision(prec);
}

RVec TotallyRealField::embed_all(const FieldElem& a, long prec) const {
  RVec r;
  r.reserve(degree_);
  for (int i = 0; i < degree_; ++i) r.push_back(embed(a, i, prec));
  return r;
}

int TotallyRealField::embedding_sign(const FieldElem& a, int i) const {
  if (is_zero(a)) return 0;
  auto res = with_precision_escalation(kDefaultPrecision, [&](long p) -> std::optional<int> {
    Real v = embed(a, i, p);
    if (v.definitely_positive()) return +1;
    if (v.definitely_negative()) return -1;
    return std::nullopt;
  });
  if (!res) throw std::runtime_error("embedding_sign: could not resolve sign at max precision");
  return *res;
}

}  // namespace gridwit
