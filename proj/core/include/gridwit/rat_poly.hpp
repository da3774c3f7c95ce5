#pragma once

#include <gmpxx.h>

#include <string>
#include <vector>

namespace gridwit {

// Polynomials over Q as coefficient vectors, lowest degree first.
using QPoly = std::vector<mpq_class>;

QPoly qpoly_parse(const std::string& csv);  // "c0,c1,...,cn"
std::string qpoly_format(const QPoly& p);
QPoly qpoly_trim(QPoly p);
int qpoly_degree(const QPoly& p);  // -1 for the zero polynomial
mpq_class qpoly_eval(const QPoly& p, const mpq_class& x);
QPoly qpoly_derivative(const QPoly& p);
QPoly qpoly_add(const QPoly& a, const QPoly& b);
QPoly qpoly_sub(const QPoly& a, const QPoly& b);
QPoly qpoly_mul(const QPoly& a, const QPoly& b);
QPoly qpoly_scale(const QPoly& a, const mpq_class& c);
// Euclidean remainder; b must be nonzero.
QPoly qpoly_rem(const QPoly& a, const QPoly& b);
// Monic gcd.
QPoly qpoly_gcd(QPoly a, QPoly b);
bool qpoly_squarefree(const QPoly& p);
// 1 + max |c_i / c_n|: every real root lies in (-bound, bound).
mpq_class cauchy_root_bound(const QPoly& p);

// Sturm chain of a squarefree polynomial; counts distinct real roots.
struct SturmChain {
  std::vector<QPoly> seq;
  int variations_at(const mpq_class& x) const;
  // Number of roots in (lo, hi); endpoints must not be roots.
  int count_roots(const mpq_class& lo, const mpq_class& hi) const;
};
SturmChain sturm_chain(const QPoly& p);

// Exact isolating interval: either lo == hi (rational root) or
// f(lo) f(hi) < 0 with exactly one root inside.
struct RootInterval {
  mpq_class lo, hi;
  bool is_point() const { return lo == hi; }
};

// All real roots of a squarefree polynomial, ascending.  Throws if p is not
// squarefree or is constant.
std::vector<RootInterval> isolate_real_roots(const QPoly& p);

// Bisect until hi - lo <= eps.
RootInterval refine_root(const QPoly& p, RootInterval r, const mpq_class& eps);

}  // namespace gridwit
