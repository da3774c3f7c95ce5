#pragma once

#include <functional>

#include "gridwit/real.hpp"

namespace gridwit {

using RVec = std::vector<Real>;
using RMat = std::vector<std::vector<Real>>;  // row-major
using ZVec = std::vector<mpz_class>;
using ZMat = std::vector<std::vector<mpz_class>>;
using QVec = std::vector<mpq_class>;
using QMat = std::vector<std::vector<mpq_class>>;

RMat rmat_identity(int d, long prec = kDefaultPrecision);
RMat rmat_mul(const RMat& a, const RMat& b);
RVec rmat_vec(const RMat& a, const RVec& x);
RMat rmat_transpose(const RMat& a);
RMat rmat_sub(const RMat& a, const RMat& b);
RVec rvec_add(const RVec& a, const RVec& b);
RVec rvec_sub(const RVec& a, const RVec& b);
RVec rvec_scale(const RVec& a, const Real& c);
Real rvec_dot(const RVec& a, const RVec& b);
Real rvec_sup_norm(const RVec& a);     // max |a_i| as a ball
Real rmat_sup_norm(const RMat& a);     // max |entry|
Real rmat_dist_identity(const RMat& a);

Real rmat_det(const RMat& a);
// Gaussian elimination with midpoint pivoting; throws when a pivot ball
// contains zero (matrix numerically singular at this precision).
RVec rmat_solve(const RMat& a, const RVec& b);
RMat rmat_inverse(const RMat& a);

ZMat zmat_identity(int d);
ZMat zmat_mul(const ZMat& a, const ZMat& b);
ZVec zmat_vec(const ZMat& a, const ZVec& x);
mpz_class zmat_det(const ZMat& a);
// Requires det = +-1.
ZMat zmat_inverse_unimodular(const ZMat& a);
RMat zmat_to_rmat(const ZMat& a, long prec = kDefaultPrecision);

QMat qmat_identity(int d);
QMat qmat_mul(const QMat& a, const QMat& b);
QVec qmat_vec(const QMat& a, const QVec& x);
mpq_class qmat_det(const QMat& a);
QMat qmat_inverse(const QMat& a);
QVec qmat_solve(const QMat& a, const QVec& b);

// Row-style Hermite normal form of the lattice generated by the rows;
// returns the nonzero rows (a basis of the row lattice).
ZMat zmat_row_hnf(ZMat a);
// Diagonal of the Smith normal form of a nonsingular square matrix,
// divisibility chain d1 | d2 | ... (all positive).
ZVec zmat_snf_diagonal(ZMat a);

// LLL on the columns of B; returns a unimodular transform U with B*U reduced.
// Works on ball midpoints; the transform itself is exact.
ZMat lll_column_transform(const RMat& b, double delta = 0.99);

// Candidate coefficient boxes for sup-norm enumeration: every integer k with
// ||B k + w||_inf < theta satisfies |k_j - c_j| <= theta * ||row_j(B^-1)||_1
// where c = -B^-1 w.  `visit` is called in lexicographic order; return false
// from it to abort.  Fails (returns false, sets estimate) if the box holds
// more than `cap` candidates.
struct BoxEnumStats {
  bool ok = true;
  double estimated_count = 0;
};
BoxEnumStats enumerate_coeff_box(const RMat& b, const RVec& w, const Real& theta,
                                 long cap,
                                 const std::function<bool(const ZVec&)>& visit);

// Exact closest-vector in sup norm to `target` in the lattice spanned by the
// rows of `basis_rows` (rank r <= ambient dim).  Enumerates the full Babai
// bound box, so the returned coefficient vector is a true minimizer;
// ties broken by lexicographically smallest coefficient vector.
struct CvpResult {
  ZVec coeffs;
  RVec offset;  // target - sum coeffs_r * row_r
  Real dist;
};
CvpResult cvp_sup(const RMat& basis_rows, const RVec& target, long cap = 4000000);

}  // namespace gridwit
