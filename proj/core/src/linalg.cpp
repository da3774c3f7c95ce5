#include "gridwit/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace gridwit {

RMat rmat_identity(int d, long prec) {
  RMat m(d, RVec(d, Real::of_long(0, prec)));
  for (int i = 0; i < d; ++i) m[i][i] = Real::of_long(1, prec);
  return m;
}

RMat rmat_mul(const RMat& a, const RMat& b) {
  size_t n = a.size(), k = b.size(), m = b[0].size();
  RMat r(n, RVec(m, Real::of_long(0, a[0][0].precision())));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) {
      Real acc = a[i][0] * b[0][j];
      for (size_t t = 1; t < k; ++t) acc = acc + a[i][t] * b[t][j];
      r[i][j] = acc;
    }
  return r;
}

RVec rmat_vec(const RMat& a, const RVec& x) {
  RVec r;
  r.reserve(a.size());
  for (const auto& row : a) {
    Real acc = row[0] * x[0];
    for (size_t t = 1; t < x.size(); ++t) acc = acc + row[t] * x[t];
    r.push_back(acc);
  }
  return r;
}

RMat rmat_transpose(const RMat& a) {
  RMat r(a[0].size(), RVec(a.size(), Real::of_long(0, a[0][0].precision())));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a[0].size(); ++j) r[j][i] = a[i][j];
  return r;
}

RMat rmat_sub(const RMat& a, const RMat& b) {
  RMat r = a;
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a[0].size(); ++j) r[i][j] = a[i][j] - b[i][j];
  return r;
}

RVec rvec_add(const RVec& a, const RVec& b) {
  RVec r = a;
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

RVec rvec_sub(const RVec& a, const RVec& b) {
  RVec r = a;
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

RVec rvec_scale(const RVec& a, const Real& c) {
  RVec r = a;
  for (auto& x : r) x = x * c;
  return r;
}

Real rvec_dot(const RVec& a, const RVec& b) {
  Real acc = a[0] * b[0];
  for (size_t i = 1; i < a.size(); ++i) acc = acc + a[i] * b[i];
  return acc;
}

Real rvec_sup_norm(const RVec& a) {
  Real m = a[0].abs();
  for (size_t i = 1; i < a.size(); ++i) m = m.max(a[i].abs());
  return m;
}

Real rmat_sup_norm(const RMat& a) {
  Real m = a[0][0].abs();
  for (const auto& row : a)
    for (const auto& x : row) m = m.max(x.abs());
  return m;
}

Real rmat_dist_identity(const RMat& a) {
  long prec = a[0][0].precision();
  Real one = Real::of_long(1, prec);
  Real m = Real::of_long(0, prec);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a[0].size(); ++j) {
      Real e = (i == j) ? a[i][j] - one : a[i][j];
      m = m.max(e.abs());
    }
  return m;
}

namespace {

// LU elimination in place; returns permutation sign or throws on a pivot
// ball containing zero.
int eliminate(RMat& m, std::vector<RVec>* rhs) {
  int n = static_cast<int>(m.size());
  int sign = 1;
  for (int c = 0; c < n; ++c) {
    int piv = -1;
    double best = -1;
    for (int r = c; r < n; ++r) {
      double cand = std::abs(m[r][c].midpoint_double());
      if (cand > best) {
        best = cand;
        piv = r;
      }
    }
    if (piv != c) {
      std::swap(m[piv], m[c]);
      if (rhs) std::swap((*rhs)[piv], (*rhs)[c]);
      sign = -sign;
    }
    if (m[c][c].contains_zero())
      throw std::domain_error("rmat: pivot ball contains zero (singular at this precision)");
    for (int r = c + 1; r < n; ++r) {
      Real f = m[r][c] / m[c][c];
      for (int j = c; j < n; ++j) m[r][j] = m[r][j] - f * m[c][j];
      if (rhs)
        for (size_t j = 0; j < (*rhs)[r].size(); ++j)
          (*rhs)[r][j] = (*rhs)[r][j] - f * (*rhs)[c][j];
    }
  }
  return sign;
}

}  // namespace

Real rmat_det(const RMat& a) {
  RMat m = a;
  int sign;
  try {
    sign = eliminate(m, nullptr);
  } catch (const std::domain_error&) {
    // Singular within the ball: determinant indistinguishable from zero.
    // Hadamard-style bound |det| <= n! * max|entry|^n keeps the result sound.
    Real s = rmat_sup_norm(a);
    long n = static_cast<long>(a.size());
    long fact = 1;
    for (long i = 2; i <= n; ++i) fact *= i;
    Real bound = s.pow_si(n) * Real::of_long(fact, s.precision());
    return Real::ball(0.0, bound.upper_double(), s.precision());
  }
  Real det = m[0][0];
  for (size_t i = 1; i < m.size(); ++i) det = det * m[i][i];
  return sign < 0 ? -det : det;
}

RVec rmat_solve(const RMat& a, const RVec& b) {
  RMat m = a;
  std::vector<RVec> rhs(b.size());
  for (size_t i = 0; i < b.size(); ++i) rhs[i] = {b[i]};
  eliminate(m, &rhs);
  int n = static_cast<int>(m.size());
  RVec x(n, Real::of_long(0, b[0].precision()));
  for (int i = n - 1; i >= 0; --i) {
    Real acc = rhs[i][0];
    for (int j = i + 1; j < n; ++j) acc = acc - m[i][j] * x[j];
    x[i] = acc / m[i][i];
  }
  return x;
}

RMat rmat_inverse(const RMat& a) {
  int n = static_cast<int>(a.size());
  RMat m = a;
  std::vector<RVec> rhs(n);
  long prec = a[0][0].precision();
  for (int i = 0; i < n; ++i) {
    rhs[i] = RVec(n, Real::of_long(0, prec));
    rhs[i][i] = Real::of_long(1, prec);
  }
  eliminate(m, &rhs);
  RMat inv(n, RVec(n, Real::of_long(0, prec)));
  for (int col = 0; col < n; ++col) {
    for (int i = n - 1; i >= 0; --i) {
      Real acc = rhs[i][col];
      for (int j = i + 1; j < n; ++j) acc = acc - m[i][j] * inv[j][col];
      inv[i][col] = acc / m[i][i];
    }
  }
  return inv;
}

ZMat zmat_identity(int d) {
  ZMat m(d, ZVec(d, 0));
  for (int i = 0; i < d; ++i) m[i][i] = 1;
  return m;
}

ZMat zmat_mul(const ZMat& a, const ZMat& b) {
  size_t n = a.size(), k = b.size(), m = b[0].size();
  ZMat r(n, ZVec(m, 0));
  for (size_t i = 0; i < n; ++i)
    for (size_t t = 0; t < k; ++t)
      for (size_t j = 0; j < m; ++j) r[i][j] += a[i][t] * b[t][j];
  return r;
}

ZVec zmat_vec(const ZMat& a, const ZVec& x) {
  ZVec r(a.size(), 0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < x.size(); ++j) r[i] += a[i][j] * x[j];
  return r;
}

mpz_class zmat_det(const ZMat& a) {
  // Fraction-free Bareiss elimination.
  int n = static_cast<int>(a.size());
  ZMat m = a;
  mpz_class prev = 1;
  int sign = 1;
  for (int c = 0; c < n - 1; ++c) {
    if (m[c][c] == 0) {
      int piv = -1;
      for (int r = c + 1; r < n; ++r)
        if (m[r][c] != 0) {
          piv = r;
          break;
        }
      if (piv < 0) return 0;
      std::swap(m[piv], m[c]);
      sign = -sign;
    }
    for (int r = c + 1; r < n; ++r)
      for (int j = c + 1; j < n; ++j) {
        m[r][j] = (m[r][j] * m[c][c] - m[r][c] * m[c][j]) / prev;
      }
    prev = m[c][c];
  }
  return sign * m[n - 1][n - 1];
}

ZMat zmat_inverse_unimodular(const ZMat& a) {
  int n = static_cast<int>(a.size());
  mpz_class det = zmat_det(a);
  if (det != 1 && det != -1)
    throw std::invalid_argument("zmat_inverse_unimodular: determinant is not +-1");
  // Adjugate via cofactors (n <= 4 in practice).
  ZMat inv(n, ZVec(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      ZMat minor;
      for (int r = 0; r < n; ++r) {
        if (r == i) continue;
        ZVec row;
        for (int c = 0; c < n; ++c)
          if (c != j) row.push_back(a[r][c]);
        minor.push_back(row);
      }
      mpz_class cof = minor.empty() ? mpz_class(1) : zmat_det(minor);
      if ((i + j) % 2) cof = -cof;
      inv[j][i] = cof * det;  // det = +-1 so dividing equals multiplying
    }
  return inv;
}

RMat zmat_to_rmat(const ZMat& a, long prec) {
  RMat r(a.size(), RVec(a[0].size(), Real::of_long(0, prec)));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a[0].size(); ++j) r[i][j] = Real::of_mpz(a[i][j], prec);
  return r;
}

QMat qmat_identity(int d) {
  QMat m(d, QVec(d, 0));
  for (int i = 0; i < d; ++i) m[i][i] = 1;
  return m;
}

QMat qmat_mul(const QMat& a, const QMat& b) {
  size_t n = a.size(), k = b.size(), m = b[0].size();
  QMat r(n, QVec(m, 0));
  for (size_t i = 0; i < n; ++i)
    for (size_t t = 0; t < k; ++t)
      for (size_t j = 0; j < m; ++j) r[i][j] += a[i][t] * b[t][j];
  return r;
}

QVec qmat_vec(const QMat& a, const QVec& x) {
  QVec r(a.size(), 0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < x.size(); ++j) r[i] += a[i][j] * x[j];
  return r;
}

namespace {

// Gauss-Jordan over Q; returns false if singular.
bool qmat_gauss(QMat& m, QMat& rhs) {
  int n = static_cast<int>(m.size());
  for (int c = 0; c < n; ++c) {
    int piv = -1;
    for (int r = c; r < n; ++r)
      if (m[r][c] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) return false;
    std::swap(m[piv], m[c]);
    std::swap(rhs[piv], rhs[c]);
    mpq_class inv = 1 / m[c][c];
    for (auto& x : m[c]) x *= inv;
    for (auto& x : rhs[c]) x *= inv;
    for (int r = 0; r < n; ++r) {
      if (r == c || m[r][c] == 0) continue;
      mpq_class f = m[r][c];
      for (int j = 0; j < n; ++j) m[r][j] -= f * m[c][j];
      for (size_t j = 0; j < rhs[r].size(); ++j) rhs[r][j] -= f * rhs[c][j];
    }
  }
  return true;
}

}  // namespace

mpq_class qmat_det(const QMat& a) {
  int n = static_cast<int>(a.size());
  QMat m = a;
  mpq_class det = 1;
  for (int c = 0; c < n; ++c) {
    int piv = -1;
    for (int r = c; r < n; ++r)
      if (m[r][c] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) return 0;
    if (piv != c) {
      std::swap(m[piv], m[c]);
      det = -det;
    }
    det *= m[c][c];
    mpq_class inv = 1 / m[c][c];
    for (int r = c + 1; r < n; ++r) {
      mpq_class f = m[r][c] * inv;
      for (int j = c; j < n; ++j) m[r][j] -= f * m[c][j];
    }
  }
  return det;
}

QMat qmat_inverse(const QMat& a) {
  QMat m = a;
  QMat rhs = qmat_identity(static_cast<int>(a.size()));
  if (!qmat_gauss(m, rhs)) throw std::invalid_argument("qmat_inverse: singular matrix");
  return rhs;
}

QVec qmat_solve(const QMat& a, const QVec& b) {
  QMat m = a;
  QMat rhs(b.size());
  for (size_t i = 0; i < b.size(); ++i) rhs[i] = {b[i]};
  if (!qmat_gauss(m, rhs)) throw std::invalid_argument("qmat_solve: singular matrix");
  QVec x(b.size());
  for (size_t i = 0; i < b.size(); ++i) x[i] = rhs[i][0];
  return x;
}

ZMat zmat_row_hnf(ZMat a) {
  if (a.empty()) return a;
  size_t rows = a.size(), cols = a[0].size();
  size_t r = 0;
  for (size_t c = 0; c < cols && r < rows; ++c) {
    // Reduce column c below row r by gcd steps.
    while (true) {
      size_t piv = rows;
      for (size_t i = r; i < rows; ++i)
        if (a[i][c] != 0 && (piv == rows || abs(a[i][c]) < abs(a[piv][c]))) piv = i;
      if (piv == rows) break;  // column all zero
      std::swap(a[piv], a[r]);
      bool done = true;
      for (size_t i = r + 1; i < rows; ++i) {
        if (a[i][c] == 0) continue;
        mpz_class q = a[i][c] / a[r][c];  // truncated division
        for (size_t j = 0; j < cols; ++j) a[i][j] -= q * a[r][j];
        if (a[i][c] != 0) done = false;
      }
      if (done) break;
    }
    if (a[r][c] != 0) {
      if (a[r][c] < 0)
        for (size_t j = 0; j < cols; ++j) a[r][j] = -a[r][j];
      // Reduce the rows above into canonical range.
      for (size_t i = 0; i < r; ++i) {
        mpz_class q;
        mpz_fdiv_q(q.get_mpz_t(), a[i][c].get_mpz_t(), a[r][c].get_mpz_t());
        if (q != 0)
          for (size_t j = 0; j < cols; ++j) a[i][j] -= q * a[r][j];
      }
      ++r;
    }
  }
  a.resize(r);
  return a;
}

ZVec zmat_snf_diagonal(ZMat a) {
  int n = static_cast<int>(a.size());
  auto nonzero_exists = [&](int from) {
    for (int i = from; i < n; ++i)
      for (int j = from; j < n; ++j)
        if (a[i][j] != 0) return true;
    return false;
  };
  for (int k = 0; k < n; ++k) {
    if (!nonzero_exists(k)) break;
    while (true) {
      // Move the smallest nonzero entry of the trailing block to (k, k).
      int bi = -1, bj = -1;
      for (int i = k; i < n; ++i)
        for (int j = k; j < n; ++j)
          if (a[i][j] != 0 && (bi < 0 || abs(a[i][j]) < abs(a[bi][bj]))) {
            bi = i;
            bj = j;
          }
      std::swap(a[bi], a[k]);
      for (int i = 0; i < n; ++i) std::swap(a[i][bj], a[i][k]);
      bool clean = true;
      for (int i = k + 1; i < n; ++i)
        if (a[i][k] != 0) {
          mpz_class q = a[i][k] / a[k][k];
          for (int j = k; j < n; ++j) a[i][j] -= q * a[k][j];
          if (a[i][k] != 0) clean = false;
        }
      for (int j = k + 1; j < n; ++j)
        if (a[k][j] != 0) {
          mpz_class q = a[k][j] / a[k][k];
          for (int i = k; i < n; ++i) a[i][j] -= q * a[i][k];
          if (a[k][j] != 0) clean = false;
        }
      if (!clean) continue;
      // Enforce divisibility of the remaining block.
      bool divides_all = true;
      for (int i = k + 1; i < n && divides_all; ++i)
        for (int j = k + 1; j < n && divides_all; ++j)
          if (a[i][j] % a[k][k] != 0) {
            for (int t = k; t < n; ++t) a[k][t] += a[i][t];  // fold offending row into pivot row, retry
            divides_all = false;
          }
      if (divides_all) break;
    }
  }
  ZVec d;
  for (int i = 0; i < n; ++i) {
    mpz_class v = abs(a[i][i]);
    if (v != 0) d.push_back(v);
  }
  return d;
}

ZMat lll_column_transform(const RMat& bmat, double delta) {
  int dim = static_cast<int>(bmat.size());
  int n = static_cast<int>(bmat[0].size());

  // Work on exact rational snapshots of the midpoints; the returned
  // transform is exact and any consumer re-derives certified quantities.
  std::vector<QVec> b(n, QVec(dim));  // columns
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < dim; ++r) {
      mpz_class z;
      mpfr_exp_t e = mpfr_get_z_2exp(z.get_mpz_t(), bmat[r][i].raw_value());
      mpq_class q(z);
      if (z != 0) {
        if (e >= 0)
          mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<unsigned long>(e));
        else
          mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<unsigned long>(-e));
      } else {
        q = 0;
      }
      b[i][r] = q;
    }
  ZMat u = zmat_identity(n);
  mpq_class delta_q(delta);  // exact value of the double

  std::vector<QVec> gs(n, QVec(dim));
  std::vector<mpq_class> bn(n);
  std::vector<std::vector<mpq_class>> mu(n, std::vector<mpq_class>(n));

  auto dot = [&](const QVec& x, const QVec& y) {
    mpq_class acc = 0;
    for (int r = 0; r < dim; ++r) acc += x[r] * y[r];
    return acc;
  };
  auto gram_schmidt = [&]() {
    for (int i = 0; i < n; ++i) {
      gs[i] = b[i];
      for (int j = 0; j < i; ++j) {
        if (bn[j] == 0) {
          mu[i][j] = 0;
          continue;
        }
        mu[i][j] = dot(b[i], gs[j]) / bn[j];
        for (int r = 0; r < dim; ++r) gs[i][r] -= mu[i][j] * gs[j][r];
      }
      bn[i] = dot(gs[i], gs[i]);
    }
  };
  auto nearest_z = [](const mpq_class& m) {
    mpz_class num = m.get_num(), den = m.get_den();
    mpz_class t = 2 * num + den, d2 = 2 * den, q;
    mpz_fdiv_q(q.get_mpz_t(), t.get_mpz_t(), d2.get_mpz_t());
    return q;
  };

  gram_schmidt();
  int k = 1;
  int guard = 0;
  const int guard_max = 100000;
  while (k < n && ++guard < guard_max) {
    for (int j = k - 1; j >= 0; --j) {
      mpz_class q = nearest_z(mu[k][j]);
      if (q != 0) {
        for (int r = 0; r < dim; ++r) b[k][r] -= mpq_class(q) * b[j][r];
        for (int i = 0; i < n; ++i) u[i][k] -= q * u[i][j];
        gram_schmidt();
      }
    }
    mpq_class rhs = (delta_q - mu[k][k - 1] * mu[k][k - 1]) * bn[k - 1];
    if (bn[k] < rhs) {
      std::swap(b[k], b[k - 1]);
      for (int i = 0; i < n; ++i) std::swap(u[i][k], u[i][k - 1]);
      gram_schmidt();
      k = std::max(1, k - 1);
    } else {
      ++k;
    }
  }
  return u;
}

BoxEnumStats enumerate_coeff_box(const RMat& b, const RVec& w, const Real& theta,
                                 long cap,
                                 const std::function<bool(const ZVec&)>& visit) {
  int d = static_cast<int>(b.size());
  RMat inv = rmat_inverse(b);
  RVec c = rmat_vec(inv, w);  // B^-1 w; candidate centers are -c
  BoxEnumStats stats;
  std::vector<long> lo(d), hi(d);
  double est = 1;
  for (int j = 0; j < d; ++j) {
    Real rownorm = inv[j][0].abs();
    for (int t = 1; t < d; ++t) rownorm = rownorm + inv[j][t].abs();
    Real rad = theta * rownorm;
    Real center = -c[j];
    double l = (center - rad).lower_double();
    double h = (center + rad).upper_double();
    lo[j] = static_cast<long>(std::floor(l));
    hi[j] = static_cast<long>(std::ceil(h));
    est *= static_cast<double>(hi[j] - lo[j] + 1);
  }
  stats.estimated_count = est;
  if (est > static_cast<double>(cap)) {
    stats.ok = false;
    return stats;
  }
  ZVec k(d);
  std::function<bool(int)> rec = [&](int j) -> bool {
    if (j == d) return visit(k);
    for (long v = lo[j]; v <= hi[j]; ++v) {
      k[j] = v;
      if (!rec(j + 1)) return false;
    }
    return true;
  };
  rec(0);
  return stats;
}

CvpResult cvp_sup(const RMat& basis_rows, const RVec& target, long cap) {
  int r = static_cast<int>(basis_rows.size());
  int d = static_cast<int>(target.size());
  long prec = target[0].precision();

  // Least squares: (L L^T) m = L t.
  RMat gram(r, RVec(r, Real::of_long(0, prec)));
  RVec rhs(r, Real::of_long(0, prec));
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) gram[i][j] = rvec_dot(basis_rows[i], basis_rows[j]);
    rhs[i] = rvec_dot(basis_rows[i], target);
  }
  RVec mhat = rmat_solve(gram, rhs);

  auto offset_for = [&](const ZVec& m) {
    RVec off = target;
    for (int i = 0; i < r; ++i) {
      Real ci = Real::of_mpz(m[i], prec);
      for (int j = 0; j < d; ++j) off[j] = off[j] - ci * basis_rows[i][j];
    }
    return off;
  };

  ZVec m0(r);
  for (int i = 0; i < r; ++i) m0[i] = mhat[i].nearest_int().first;
  RVec off0 = offset_for(m0);
  Real best = rvec_sup_norm(off0);

  // pinv = (L L^T)^-1 L maps offsets back to coefficients; row 1-norms bound
  // how far any competitive m can sit from mhat.
  RMat gram_inv = rmat_inverse(gram);
  RMat pinv(r, RVec(d, Real::of_long(0, prec)));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < d; ++j) {
      Real acc = Real::of_long(0, prec);
      for (int t = 0; t < r; ++t) acc = acc + gram_inv[i][t] * basis_rows[t][j];
      pinv[i][j] = acc;
    }

  std::vector<long> lo(r), hi(r);
  double est = 1;
  for (int i = 0; i < r; ++i) {
    Real rownorm = pinv[i][0].abs();
    for (int j = 1; j < d; ++j) rownorm = rownorm + pinv[i][j].abs();
    Real rad = best * rownorm;
    double l = (mhat[i] - rad).lower_double();
    double h = (mhat[i] + rad).upper_double();
    lo[i] = static_cast<long>(std::floor(l)) - 1;
    hi[i] = static_cast<long>(std::ceil(h)) + 1;
    est *= static_cast<double>(hi[i] - lo[i] + 1);
  }
  if (est > static_cast<double>(cap))
    throw std::runtime_error("cvp_sup: candidate box exceeds cap");

  CvpResult result{m0, off0, best};
  ZVec m(r);
  std::function<void(int)> rec = [&](int i) {
    if (i == r) {
      RVec off = offset_for(m);
      Real dist = rvec_sup_norm(off);
      if (dist.definitely_less(result.dist)) {
        result = {m, off, dist};
      } else if (!result.dist.definitely_less(dist) && m < result.coeffs) {
        // Indistinguishable at this precision: prefer lexicographically
        // smaller coefficients so results are reproducible.
        result = {m, off, dist};
      }
      return;
    }
    for (long v = lo[i]; v <= hi[i]; ++v) {
      m[i] = v;
      rec(i + 1);
    }
  };
  rec(0);
  return result;
}

}  // namespace gridwit
