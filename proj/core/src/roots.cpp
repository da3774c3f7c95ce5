#include "gridwit/roots.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gridwit {

namespace {

long max_precision(const RMat& m, const RVec& v) {
  long p = kDefaultPrecision;
  for (const auto& row : m)
    for (const auto& x : row) p = std::max(p, x.precision());
  for (const auto& x : v) p = std::max(p, x.precision());
  return p;
}

RMat midpoints(const RMat& m) {
  RMat r = m;
  for (auto& row : r)
    for (auto& x : row) x = x.midpoint_exact();
  return r;
}

}  // namespace

RootIndex RootIndex::shear(int i, int j) {
  if (i < 1 || j < 1 || i == j) throw std::invalid_argument("RootIndex::shear: need distinct indices >= 1");
  return RootIndex{i, j};
}

RootIndex RootIndex::translation(int i) {
  if (i < 1) throw std::invalid_argument("RootIndex::translation: index must be >= 1");
  return RootIndex{i, 0};
}

std::string RootIndex::str() const {
  if (is_translation()) return "b_" + std::to_string(i);
  return "a_" + std::to_string(i) + std::to_string(j);
}

std::vector<RootIndex> all_roots(int d) {
  std::vector<RootIndex> r;
  for (int i = 1; i <= d; ++i) r.push_back(RootIndex::translation(i));
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j)
      if (i != j) r.push_back(RootIndex::shear(i, j));
  return r;
}

DiagElement::DiagElement(RVec entries) : entries_(std::move(entries)) {
  int d = static_cast<int>(entries_.size());
  if (d == 0) throw std::invalid_argument("DiagElement: empty");
  Real prod = entries_[0];
  for (int i = 0; i < d; ++i) {
    if (!entries_[i].definitely_positive())
      throw std::invalid_argument("DiagElement: entries must be positive");
    if (i > 0) prod = prod * entries_[i];
  }
  Real one = Real::of_long(1, prod.precision());
  if (!Real::definitely_equal(prod, one)) {
    Real scale = prod.root_n(static_cast<unsigned long>(d));
    for (auto& e : entries_) e = e / scale;
  }
}

DiagElement DiagElement::identity(int d, long prec) {
  return DiagElement(RVec(d, Real::of_long(1, prec)));
}

Real DiagElement::norm() const {
  Real m = entries_[0];
  for (size_t i = 1; i < entries_.size(); ++i) m = m.max(entries_[i]);
  return m;
}

Real DiagElement::dist_to_identity() const {
  Real one = Real::of_long(1, entries_[0].precision());
  Real m = (entries_[0] - one).abs();
  for (size_t i = 1; i < entries_.size(); ++i) m = m.max((entries_[i] - one).abs());
  return m;
}

DiagElement DiagElement::inverse() const {
  RVec inv;
  inv.reserve(entries_.size());
  Real one = Real::of_long(1, entries_[0].precision());
  for (const auto& e : entries_) inv.push_back(one / e);
  return DiagElement(std::move(inv));
}

Real DiagElement::weight(const RootIndex& alpha) const {
  int d = dim();
  if (alpha.i > d || (!alpha.is_translation() && alpha.j > d))
    throw std::invalid_argument("DiagElement::weight: index out of range");
  if (alpha.is_translation()) return entries_[alpha.i - 1];
  return entries_[alpha.i - 1] / entries_[alpha.j - 1];
}

AffineElement::AffineElement(RMat lin, RVec trans, double tol)
    : linear(std::move(lin)), translation(std::move(trans)) {
  int d = static_cast<int>(translation.size());
  if (d == 0 || static_cast<int>(linear.size()) != d)
    throw std::invalid_argument("AffineElement: dimension mismatch");
  for (const auto& row : linear)
    if (static_cast<int>(row.size()) != d) throw std::invalid_argument("AffineElement: ragged matrix");
  Real det = rmat_det(linear);
  Real dev = (det - Real::of_long(1, det.precision())).abs();
  if (dev.lower_double() > tol)
    throw std::invalid_argument("AffineElement: det differs from 1 beyond tolerance");
}

AffineElement AffineElement::identity(int d, long prec) {
  return AffineElement(rmat_identity(d, prec), RVec(d, Real::of_long(0, prec)));
}

AffineElement affine_mul(const AffineElement& a, const AffineElement& b) {
  return AffineElement(rmat_mul(a.linear, b.linear),
                       rvec_add(rmat_vec(a.linear, b.translation), a.translation));
}

RVec affine_apply(const AffineElement& g, const RVec& v) {
  return rvec_add(rmat_vec(g.linear, v), g.translation);
}

Real affine_dist_to_identity(const AffineElement& g) {
  return rmat_dist_identity(g.linear).max(rvec_sup_norm(g.translation));
}

AffineElement root_element(const RootIndex& alpha, const Real& t, int d) {
  if (alpha.i > d || (!alpha.is_translation() && alpha.j > d))
    throw std::invalid_argument("root_element: index out of range");
  long p = std::max(t.precision(), kDefaultPrecision);
  RMat lin = rmat_identity(d, p);
  RVec trans(d, Real::of_long(0, p));
  if (alpha.is_translation())
    trans[alpha.i - 1] = t;
  else
    lin[alpha.i - 1][alpha.j - 1] = t;
  return AffineElement(std::move(lin), std::move(trans));
}

AffineElement diag_to_affine(const DiagElement& a) {
  int d = a.dim();
  long p = a.entries()[0].precision();
  RMat lin = rmat_identity(d, p);
  for (int i = 0; i < d; ++i) lin[i][i] = a.entries()[i];
  return AffineElement(std::move(lin), RVec(d, Real::of_long(0, p)));
}

Grid apply_root(const RootIndex& alpha, const Real& t, const Grid& g) {
  int d = g.dim();
  if (alpha.i > d || (!alpha.is_translation() && alpha.j > d))
    throw std::invalid_argument("apply_root: index out of range");
  if (alpha.is_translation()) {
    RVec shift = g.shift();
    shift[alpha.i - 1] = shift[alpha.i - 1] + t;
    return Grid(g.lattice(), std::move(shift));
  }
  RMat basis = g.lattice().basis();
  RVec shift = g.shift();
  int r = alpha.i - 1, s = alpha.j - 1;
  for (int c = 0; c < d; ++c) basis[r][c] = basis[r][c] + t * basis[s][c];
  shift[r] = shift[r] + t * shift[s];
  return Grid(Lattice(std::move(basis)), std::move(shift));
}

Grid apply_diag(const DiagElement& a, const Grid& g) {
  int d = g.dim();
  if (a.dim() != d) throw std::invalid_argument("apply_diag: dimension mismatch");
  RMat basis = g.lattice().basis();
  RVec shift = g.shift();
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) basis[r][c] = a.entries()[r] * basis[r][c];
    shift[r] = a.entries()[r] * shift[r];
  }
  return Grid(Lattice(std::move(basis)), std::move(shift));
}

Grid apply_affine(const AffineElement& f, const Grid& g) {
  if (f.dim() != g.dim()) throw std::invalid_argument("apply_affine: dimension mismatch");
  RMat basis = rmat_mul(f.linear, g.lattice().basis());
  RVec shift = rvec_add(rmat_vec(f.linear, g.shift()), f.translation);
  return Grid(Lattice(std::move(basis)), std::move(shift));
}

ChartCoords decompose_near_identity(const AffineElement& g, double chart_radius) {
  int d = g.dim();
  Real dist = affine_dist_to_identity(g);
  if (!(dist.upper_double() < chart_radius))
    throw std::domain_error("decompose_near_identity: outside chart radius");
  long p = max_precision(g.linear, g.translation);
  long wp = std::min(2 * p + 64, kMaxPrecision);

  std::vector<std::pair<RootIndex, Real>> tcoords;
  for (int i = 1; i <= d; ++i)
    tcoords.emplace_back(RootIndex::translation(i), g.translation[i - 1]);

  std::vector<RootIndex> shears;
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j)
      if (i != j) shears.push_back(RootIndex::shear(i, j));

  // Newton iteration on midpoints: maintain diag a and shear parameters t so
  // that diag(a) * prod u(t) converges to the linear part M.
  RMat M(d, RVec(d, Real::of_long(0, wp)));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) M[i][j] = g.linear[i][j].midpoint_exact().at_precision(wp);
  RVec a(d, Real::of_long(1, wp));
  for (int i = 0; i < d; ++i) a[i] = M[i][i];
  std::vector<Real> t(shears.size(), Real::of_long(0, wp));
  for (size_t k = 0; k < shears.size(); ++k)
    t[k] = (M[shears[k].i - 1][shears[k].j - 1] / a[shears[k].i - 1]).midpoint_exact();

  const double target = std::ldexp(1.0, -static_cast<int>(std::min(p + 32, wp - 16)));
  bool converged = false;
  for (int iter = 0; iter < 250; ++iter) {
    RMat u = rmat_identity(d, wp);
    for (size_t k = 0; k < shears.size(); ++k) {
      RMat s = rmat_identity(d, wp);
      s[shears[k].i - 1][shears[k].j - 1] = t[k];
      u = midpoints(rmat_mul(u, s));
    }
    RMat prod = u;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) prod[i][j] = (a[i] * u[i][j]).midpoint_exact();
    RMat resid = midpoints(rmat_mul(M, midpoints(rmat_inverse(prod))));
    double err = 0;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        Real e = (i == j) ? resid[i][j] - Real::of_long(1, wp) : resid[i][j];
        err = std::max(err, std::abs(e.midpoint_double()));
      }
    }
    if (err < target) {
      converged = true;
      break;
    }
    if (err > 1.0) break;  // diverged; input too far from the identity
    for (size_t k = 0; k < shears.size(); ++k) {
      int i = shears[k].i - 1, j = shears[k].j - 1;
      t[k] = (t[k] + resid[i][j] * a[j] / a[i]).midpoint_exact();
    }
    for (int i = 0; i < d; ++i) a[i] = (a[i] * resid[i][i]).midpoint_exact();
  }
  if (!converged) throw std::runtime_error("decompose_near_identity: iteration failed to converge");

  RVec a_out(d, Real::of_long(1, p));
  for (int i = 0; i < d; ++i) a_out[i] = a[i].at_precision(p);
  ChartCoords out{DiagElement(std::move(a_out)), std::move(tcoords), {}};
  for (size_t k = 0; k < shears.size(); ++k)
    out.shear_coords.emplace_back(shears[k], t[k].at_precision(p));

  // Ball-arithmetic verification against the original element.
  AffineElement recon = compose_chart(out);
  Real diff = rmat_sup_norm(rmat_sub(recon.linear, g.linear))
                  .max(rvec_sup_norm(rvec_sub(recon.translation, g.translation)));
  if (!(diff.upper_double() < std::ldexp(1.0, -static_cast<int>(p / 2))))
    throw std::runtime_error("decompose_near_identity: verification residual too large");
  return out;
}

AffineElement compose_chart(const ChartCoords& c) {
  int d = c.diag.dim();
  AffineElement acc = AffineElement::identity(d, c.diag.entries()[0].precision());
  for (const auto& [alpha, t] : c.translation_coords)
    acc = affine_mul(acc, root_element(alpha, t, d));
  acc = affine_mul(acc, diag_to_affine(c.diag));
  for (const auto& [alpha, t] : c.shear_coords)
    acc = affine_mul(acc, root_element(alpha, t, d));
  return acc;
}

bool membership_U(const AffineElement& g, const Real& eps, double chart_radius) {
  ChartCoords c{DiagElement::identity(1), {}, {}};
  try {
    c = decompose_near_identity(g, chart_radius);
  } catch (const std::domain_error&) {
    return false;
  } catch (const std::runtime_error&) {
    return false;
  }
  if (!c.diag.dist_to_identity().definitely_less(eps)) return false;
  for (const auto& [alpha, t] : c.translation_coords)
    if (!t.abs().definitely_less(eps)) return false;
  for (const auto& [alpha, t] : c.shear_coords)
    if (!t.abs().definitely_less(eps)) return false;
  return true;
}

bool membership_O(const AffineElement& g, const Real& eps) {
  return affine_dist_to_identity(g).definitely_less(eps);
}

RootDisplacement root_displacement(const Grid& g, const RootIndex& alpha, const Real& eps1,
                                   const Real& eps2, int sign) {
  int d = g.dim();
  if (alpha.i > d || (!alpha.is_translation() && alpha.j > d))
    throw std::invalid_argument("root_displacement: index out of range");
  if (sign == 0) throw std::invalid_argument("root_displacement: sign must be nonzero");
  long p = std::max(eps1.precision(), kDefaultPrecision);
  Real one = Real::of_long(1, p);
  if (!eps1.definitely_positive() || Real::compare(eps1, eps2) != Order::Less ||
      !eps2.definitely_less(one))
    throw std::invalid_argument("root_displacement: need 0 < eps1 < eps2 < 1");

  // Sign pattern the witness z must satisfy; unconstrained coordinates target -1.
  std::vector<int> pat(d, -1);
  if (alpha.is_translation()) {
    pat[alpha.i - 1] = (sign > 0) ? -1 : +1;
  } else {
    pat[alpha.i - 1] = (sign > 0) ? +1 : -1;
    pat[alpha.j - 1] = -1;
  }
  auto sign_ok = [&](const RVec& v) {
    for (int k = 0; k < d; ++k) {
      bool constrained = (k == alpha.i - 1) || (!alpha.is_translation() && k == alpha.j - 1);
      if (constrained) {
        if (pat[k] > 0 && !v[k].definitely_positive()) return false;
        if (pat[k] < 0 && !v[k].definitely_negative()) return false;
      } else if (!v[k].abs().definitely_positive()) {
        return false;
      }
    }
    return true;
  };

  // Lattice direction s: the nonzero-coordinate lattice point with the right
  // signs nearest to the +-1 pattern vector (lexicographic tie-break).  A
  // point at distance D from the pattern has sup-norm < D + 1, so once
  // best + 1 <= radius no closer point can lie outside the searched box.
  Grid lat(g.lattice(), RVec(d, Real::of_long(0, p)));
  std::optional<Witness> s;
  double best = 0;
  for (double radius = 2.0;; radius = s ? best + 1.0 : radius * 2) {
    if (radius > 64.0) throw std::runtime_error("root_displacement: no sign-pattern lattice point found");
    s.reset();
    for (const auto& cand : enumerate_box(lat, Real::of_double(radius, p))) {
      if (!sign_ok(cand.vector)) continue;
      double dist = 0;
      for (int k = 0; k < d; ++k)
        dist = std::max(dist, (cand.vector[k] - Real::of_long(pat[k], p)).abs().upper_double());
      if (!s || dist < best) {
        s = cand;
        best = dist;
      }
    }
    if (s && best + 1.0 <= radius) break;
  }

  // Minimal multiple l with z = shift + l*s matching the pattern and |z_k| >= 1.
  std::optional<ZVec> zk;
  RVec z;
  for (long l = 1; l <= 1000000 && !zk; ++l) {
    ZVec k(d);
    for (int q = 0; q < d; ++q) k[q] = l * s->integer_coords[q];
    RVec cand = g.point(k);
    if (!sign_ok(cand)) continue;
    bool big = true;
    for (int q = 0; q < d && big; ++q) {
      Real az = cand[q].abs();
      if (!(Real::compare(az, one) == Order::Greater || Real::definitely_equal(az, one))) big = false;
    }
    if (!big) continue;
    zk = k;
    z = cand;
  }
  if (!zk) throw std::runtime_error("root_displacement: no admissible witness multiple found");

  int i = alpha.i - 1;
  Real ni = one;
  for (int q = 0; q < d; ++q)
    if (q != i) ni = ni * z[q];
  Real absni = ni.abs();
  Real lo(p), hi(p);
  if (alpha.is_translation()) {
    lo = eps1 / absni - z[i];
    hi = eps2 / absni - z[i];
  } else {
    int j = alpha.j - 1;
    Real denom = absni * z[j].abs();
    lo = eps1 / denom - z[i] / z[j];
    hi = eps2 / denom - z[i] / z[j];
  }
  Real t = ((lo + hi).mul_2si(-1)).midpoint_exact();

  RVec moved = z;
  if (alpha.is_translation())
    moved[i] = moved[i] + t;
  else
    moved[i] = moved[i] + t * z[alpha.j - 1];
  Real theta = Real::of_double(rvec_sup_norm(moved).upper_double() + 0.5, p);

  Witness w;
  w.vector = z;
  w.sup_norm = rvec_sup_norm(z);
  w.abs_product = norm_product(z).abs();
  w.integer_coords = *zk;
  return RootDisplacement{t, theta, std::move(w)};
}

}  // namespace gridwit
