#include "gridwit/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace gridwit {

namespace {

using DMat = std::vector<std::vector<double>>;
using DVec = std::vector<double>;

DMat midpoints(const RMat& m) {
  DMat out(m.size(), DVec(m.size()));
  for (size_t i = 0; i < m.size(); ++i)
    for (size_t j = 0; j < m.size(); ++j) out[i][j] = m[i][j].midpoint_double();
  return out;
}

double dmat_det(DMat a) {
  int n = static_cast<int>(a.size());
  double det = 1;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (a[p][c] == 0) return 0;
    if (p != c) {
      std::swap(a[p], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (int r = c + 1; r < n; ++r) {
      double f = a[r][c] / a[c][c];
      for (int j = c; j < n; ++j) a[r][j] -= f * a[c][j];
    }
  }
  return det;
}

DMat dmat_inverse(DMat a) {
  int n = static_cast<int>(a.size());
  DMat inv(n, DVec(n, 0));
  for (int i = 0; i < n; ++i) inv[i][i] = 1;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (a[p][c] == 0) throw std::domain_error("singular matrix");
    std::swap(a[p], a[c]);
    std::swap(inv[p], inv[c]);
    double piv = a[c][c];
    for (int j = 0; j < n; ++j) {
      a[c][j] /= piv;
      inv[c][j] /= piv;
    }
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      double f = a[r][c];
      if (f == 0) continue;
      for (int j = 0; j < n; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

DMat dmat_mul(const DMat& a, const DMat& b) {
  int n = static_cast<int>(a.size());
  DMat out(n, DVec(n, 0));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) out[i][j] += a[i][k] * b[k][j];
  return out;
}

// Max |(a - I)_ij|: first-order proxy for the chart distance.
double dist_identity_est(const DMat& g) {
  double m = 0;
  int n = static_cast<int>(g.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m = std::max(m, std::abs(g[i][j] - (i == j ? 1.0 : 0.0)));
  return m;
}

struct Combo {
  std::vector<std::vector<long>> columns;  // candidate integer coords per column
  double score = 0;
};

// Candidate gamma columns: integer vectors near Bx^-1 * b0_j, ranked by the
// double residual, per_column best kept.
std::vector<std::vector<std::pair<double, std::vector<long>>>> column_candidates(
    const DMat& bx, const DMat& bx_inv, const DMat& b0, int per_column) {
  int d = static_cast<int>(bx.size());
  std::vector<std::vector<std::pair<double, std::vector<long>>>> out(d);
  for (int j = 0; j < d; ++j) {
    DVec c(d, 0);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) c[i] += bx_inv[i][k] * b0[k][j];
    std::vector<std::vector<long>> cands;
    std::vector<long> base(d);
    for (int i = 0; i < d; ++i) base[i] = std::lround(c[i]);
    cands.push_back(base);
    for (int i = 0; i < d; ++i)
      for (long off : {-1L, 1L}) {
        auto k = base;
        k[i] += off;
        cands.push_back(k);
      }
    auto residual = [&](const std::vector<long>& k) {
      double m = 0;
      for (int i = 0; i < d; ++i) {
        double v = -b0[i][j];
        for (int t = 0; t < d; ++t) v += bx[i][t] * k[t];
        m = std::max(m, std::abs(v));
      }
      return m;
    };
    std::vector<std::pair<double, std::vector<long>>> ranked;
    for (auto& k : cands) ranked.emplace_back(residual(k), std::move(k));
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    ranked.resize(std::min<size_t>(ranked.size(), per_column));
    out[j] = std::move(ranked);
  }
  return out;
}

// Double-only chart distance estimate: best over candidate basis changes.
double chart_distance_estimate(const DMat& bx, const DMat& b0, const DMat& b0_inv,
                               int per_column) {
  int d = static_cast<int>(bx.size());
  DMat bx_inv;
  try {
    bx_inv = dmat_inverse(bx);
  } catch (const std::domain_error&) {
    return std::numeric_limits<double>::infinity();
  }
  auto cands = column_candidates(bx, bx_inv, b0, per_column);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(d, 0);
  while (true) {
    DMat bg(d, DVec(d, 0));
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i)
        for (int t = 0; t < d; ++t) bg[i][j] += bx[i][t] * cands[j][pick[j]].second[t];
    best = std::min(best, dist_identity_est(dmat_mul(bg, b0_inv)));
    int k = 0;
    while (k < d && pick[k] + 1 >= static_cast<int>(cands[k].size())) pick[k++] = 0;
    if (k == d) break;
    ++pick[k];
  }
  return best;
}

// Max |chart coordinate| as a ball; on overlap the hull still encloses the
// true maximum.
Real chart_max_coord(const ChartCoords& c) {
  Real out = c.diag.dist_to_identity();
  auto take = [&](const Real& v) {
    Order o = Real::compare(v, out);
    if (o == Order::Greater) out = v;
    else if (o == Order::Undecided) out = Real::hull(out, v);
  };
  for (const auto& [root, t] : c.translation_coords) take(t.abs());
  for (const auto& [root, t] : c.shear_coords) take(t.abs());
  return out;
}

RMat diag_flow_basis(const Lattice& x, const std::vector<double>& dir, double t, long prec) {
  int d = x.dim();
  RMat b = x.basis();
  for (int i = 0; i < d; ++i) {
    Real f = (Real::of_double(t, prec) * Real::of_double(dir[i], prec)).exp();
    for (int j = 0; j < d; ++j) b[i][j] = b[i][j] * f;
  }
  return b;
}

void check_flow(const FlowSpec& flow, int d) {
  if (static_cast<int>(flow.direction.size()) != d)
    throw std::invalid_argument("flow direction has wrong dimension");
  double s = 0, m = 0;
  for (double v : flow.direction) {
    s += v;
    m = std::max(m, std::abs(v));
  }
  if (m == 0) throw std::invalid_argument("flow direction is zero");
  if (std::abs(s) > 1e-9 * std::max(1.0, m))
    throw std::invalid_argument("flow direction must sum to zero");
}

}  // namespace

MembershipResult lattice_neighborhood_member(const Lattice& x, const Lattice& x0, double eps,
                                             int per_column) {
  int d = x.dim();
  if (x0.dim() != d) throw std::invalid_argument("dimension mismatch");
  if (eps <= 0 || eps > 0.45) throw std::invalid_argument("eps must lie in (0, 0.45]");
  MembershipResult res;
  res.chart_dist = std::numeric_limits<double>::infinity();

  DMat bx = midpoints(x.basis());
  DMat b0 = midpoints(x0.basis());
  DMat bx_inv, b0_inv;
  try {
    bx_inv = dmat_inverse(bx);
    b0_inv = dmat_inverse(b0);
  } catch (const std::domain_error&) {
    res.no_within_search = true;
    return res;
  }
  double sign_match = dmat_det(bx) * dmat_det(b0);

  auto cands = column_candidates(bx, bx_inv, b0, per_column);
  struct Entry {
    double est;
    ZMat gamma;
  };
  std::vector<Entry> combos;
  std::vector<int> pick(d, 0);
  while (true) {
    ZMat gamma(d, ZVec(d));
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) gamma[i][j] = cands[j][pick[j]].second[i];
    mpz_class det = zmat_det(gamma);
    if (det == 1 || det == -1) {
      bool orient = (det == 1) == (sign_match > 0);
      DMat bg(d, DVec(d, 0));
      for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i)
          for (int t = 0; t < d; ++t)
            bg[i][j] += bx[i][t] * cands[j][pick[j]].second[t];
      double est = dist_identity_est(dmat_mul(bg, b0_inv));
      res.chart_dist = std::min(res.chart_dist, est);
      if (orient && est < 1.6 * eps) combos.push_back({est, std::move(gamma)});
    }
    int k = 0;
    while (k < d && pick[k] + 1 >= static_cast<int>(cands[k].size())) pick[k++] = 0;
    if (k == d) break;
    ++pick[k];
  }
  std::sort(combos.begin(), combos.end(),
            [](const Entry& a, const Entry& b) { return a.est < b.est; });

  long prec = x.basis()[0][0].precision();
  double chart_radius = std::max(0.35, 2.0 * eps);
  for (const Entry& e : combos) {
    RMat g = rmat_mul(rmat_mul(x.basis(), zmat_to_rmat(e.gamma, prec)),
                      rmat_inverse(x0.basis()));
    try {
      AffineElement aff(g, RVec(d, Real::of_long(0, prec)), 1e-6);
      ChartCoords c = decompose_near_identity(aff, chart_radius);
      Real m = chart_max_coord(c);
      if (Real::compare(m, Real::of_double(eps, prec)) == Order::Less) {
        res.member = true;
        res.gamma = e.gamma;
        res.chart_max = m;
        res.chart_dist = std::min(res.chart_dist, m.upper_double());
        return res;
      }
    } catch (const std::exception&) {
      // outside the chart or determinant drifted: not this combo
    }
  }
  res.no_within_search = res.chart_dist < 2.0 * eps;
  return res;
}

HittingRecord first_hitting(const Lattice& x_start, const Lattice& x0, const FlowSpec& flow,
                            double beta) {
  int d = x_start.dim();
  check_flow(flow, d);
  if (beta <= 0) throw std::invalid_argument("beta must be positive");
  double eps = std::pow(flow.t_max, -beta);
  if (eps > 0.45) eps = 0.45;  // chart validity ceiling

  double max_dir = 0;
  for (double v : flow.direction) max_dir = std::max(max_dir, std::abs(v));
  double lam = 3.0 * d * max_dir;  // chart drift rate bound near the target
  double base = flow.base_step > 0 ? flow.base_step : (eps / 4.0) / lam;

  HittingRecord rec;
  rec.eps = eps;
  long prec = x_start.basis()[0][0].precision();
  double t = 0;
  while (t <= flow.t_max) {
    Lattice xt{diag_flow_basis(x_start, flow.direction, t, prec)};
    MembershipResult res = lattice_neighborhood_member(xt, x0, eps);
    ++rec.samples;
    if (res.member && res.chart_max) {
      Real half = Real::of_double(eps / 2.0, prec);
      if (Real::compare(*res.chart_max, half) == Order::Greater) {
        // Verified annulus visit: re-derive the certificate from gamma.
        RMat g = rmat_mul(rmat_mul(xt.basis(), zmat_to_rmat(*res.gamma, prec)),
                          rmat_inverse(x0.basis()));
        AffineElement aff(g, RVec(d, Real::of_long(0, prec)), 1e-6);
        if (!membership_U(aff, Real::of_double(eps, prec), std::max(0.35, 2.0 * eps)))
          throw std::logic_error("first_hitting: certificate failed re-verification");
        rec.hit = true;
        rec.t_hit = t;
        rec.gamma = *res.gamma;
        rec.chart_coord = res.chart_max->midpoint_double();
        return rec;
      }
      // Inside the inner ball: keep flowing, the exit crosses the annulus.
      t += base;
      continue;
    }
    double est = res.chart_dist;
    double step = base;
    if (std::isfinite(est) && est > 4.0 * eps)
      step = std::min(40.0 * base, std::max(base, (est - 2.0 * eps) / lam));
    else if (!std::isfinite(est))
      step = 8.0 * base;
    t += step;
  }
  return rec;
}

std::vector<HittingRecord> horospherical_hitting(const Lattice& x, const Lattice& x0,
                                                 const std::vector<std::vector<double>>& u_grid,
                                                 const FlowSpec& flow, double beta) {
  int d = x.dim();
  long prec = x.basis()[0][0].precision();
  std::vector<HittingRecord> out;
  out.reserve(u_grid.size());
  for (const auto& u : u_grid) {
    if (static_cast<int>(u.size()) != d - 1)
      throw std::invalid_argument("horospherical parameter has wrong dimension");
    // Shears x_1 += u_i * x_(i+1); expanding for flow directions with
    // d_1 > d_i, e.g. (d-1, -1, ..., -1).
    RMat h = rmat_identity(d, prec);
    for (int i = 1; i < d; ++i) h[0][i] = Real::of_double(u[i - 1], prec);
    Lattice xu{rmat_mul(h, x.basis())};
    HittingRecord rec = first_hitting(xu, x0, flow, beta);
    rec.u = u;
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<AverageRow> orbit_average_probe(const Lattice& x0, const std::vector<double>& direction,
                                            double box_eps, double smoothing,
                                            const std::vector<double>& t_values, int samples,
                                            unsigned long seed) {
  int d = x0.dim();
  if (static_cast<int>(direction.size()) != d)
    throw std::invalid_argument("direction has wrong dimension");
  if (samples < 2) throw std::invalid_argument("need at least two samples");
  DMat b0 = midpoints(x0.basis());
  DMat b0_inv = dmat_inverse(b0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto f = [&](const DMat& b) {
    double est = chart_distance_estimate(b, b0, b0_inv, 3);
    double r = est / box_eps;
    if (r <= 1.0) return 1.0;
    if (r >= 1.0 + smoothing) return 0.0;
    double s = (r - 1.0) / smoothing;
    return 1.0 - s * s * (3.0 - 2.0 * s);
  };

  std::vector<std::vector<double>> averages(t_values.size());
  for (int n = 0; n < samples; ++n) {
    DMat b(d, DVec(d));
    double det = 0;
    do {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) b[i][j] = gauss(rng);
      det = dmat_det(b);
    } while (std::abs(det) < 0.05);
    double scale = std::pow(std::abs(det), -1.0 / d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) b[i][j] *= scale;

    for (size_t ti = 0; ti < t_values.size(); ++ti) {
      double T = t_values[ti];
      double acc = 0;
      if (T <= 0) {
        acc = f(b);
      } else {
        int steps = std::max(10, static_cast<int>(T / 0.5));
        for (int k = 0; k < steps; ++k) {
          double t = (k + 0.5) * T / steps;
          DMat bt = b;
          for (int i = 0; i < d; ++i) {
            double fct = std::exp(t * direction[i]);
            for (int j = 0; j < d; ++j) bt[i][j] *= fct;
          }
          acc += f(bt);
        }
        acc /= steps;
      }
      averages[ti].push_back(acc);
    }
  }

  std::vector<AverageRow> rows;
  for (size_t ti = 0; ti < t_values.size(); ++ti) {
    double mean = 0;
    for (double v : averages[ti]) mean += v;
    mean /= samples;
    double var = 0;
    for (double v : averages[ti]) var += (v - mean) * (v - mean);
    var /= (samples - 1);
    rows.push_back({t_values[ti], mean, var});
  }
  return rows;
}

}  // namespace gridwit
