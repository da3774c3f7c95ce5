#include "gridwit/grid.hpp"

#include <algorithm>

namespace gridwit {

Lattice::Lattice(RMat basis, double tol) : basis_(std::move(basis)), det_(Real::of_long(0)) {
  size_t d = basis_.size();
  if (d < 2) throw std::invalid_argument("Lattice: dim must be >= 2");
  for (const auto& row : basis_)
    if (row.size() != d) throw std::invalid_argument("Lattice: basis must be square");
  det_ = rmat_det(basis_);
  Real absdet = det_.abs();
  if (!absdet.definitely_positive() || absdet.lower_double() < 0.5)
    throw std::invalid_argument("Lattice: determinant not bounded away from zero");
  Real dev = (absdet - Real::of_long(1, det_.precision())).abs();
  if (dev.lower_double() > tol)
    throw std::invalid_argument("Lattice: |det| differs from 1 beyond tolerance");
}

Grid::Grid(Lattice lattice, RVec shift) : lattice_(std::move(lattice)), shift_(std::move(shift)) {
  int d = lattice_.dim();
  if (static_cast<int>(shift_.size()) != d) throw std::invalid_argument("Grid: shift dim mismatch");
  // Reduce: write the shift in basis coordinates and keep fractional parts.
  RVec c = rmat_solve(lattice_.basis(), shift_);
  RVec frac(d, Real::of_long(0, shift_[0].precision()));
  bool changed = false;
  for (int i = 0; i < d; ++i) {
    auto [fl, ambiguous] = c[i].floor_int();
    // Any integer choice shifts by a lattice vector (same grid as a set), but
    // when the coordinate ball straddles an integer, floor picks the integer
    // below the lower endpoint and a near-zero coordinate would reduce to ~1.
    // Rounding the midpoint keeps it at ~0 instead.
    if (ambiguous) fl = c[i].nearest_int().first;
    if (fl != 0) changed = true;
    frac[i] = c[i] - Real::of_mpz(fl, c[i].precision());
  }
  if (changed) shift_ = rmat_vec(lattice_.basis(), frac);
}

RVec Grid::point(const ZVec& k) const {
  int d = dim();
  if (static_cast<int>(k.size()) != d) throw std::invalid_argument("Grid::point: dim mismatch");
  RVec v = shift_;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) v[i] = v[i] + lattice_.basis()[i][j] * Real::of_mpz(k[j], v[i].precision());
  }
  return v;
}

Real norm_product(const RVec& v) {
  Real p = v.at(0);
  for (size_t i = 1; i < v.size(); ++i) p = p * v[i];
  return p;
}

Grid cassels_grid(const Real& u, const Real& v, const Real& alpha, const Real& beta) {
  long prec = u.precision();
  Real zero = Real::of_long(0, prec), one = Real::of_long(1, prec);
  Real neg1 = Real::of_long(-1, prec);
  RMat basis = {{one, zero, zero}, {u, neg1, zero}, {v, zero, neg1}};
  RVec shift = {zero, -alpha, -beta};
  return Grid(Lattice(std::move(basis)), std::move(shift));
}

std::vector<Witness> enumerate_box(const Grid& g, const Real& bound, long cap) {
  if (!bound.definitely_positive()) throw std::invalid_argument("enumerate_box: bound must be > 0");
  std::vector<Witness> out;
  auto visit = [&](const ZVec& k) {
    RVec v = g.point(k);
    Real sup = v[0].abs();
    for (size_t i = 1; i < v.size(); ++i) sup = sup.max(v[i].abs());
    Order cmp = Real::compare(sup, bound);
    if (cmp == Order::Greater) return true;  // definitely outside
    Witness w;
    w.vector = std::move(v);
    w.sup_norm = sup;
    w.abs_product = norm_product(w.vector).abs();
    w.integer_coords = k;
    w.boundary_ambiguous = (cmp == Order::Undecided);
    out.push_back(std::move(w));
    return true;
  };
  BoxEnumStats stats = enumerate_coeff_box(g.lattice().basis(), g.shift(), bound, cap, visit);
  if (!stats.ok) throw CapExceededError(stats.estimated_count, cap);
  std::sort(out.begin(), out.end(),
            [](const Witness& a, const Witness& b) { return a.integer_coords < b.integer_coords; });
  return out;
}

WWitnessResult w_witness(const Grid& g, const Real& theta, const Real& eps1, const Real& eps2,
                         long cap) {
  if (eps1.definitely_negative()) throw std::invalid_argument("w_witness: eps1 must be >= 0");
  if (Real::compare(eps1, eps2) != Order::Less)
    throw std::invalid_argument("w_witness: need eps1 < eps2");
  WWitnessResult res;
  std::vector<Witness> pts = enumerate_box(g, theta, cap);
  bool saw_ambiguous = false;
  for (auto& w : pts) {
    Order above = Real::compare(eps1, w.abs_product);  // want eps1 < |N|
    Order below = Real::compare(w.abs_product, eps2);  // want |N| < eps2
    // strict inequalities: exact equality is a definite rejection
    if (above == Order::Greater || below == Order::Greater ||
        Real::definitely_equal(eps1, w.abs_product) || Real::definitely_equal(w.abs_product, eps2))
      continue;
    bool window_definite = (above == Order::Less && below == Order::Less);
    if (!window_definite || w.boundary_ambiguous) {
      saw_ambiguous = true;
      continue;
    }
    if (!res.witness) {
      res.witness = w;
      continue;
    }
    Order c = Real::compare(w.abs_product, res.witness->abs_product);
    if (c == Order::Less ||
        (c == Order::Undecided && w.integer_coords < res.witness->integer_coords)) {
      res.witness = w;
    }
  }
  res.undecided_only = !res.witness && saw_ambiguous;
  return res;
}

std::optional<ZVec> grid_coords(const Grid& g, const RVec& v) {
  int d = g.dim();
  if (static_cast<int>(v.size()) != d) return std::nullopt;
  RVec c = rmat_solve(g.lattice().basis(), rvec_sub(v, g.shift()));
  ZVec k(d);
  for (int i = 0; i < d; ++i) k[i] = c[i].nearest_int().first;
  RVec back = g.point(k);
  for (int i = 0; i < d; ++i) {
    if (Real::compare(back[i], v[i]) != Order::Undecided) return std::nullopt;
  }
  return k;
}

}  // namespace gridwit
