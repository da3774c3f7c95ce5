#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "gridwit/linalg.hpp"
#include "gridwit/real.hpp"

namespace gridwit {

// Enumeration would visit more points than the configured cap allows.
class CapExceededError : public std::runtime_error {
 public:
  CapExceededError(double estimated, long cap)
      : std::runtime_error("enumeration cap exceeded (estimated " + std::to_string(estimated) +
                           " points, cap " + std::to_string(cap) + ")"),
        estimated_count(estimated) {}
  double estimated_count;
};

// Unimodular lattice in R^d given by basis columns.  |det| must be 1 within
// `tol` and bounded away from zero.
class Lattice {
 public:
  explicit Lattice(RMat basis, double tol = 1e-9);

  int dim() const { return static_cast<int>(basis_.size()); }
  const RMat& basis() const { return basis_; }
  const Real& det() const { return det_; }

 private:
  RMat basis_;
  Real det_;
};

// Affine grid: lattice + shift, the shift stored reduced so its coordinates
// w.r.t. the basis lie in [0,1).
class Grid {
 public:
  Grid(Lattice lattice, RVec shift);

  int dim() const { return lattice_.dim(); }
  const Lattice& lattice() const { return lattice_; }
  const RVec& shift() const { return shift_; }

  // basis * k + shift
  RVec point(const ZVec& k) const;

 private:
  Lattice lattice_;
  RVec shift_;
};

// A grid point together with everything needed to re-verify it from its
// integer coordinates.
struct Witness {
  RVec vector;
  Real sup_norm;
  Real abs_product;
  ZVec integer_coords;
  std::optional<RVec> producer_diag;  // diagonal that produced it, if any
  bool boundary_ambiguous = false;    // some defining inequality was undecided
};

// v_1 v_2 ... v_d with sound radius.
Real norm_product(const RVec& v);

// d = 3 family: basis columns (1,u,v), (0,-1,0), (0,0,-1), shift (0,-a,-b).
Grid cassels_grid(const Real& u, const Real& v, const Real& alpha, const Real& beta);

// All grid points with sup-norm < bound; points whose comparison with the
// bound is undecided are included and flagged.  Sorted lexicographically by
// integer coordinates.  Throws CapExceededError when the coordinate box is
// too large.
std::vector<Witness> enumerate_box(const Grid& g, const Real& bound, long cap = 2000000);

struct WWitnessResult {
  std::optional<Witness> witness;
  // true when no definite witness exists but at least one candidate was
  // boundary-ambiguous
  bool undecided_only = false;
};

// Grid point with ‖v‖ < theta and eps1 < |N(v)| < eps2, minimizing |N(v)|
// (ties and undecided |N| comparisons broken by lexicographic integer
// coordinates).
WWitnessResult w_witness(const Grid& g, const Real& theta, const Real& eps1, const Real& eps2,
                         long cap = 2000000);

// Integer coordinates of a point expected to lie on the grid; nullopt when
// the rounded candidate fails to reproduce the point within its radius.
std::optional<ZVec> grid_coords(const Grid& g, const RVec& v);

}  // namespace gridwit
