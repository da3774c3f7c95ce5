#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gridwit/grid.hpp"

namespace gridwit {

// One-parameter subgroup acting on R^d: a shear coupling two coordinates
// (x_i += t x_j) or a translation along one axis (x_i += t).  1-based indices.
struct RootIndex {
  int i = 1;
  int j = 0;  // 0 marks a translation root

  static RootIndex shear(int i, int j);
  static RootIndex translation(int i);
  bool is_translation() const { return j == 0; }
  std::string str() const;  // "a_ij" for shears, "b_i" for translations
  bool operator==(const RootIndex&) const = default;
};

// Translations ascending, then shears in lexicographic (i,j) order.  This is
// also the fixed product order of the chart decomposition below.
std::vector<RootIndex> all_roots(int d);

// Positive diagonal matrix with unit determinant; entries are renormalised by
// the d-th root of their product at construction.
class DiagElement {
 public:
  explicit DiagElement(RVec entries);
  static DiagElement identity(int d, long prec = kDefaultPrecision);

  int dim() const { return static_cast<int>(entries_.size()); }
  const RVec& entries() const { return entries_; }
  Real norm() const;              // max entry
  Real dist_to_identity() const;  // max |a_i - 1|
  DiagElement inverse() const;
  // Eigenvalue of the conjugation action on the root's parameter:
  // a_i / a_j for shears, a_i for translations.
  Real weight(const RootIndex& alpha) const;

 private:
  RVec entries_;
};

// Affine map x -> linear*x + translation with |det(linear) - 1| within tol.
struct AffineElement {
  RMat linear;
  RVec translation;

  AffineElement(RMat lin, RVec trans, double tol = 1e-9);
  static AffineElement identity(int d, long prec = kDefaultPrecision);
  int dim() const { return static_cast<int>(translation.size()); }
};

AffineElement affine_mul(const AffineElement& a, const AffineElement& b);
RVec affine_apply(const AffineElement& g, const RVec& v);
// max of ‖linear - I‖_max and ‖translation‖_max, as a ball.
Real affine_dist_to_identity(const AffineElement& g);
// The affine map of the root subgroup element with parameter t.
AffineElement root_element(const RootIndex& alpha, const Real& t, int d);
AffineElement diag_to_affine(const DiagElement& a);

// Image grids under the group action (the whole point set is mapped).
Grid apply_root(const RootIndex& alpha, const Real& t, const Grid& g);
Grid apply_diag(const DiagElement& a, const Grid& g);
Grid apply_affine(const AffineElement& f, const Grid& g);

// Chart coordinates in the fixed product order
//   prod_{translations, i asc} u(t) * a * prod_{shears, (i,j) lex} u(t).
struct ChartCoords {
  DiagElement diag;
  std::vector<std::pair<RootIndex, Real>> translation_coords;  // ascending i
  std::vector<std::pair<RootIndex, Real>> shear_coords;        // lex (i,j)
};

// Inverts the chart near the identity: the translation part is read off
// exactly, the diagonal and shear parameters by Newton iteration on ball
// midpoints, then the product is re-verified in ball arithmetic against g
// within 2^-(precision/2).  Throws std::domain_error outside `chart_radius`
// and std::runtime_error when the iteration or verification fails.
ChartCoords decompose_near_identity(const AffineElement& g, double chart_radius = 0.1);
// Multiplies the chart factors back in the fixed order.
AffineElement compose_chart(const ChartCoords& c);

// True iff the chart decomposition succeeds with ‖a - e‖ < eps and every
// |t_alpha| < eps (definite comparisons; outside the chart radius -> false).
bool membership_U(const AffineElement& g, const Real& eps, double chart_radius = 0.1);
// Plain metric ball test ‖g - e‖ < eps.
bool membership_O(const AffineElement& g, const Real& eps);

// Displacement along one root subgroup that lands a grid point in the window
// eps1 < |N| < eps2: the grid point z = w + l*s is chosen with a sign pattern
// making t of the requested sign (s is the lattice point nearest the +-1
// pattern vector, l minimal), and t is the midpoint of the admissible
// parameter interval.  theta bounds the witness sup-norm with margin.
struct RootDisplacement {
  Real t;
  Real theta;
  Witness witness;  // the chosen source-grid point z (coordinates in g)
};
RootDisplacement root_displacement(const Grid& g, const RootIndex& alpha, const Real& eps1,
                                   const Real& eps2, int sign);

}  // namespace gridwit
