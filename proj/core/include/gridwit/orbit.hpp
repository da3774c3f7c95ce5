#pragma once

#include <optional>

#include "gridwit/field.hpp"
#include "gridwit/grid.hpp"
#include "gridwit/roots.hpp"

namespace gridwit {

// Unit of the order together with its coordinate action on the power-basis
// lattice and its archimedean data.
struct UnitGenerator {
  FieldElem elem;
  ZMat mult;        // integer matrix of multiplication by elem, det +1
  RVec embeddings;  // sigma_i(elem), positive balls
  RVec log_vector;  // log sigma_i(elem); coordinates sum to 0
};

// Rank d-1 group of totally positive units of the order, i.e. the stabilizer
// in the positive diagonal group of the embedded order lattice.
class UnitStabilizer {
 public:
  UnitStabilizer(TotallyRealField field, std::vector<UnitGenerator> gens,
                 bool fundamental_verified);

  const TotallyRealField& field() const { return field_; }
  const std::vector<UnitGenerator>& generators() const { return gens_; }
  int rank() const { return static_cast<int>(gens_.size()); }
  int dim() const { return field_.degree(); }
  // Rows = generator log vectors (rank x dim).
  const RMat& log_basis() const { return log_basis_; }
  // True when the generated group was certified to be the full totally
  // positive unit group of the order.
  bool fundamental_verified() const { return fundamental_; }

  // Exact unit prod_k gens[k]^e_k and its integer matrix.
  FieldElem unit_elem(const ZVec& exponents) const;
  ZMat unit_matrix(const ZVec& exponents) const;
  // diag(sigma_i(unit_elem(e))) as a positive unit-determinant diagonal.
  DiagElement diag_image(const ZVec& exponents, long prec = kDefaultPrecision) const;
  // Box bound on the covering radius of the log lattice in sup norm:
  // half the sum of the row sup norms.
  Real covering_radius_bound() const;

 private:
  TotallyRealField field_;
  std::vector<UnitGenerator> gens_;
  RMat log_basis_;
  bool fundamental_;
};

// Compact orbit of the positive diagonal group: the unimodular lattice
// spanned by the scaled embeddings of the order (basis column j is
// |disc|^(-1/(2d)) * (theta_i^j)_i) plus its unit stabilizer.
struct CompactPoint {
  Lattice lattice;
  UnitStabilizer stabilizer;
};

// Builds the lattice and searches coordinate boxes for units, certifying
// fundamentality by a regulator bound in the cubic case and passing to the
// totally positive subgroup by an exact sign-character computation.
CompactPoint build_compact_point(const TotallyRealField& field, long prec = kDefaultPrecision);

// Basis coordinates z/q, z in {0,...,q-1}^d, of the q-torsion points of the
// torus R^d / lattice, in lexicographic order (q^d vectors).
std::vector<QVec> q_rational_points(int d, long q);

// Finite-index subgroup of a stabilizer: the exponent vectors (on the parent
// generators) fixing a q-torsion point.
struct SubgroupB1 {
  UnitStabilizer parent;
  ZMat exponent_lattice;  // row HNF, rank x rank
  mpz_class index;        // = orbit size of the torsion point, <= q^d
  long q = 1;

  // Covering-radius box bound of the sublattice's log lattice.
  Real covering_radius_bound() const;
};

// Orbit-stabilizer computation on (Z/q)^d for the abelian action of the
// generator matrices; point_coords must have q * point_coords integral.
SubgroupB1 stab_subgroup(const UnitStabilizer& b, const QVec& point_coords, long q);

// Best sup-norm approximation of log a by the log image of a subgroup.
struct ApproxResult {
  DiagElement b;
  ZVec generator_exponents;  // on the parent generators
  Real log_distance;         // ||log a - log b||_inf
};

ApproxResult approximate_in_subgroup(const SubgroupB1& sub, const DiagElement& a);
ApproxResult approximate_in_stabilizer(const UnitStabilizer& b, const DiagElement& a);

// First q in [2, q_max] with ||q w - z||_inf < c * q^(1-k) for some lattice
// point z.  Case 1: no such q; case 2: first violation at q <= L;
// case 3: first violation beyond L.
struct DiophantineResult {
  int case_label = 1;
  std::optional<long> q;  // violating q, or (case 1) the q of smallest margin
  ZVec coeffs;            // lattice coordinates of the nearest vector at q
  Real distance;          // ||q w - z||_inf at q
  Real threshold;         // c * q^(1-k)
};

DiophantineResult diophantine_test(const RVec& w, const Lattice& x0, const Real& k, const Real& c,
                                   long q_max, long L = 100);

// Monte-Carlo-free density probe of the stabilizer orbit of a rational point
// on the coordinate torus [0,1)^d: enumerate all units with operator norm
// (max diagonal entry) <= norm_bound, push the point around exactly, then
// measure max-over-mesh-cells of the wrapped sup distance to the orbit.
struct DensityProbeResult {
  double covering_estimate = 0;
  long orbit_size = 0;
};

DensityProbeResult fiber_density_probe(const UnitStabilizer& b, const QVec& point_coords,
                                       const Real& norm_bound, int mesh, long cap = 2000000);

}  // namespace gridwit
