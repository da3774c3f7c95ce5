#pragma once

#include <optional>
#include <vector>

#include "gridwit/roots.hpp"

namespace gridwit {

// Diagonal flow a_t = diag(exp(t * direction_i)); the direction must sum to
// zero so the flow stays unit-determinant.
struct FlowSpec {
  std::vector<double> direction;
  double t_max = 50.0;
  double base_step = 0.0;  // 0 = derive from the target radius
};

// Result of testing whether two unimodular lattices are related by a chart
// element of size < eps.  A verified membership carries the unimodular basis
// change gamma with B_x * gamma = g * B_0 and the certified max chart
// coordinate of g.  A negative answer is a semi-decision: no_within_search
// reports that the candidate search was exhausted without a certificate.
struct MembershipResult {
  bool member = false;
  std::optional<ZMat> gamma;
  std::optional<Real> chart_max;
  double chart_dist = 0;  // double estimate of the best chart distance seen
  bool no_within_search = false;
};

MembershipResult lattice_neighborhood_member(const Lattice& x, const Lattice& x0, double eps,
                                             int per_column = 3);

struct HittingRecord {
  bool hit = false;
  double t_hit = 0;
  double eps = 0;          // annulus outer radius t_max^(-beta)
  ZMat gamma;              // certificate at the hit
  double chart_coord = 0;  // verified max chart coordinate, in [eps/2, eps)
  long samples = 0;
  std::vector<double> u;   // horospherical parameter when applicable
};

// Scans a_t * x_start for the first verified visit to the annulus
// U_eps \ U_(eps/2) around x0, with eps = t_max^(-beta).  Steps adapt to the
// estimated chart distance but stay below (eps/4)/Lipschitz near the target
// so the annulus cannot be stepped over.
HittingRecord first_hitting(const Lattice& x_start, const Lattice& x0, const FlowSpec& flow,
                            double beta);

// Same scan started from u * x for every u in the grid, where u is the
// expanding horospherical element applying the shears x_1 += u_i * x_i.
std::vector<HittingRecord> horospherical_hitting(const Lattice& x, const Lattice& x0,
                                                 const std::vector<std::vector<double>>& u_grid,
                                                 const FlowSpec& flow, double beta);

struct AverageRow {
  double t = 0;
  double mean = 0;
  double variance = 0;
};

// Monte-Carlo variance of the time average A_T(f) along the flow, for f a
// smoothed chart-box indicator around x0 of radius box_eps.  Sample lattices
// are Gaussian matrices scaled to |det| = 1 (not Haar on the quotient; this
// is a diagnostic estimate, all arithmetic in doubles).
std::vector<AverageRow> orbit_average_probe(const Lattice& x0, const std::vector<double>& direction,
                                            double box_eps, double smoothing,
                                            const std::vector<double>& t_values, int samples,
                                            unsigned long seed);

}  // namespace gridwit
