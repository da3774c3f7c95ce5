#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridwit/baker.hpp"
#include "gridwit/orbit.hpp"
#include "gridwit/recurrence.hpp"
#include "gridwit/roots.hpp"

namespace gridwit {

// Rate of the form log_(s)(|x|)^delta * |x|^power, where log_(s) is the s-th
// iterate of max(1, log).  log_level = 0 drops the log factor; power = 0
// drops the power factor; both dropped gives the constant rate 1.
struct RateFunction {
  int log_level = 0;
  double delta = 1.0;
  double power = 0.0;

  // "1", "log<s>", "log<s>^<delta>", "pow<p>", or products like "log2^0.5*pow1".
  static RateFunction parse(const std::string& spec);
  std::string str() const;
  bool unbounded() const { return power > 0 || (log_level > 0 && delta > 0); }

  double eval(double x) const;
  Real eval_ball(const Real& x) const;
};

// Scalar input to direct_scan: the ball plus, when available, the exact
// rational it came from (exact inputs get exact zero-hit detection).
struct ScanInput {
  Real value;
  std::optional<mpq_class> exact;

  static ScanInput of_rational(const mpq_class& q, long prec = kDefaultPrecision);
  static ScanInput of_real(Real r);
};

struct ScanRecord {
  long q = 0;
  Real value;  // |q| <q u - alpha> <q v - beta>
  Real rated;  // value * rate(|q|)
  bool zero_hit = false;
  bool ambiguous = false;  // comparison stayed undecided after escalation
};

struct ScanResult {
  std::vector<ScanRecord> minima;  // strictly decreasing rated values
  long zero_hit_count = 0;
  std::vector<long> zero_hit_qs;  // first few, by |q| then positive first
  long ambiguous_count = 0;
};

// Running minima of rate(|q|) * |q| <q u - alpha> <q v - beta> over the
// candidates q = 1, -1, 2, -2, ..., +-Q.  Exact integer hits are counted and
// excluded from the positive minima.  Workers partition the q-range; the
// merge is deterministic, so the result does not depend on `workers`.
ScanResult direct_scan(const ScanInput& u, const ScanInput& v, const ScanInput& alpha,
                       const ScanInput& beta, long q_max, const RateFunction& rate,
                       int workers = 1);

struct CertifyAttempt {
  double t = 0;
  long mesh_points = 0;
  bool found = false;
};

struct CertifyResult {
  std::optional<Witness> witness;  // on y, coordinates in y's basis
  std::optional<DiagElement> a;    // mesh element that produced it
  double t_success = 0;
  std::vector<CertifyAttempt> attempts;
};

// For each T in t_list, walks a log-uniform mesh of size a_mesh^(d-1) on the
// trace-zero simplex {max |log a_i| <= log T} and searches a * y for a grid
// point v with ||v|| < T and 0 < |N(v)| < 1/h(T^d).  A find is pulled back to
// y and re-verified there: ||v|| <= T^d and 0 < |N(v)| < 1/h(||v||), both
// ball-definite.  No find is not an error (the search is a semi-decision).
CertifyResult certify_wr(const Grid& y, const std::vector<double>& t_list, const RateFunction& h,
                         int a_mesh, long cap = 2000000);

// Partition of all_roots(d) by the weight of a: Phi+ holds the roots with
// alpha(a) > 1, Phi- those with alpha(a) < 1.  Throws std::invalid_argument
// naming the first root whose weight is 1 (or undecided against 1).
std::pair<std::vector<RootIndex>, std::vector<RootIndex>> phi_split(const DiagElement& a);

// Extreme-point selection: j indexes an extreme point of the convex hull of
// the L-normalized vectors; s1 strictly separates it (s1(v_j) > 0 > s1(v_i)),
// s2 supports it (s2(v_j) = 0 > s2(v_i)).  All signs are verified exactly;
// margins are the smallest |s(v_i / L(v_i))| over the strict side.
struct ExtremeFunctional {
  int j = 0;
  QVec s1;
  QVec s2;
  mpq_class margin1;
  mpq_class margin2;
};

// Requires L(v_i) > 0 for all i.  Throws std::invalid_argument when all
// vectors coincide after normalization and std::domain_error when every
// candidate extreme point is duplicated in the input.
ExtremeFunctional extreme_point_functional(const std::vector<QVec>& vectors, const QVec& l);

enum class CaseKind { Diophantine = 1, TorsionSmall = 2, TorsionLarge = 3 };

struct CaseTag {
  CaseKind kind = CaseKind::Diophantine;
  long q = 0;  // violating period for the torsion cases
  ZVec z;      // lattice coordinates of the torsion point at q
  double k_used = 0;
  long l_used = 0;
};

struct TraceEntry {
  std::string stage;
  std::string detail;
};

struct GuidedParams {
  double k = 8;                 // diophantine exponent
  long l = 4;                   // small-period cutoff
  double beta = 1.0;            // annulus radius exponent: eps = t_max^-beta
  double t_max = 10.0;          // flow horizon
  double diophantine_c = 0.25;  // margin constant of the torsion test
  long q_max = 64;              // torsion search range
  double m_baker = 200;         // character approximation quality
  int mesh = 2;                 // exponent box radius (case 1 and the regular scan)
  double eps1 = 0.05;           // target window floor
  double eps2 = 0.5;            // target window ceiling
  double zeta = 0.5;            // gap-ladder shrink factor
  double delta = 0.5;           // suppression exponent: push below 2^(-delta k)
  long cap = 2000000;           // enumeration cap
  double exponent_budget = 60;  // max |log entry| allowed for the closing element
  bool adapt_window = true;     // also try small-exponent closing elements
  std::vector<double> flow_direction;  // empty = generic default
};

struct GuidedResult {
  bool found = false;
  std::optional<Witness> witness;  // coordinates in final_grid's basis
  std::optional<Grid> final_grid;  // a_final * y, basis reduced
  std::optional<DiagElement> a_final;
  double theta = 0;  // achieved window: ||v|| < theta, eps_lo < |N(v)| < eps_hi
  double eps_lo = 0;
  double eps_hi = 0;
  CaseTag tag;
  std::vector<TraceEntry> trace;
};

// Full pipeline: flow y's lattice into the annulus around x0 (first_hitting),
// read off the fiber shift w, classify it (diophantine_test), then close with
// the case-specific construction: stabilizer-orbit box scan (case 1), the
// contraction / extreme-point / root-displacement / character-approximation
// chain (case 2), or a diag(e^t, e^-t, 1, ...) perturbation and one recursion
// (case 3).  Every returned witness is re-verified from integer coordinates
// on the actual grid a_final * y; a candidate that fails that verification is
// a hard logic_error, never a success.  No-find returns found = false with
// the trace attached.
GuidedResult guided_witness(const Grid& y, const CompactPoint& x0, const GuidedParams& params = {});

}  // namespace gridwit
