#pragma once

#include "gridwit/orbit.hpp"

namespace gridwit {

// Two positive multiplicatively independent numbers with their logs.  The
// independence certificate records the exhaustive bound: no relation
// lambda1^m1 * lambda2^m2 = 1 with 0 < max(|m1|,|m2|) <= bound exists.
struct LogPair {
  Real lambda1;
  Real lambda2;
  Real a1;  // log lambda1
  Real a2;  // log lambda2
  long independence_bound = 0;
};

// Exact certificate for rational bases (prime-exponent comparison).
LogPair log_pair_rational(const mpq_class& l1, const mpq_class& l2, long bound = 20,
                          long prec = kDefaultPrecision);
// Certificate for two root-character values alpha(b1), alpha(b2) of units:
// ball separation first, with an exact field fallback (a relation would force
// two conjugates of a unit to coincide, i.e. a zero characteristic-polynomial
// discriminant).
LogPair log_pair_characters(const UnitStabilizer& b, const RootIndex& alpha, const ZVec& e1,
                            const ZVec& e2, long bound = 20, long prec = kDefaultPrecision);

// Nonzero (n1, n2) with |n1 a1 + n2 a2| <= 1/m, from continued-fraction
// convergents of a1/a2; max(|n1|,|n2|) <= C_m * m with C_m reported by the
// caller-facing invariant checks.
std::pair<long, long> small_log_combination(const LogPair& p, const Real& m);

struct PowerProduct {
  long l1 = 0;
  long l2 = 0;
  Real value;  // lambda1^l1 * lambda2^l2
  Real error;  // |value - t|
  Real bound;  // 4 q t / m, the calibrated guarantee
  Real rung;   // ladder spacing b in [q/m, 2q/m); 0 on the shortcut paths
  long ladder_steps = 0;
};

// Thrown when the exponent ladder would exceed |log t| * m^(eta_cap + 1).
class StepCapError : public std::runtime_error {
 public:
  StepCapError(double needed, double cap)
      : std::runtime_error("power-product exponents exceed the step cap (needed " +
                           std::to_string(needed) + ", cap " + std::to_string(cap) + ")"),
        needed(needed),
        cap(cap) {}
  double needed;
  double cap;
};

// s = lambda1^l1 lambda2^l2 with |s - t| <= 4 q t / m and q | l1, l2 (the
// exponent-q subgroup); the plain case is q = 1.
PowerProduct near_target_product(const LogPair& p, const Real& t, const Real& m, long q = 1,
                                 double eta_cap = 3.0);

// Smallest-relation report: the empirical exponent eta such that
// |m1 a1 + m2 a2| * max(|m1|,|m2|)^eta >= 1 over 0 < max|mi| <= bound.
double empirical_baker_exponent(const LogPair& p, long bound);

struct CharacterApprox {
  DiagElement b;
  ZVec exponents;   // on the parent stabilizer generators
  Real alpha_value; // alpha(b)
  Real error;       // |alpha(b) - t|
  Real bound;       // 4 q t / m
  LogPair pair;     // the certified pair used
};

// b in the subgroup with |alpha(b) - t| <= 4 q t / m where q is the subgroup
// index; the character pair is scanned from small generator products.
CharacterApprox character_approx(const SubgroupB1& b1, const RootIndex& alpha, const Real& t,
                                 const Real& m, double eta_cap = 3.0);

}  // namespace gridwit
