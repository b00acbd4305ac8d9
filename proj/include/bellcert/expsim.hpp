#pragma once

// Monte Carlo model of the coincidence-counting experiment and the
// statistical arithmetic applied to its outcomes: Poissonian per-setting
// totals split over outcome pairs, behavior estimation with multinomial
// errors, Gaussian significance of a bound violation, and the
// CHSH-self-testing chain from violation deficit to a mixed binary bound.

#include <cstdint>
#include <string>
#include <vector>

#include "bellcert/scenarios.hpp"

namespace bellcert::expsim {

using Json = nlohmann::ordered_json;

// Isotropic (visibility) noise plus detection efficiency and a uniform
// per-coincidence background rate. Fair sampling is assumed: efficiency only
// scales the detected totals, never the outcome distribution.
struct NoiseModel {
  double visibility = 1.0;
  double detector_efficiency = 1.0;
  double accidental_prob = 0.0;

  void validate() const;  // fields in [0,1], accidental_prob <= 0.01
};

// Coincidence counts per setting pair; counts[x*bob_settings+y] is the
// row-major (a, b) table for that pair.
struct CountsRecord {
  scenarios::Scenario scenario;
  std::vector<std::vector<int64_t>> counts;
  double expected_pairs = 0.0;  // source pairs per setting before efficiency
  uint64_t seed = 0;
};

struct SignificanceReport {
  double value = 0.0;
  double sigma = 0.0;
  double bound = 0.0;
  double z = 0.0;  // (value - bound) / sigma
  double p = 0.0;  // one-sided Gaussian upper tail
};

struct ChshReport {
  double s_value = 0.0;
  double violation = 0.0;  // S - 2
  double epsilon = 0.0;    // (2*sqrt(2) - 2) - violation
};

// Detected totals are Poisson(efficiency^2 * pairs_per_setting) per setting,
// split over outcome pairs by the strategy's behavior at the given
// visibility; accidentals add Poisson(accidental_prob * total) spread
// uniformly over the outcome pairs. Setting (x, y) draws from stream
// x * bob_settings + y of the seed, so results do not depend on execution
// order.
CountsRecord simulate_counts(const scenarios::QuantumStrategy& s, const NoiseModel& noise,
                             double pairs_per_setting, uint64_t seed);

// Per-setting relative frequencies with multinomial standard errors
// sqrt(p(1-p)/N); the per-setting totals are stored as trials so that
// evaluate can propagate the full multinomial covariance.
scenarios::Behavior estimate_behavior(const CountsRecord& c);

SignificanceReport significance(double value, double sigma, double bound);

// S = E_00 + E_01 + E_10 - E_11 with E_xy = sum (-1)^(a+b) P(ab|xy);
// requires a two-setting binary scenario on both sides.
ChshReport chsh_violation(const scenarios::Behavior& p);

// max(0, 1 - 2.2 * epsilon): singlet fidelity certified by a CHSH value
// 2*sqrt(2) - epsilon.
double fidelity_lower_bound(double epsilon);

// fidelity * (binary quantum bound) + (1 - fidelity) * (quantum maximum)
// for the three-outcome functional: the cap obeyed by any strategy whose
// state is a fidelity-weighted mixture.
double mixed_binary_bound(double fidelity);

// CSV columns: x, y, a, b, count.
std::string counts_to_csv(const CountsRecord& c);
Json counts_to_json(const CountsRecord& c);
CountsRecord counts_from_json(const Json& j);
Json significance_to_json(const SignificanceReport& r);

}  // namespace bellcert::expsim
