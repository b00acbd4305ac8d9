#pragma once

// Bipartite Bell scenarios: behaviors P(ab|xy), sparse Bell functionals, the
// functional catalog used throughout, ideal quantum strategies, classical
// bounds by enumeration, visibility algebra and POVM reducibility.

#include <optional>
#include <string>
#include <vector>

#include "bellcert/qcore.hpp"
#include "json.hpp"

namespace bellcert::scenarios {

using Json = nlohmann::ordered_json;

enum class Party { alice, bob };

struct Scenario {
  std::vector<int> alice_outcomes;  // outcome count per Alice setting
  std::vector<int> bob_outcomes;    // outcome count per Bob setting

  int alice_settings() const { return static_cast<int>(alice_outcomes.size()); }
  int bob_settings() const { return static_cast<int>(bob_outcomes.size()); }
  void validate() const;  // every count >= 2
  bool operator==(const Scenario&) const = default;
};

// Joint conditional distribution table. Entries are laid out per setting
// pair in lexicographic (x, y) order, row-major (a, b) within each block;
// sigma (standard errors) and trials (per-setting sample sizes, indexed
// x*bob_settings+y) are optional statistical annotations.
class Behavior {
public:
  explicit Behavior(Scenario scenario);
  static Behavior uniform(const Scenario& scenario);

  const Scenario& scenario() const { return scenario_; }
  double p(int a, int b, int x, int y) const { return table_[index(a, b, x, y)]; }
  void set_p(int a, int b, int x, int y, double v) { table_[index(a, b, x, y)] = v; }

  bool has_sigma() const { return sigma_.has_value(); }
  double sigma(int a, int b, int x, int y) const;
  void set_sigma(int a, int b, int x, int y, double v);

  bool has_trials() const { return trials_.has_value(); }
  double trials(int x, int y) const;
  void set_trials(int x, int y, double n);

  const std::vector<double>& table() const { return table_; }
  size_t index(int a, int b, int x, int y) const;

  // Invariants: entries in [-1e-9, 1+1e-9], every setting block sums to 1
  // within 1e-8.
  void validate() const;

private:
  Scenario scenario_;
  std::vector<size_t> offsets_;  // block start per (x, y)
  std::vector<double> table_;
  std::optional<std::vector<double>> sigma_;
  std::optional<std::vector<double>> trials_;
};

struct FunctionalTerm {
  int a, b, x, y;
  double coeff;
};

struct KnownBounds {
  std::optional<double> classical;
  std::optional<double> binary_quantum;
  std::optional<double> quantum_max;
};

struct BellFunctional {
  Scenario scenario;
  std::vector<FunctionalTerm> terms;
  std::string name;
  KnownBounds known_bounds;

  void validate() const;  // term indices within scenario cardinalities
};

struct QuantumStrategy {
  qcore::DensityOp state;
  int dim_a;
  int dim_b;
  std::vector<qcore::Povm> alice_povms;
  std::vector<qcore::Povm> bob_povms;

  QuantumStrategy(qcore::DensityOp state, int dim_a, int dim_b,
                  std::vector<qcore::Povm> alice_povms, std::vector<qcore::Povm> bob_povms);
  Scenario scenario() const;
};

// names: I, chain3, chsh_correlator_as_probabilities, beta_el, L
BellFunctional functional_catalog(const std::string& name);

struct EvalResult {
  double value;
  std::optional<double> sigma;
};

// Sum of coeff * P over the functional's terms. When the behavior carries
// trials, sigma is propagated with the per-setting multinomial covariance
// (settings independent); with only per-entry sigma, the diagonal
// approximation sqrt(sum c^2 sigma^2) is used.
EvalResult evaluate(const BellFunctional& f, const Behavior& p);

Behavior behavior_from_strategy(const QuantumStrategy& s);

// Removes all terms that reference the dropped outcome, decrements the
// setting's cardinality and renumbers the remaining outcomes densely.
BellFunctional restrict_outcome(const BellFunctional& f, Party party, int setting,
                                int dropped_outcome);

// Exact maximum over deterministic local assignments.
double classical_bound(const BellFunctional& f);

// names: I_optimal (singlet-like state + trine), chsh_optimal
QuantumStrategy ideal_strategy(const std::string& name);

// Behavior of v*rho + (1-v)*I/d with the strategy's measurements.
Behavior noisy_behavior(const QuantumStrategy& s, double visibility);

// (restricted_bound - noise_value) / (max_quantum - noise_value)
double visibility_threshold(double max_quantum, double restricted_bound, double noise_value);

struct NoSignalingReport {
  double max_discrepancy;
  std::string worst;  // human-readable locus of the worst marginal mismatch
  bool within(double tol) const { return max_discrepancy <= tol; }
};
NoSignalingReport check_no_signaling(const Behavior& p);

// True if some relabeling (setting permutations preserving outcome counts,
// per-setting outcome permutations, parties fixed) maps f's term tensor
// exactly onto g's.
bool functionals_equivalent(const BellFunctional& f, const BellFunctional& g);

// Reducibility of an n-outcome POVM into a convex mixture of POVMs that each
// skip one outcome: E_k = sum_j p_j F_k^(j) with F_j^(j) = 0.
struct ReducibilityDecomposition {
  std::vector<double> weights;                              // p_j, sums to 1
  std::vector<std::optional<qcore::Povm>> sub_povms;        // present where p_j > 0
};

enum class ReducibilityVerdict { reducible, irreducible, inconclusive };

struct ReducibilityResult {
  ReducibilityVerdict verdict;
  std::optional<ReducibilityDecomposition> decomposition;  // when reducible
  double reconstruction_error = 0.0;                       // when reducible
  double infeasibility_margin = 0.0;                       // when irreducible
};

ReducibilityResult decompose_into_fewer_outcomes(const qcore::Povm& m);

// JSON round-trip (schema documented in the README).
Json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j);
Json functional_to_json(const BellFunctional& f);
BellFunctional functional_from_json(const Json& j);
Json behavior_to_json(const Behavior& b);
Behavior behavior_from_json(const Json& j);

}  // namespace bellcert::scenarios
