#pragma once

// Variational lower bounds on Bell functional values: alternating
// optimization of the state and the per-setting POVMs at fixed local
// dimensions. Each restart draws its own RNG stream, so results are
// reproducible regardless of scheduling.

#include <vector>

#include "bellcert/qcore.hpp"
#include "bellcert/scenarios.hpp"

namespace bellcert::seesaw {

struct SeesawConfig {
  int dim_a = 2;
  int dim_b = 2;
  int restarts = 50;
  int max_iters = 500;
  double tol = 1e-10;  // stop when the value improves by less than this
  uint64_t seed = 1;

  void validate() const;  // dims >= 2, restarts >= 1, tol > 0
};

struct RestartTrace {
  std::vector<double> values;  // value after each full sweep
  bool converged = false;
};

struct SeesawResult {
  double best_value = 0.0;
  int best_restart = 0;
  scenarios::QuantumStrategy best_strategy;
  std::vector<RestartTrace> restarts;
  bool all_converged = false;
};

// W = sum of coeff * E_{a|x} (x) F_{b|y}; its expectation on any state
// equals evaluate(f, behavior of that state with these POVMs).
qcore::CMatrix bell_operator(const scenarios::BellFunctional& f,
                             const std::vector<qcore::Povm>& alice_povms,
                             const std::vector<qcore::Povm>& bob_povms);

// Top eigenvector of W (deterministic under the spectral phase convention).
qcore::DensityOp optimize_state(const qcore::CMatrix& w);

// Effective operators for one party's setting: R_a collects the partial
// trace of the state against the other party's effects, weighted by the
// functional's coefficients. The optimal POVM maximizes sum_a Tr(E_a R_a).
std::vector<qcore::CMatrix> effective_operators(const scenarios::BellFunctional& f,
                                                const qcore::DensityOp& state, int dim_a,
                                                int dim_b,
                                                const std::vector<qcore::Povm>& other_povms,
                                                scenarios::Party party, int setting);

// Best POVM for fixed effective operators. Two outcomes use the spectral
// closed form (projector onto the nonnegative eigenspace of R0 - R1);
// more outcomes solve the linear SDP over the POVM polytope.
qcore::Povm optimize_measurement(const std::vector<qcore::CMatrix>& effective, int dim);

// Alternating ascent from random starts; best restart wins.
SeesawResult run(const scenarios::BellFunctional& f, const SeesawConfig& cfg);

}  // namespace bellcert::seesaw
