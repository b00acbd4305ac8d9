#pragma once

// Self-contained dense semidefinite programming. Problems are posed in the
// standard primal form over a block-diagonal Hermitian matrix variable Z:
//
//   optimize  <C, Z>  subject to  <A_k, Z> = b_k,  Z >= 0 (PSD),
//
// solved by a homogeneous self-dual interior-point method with Nesterov-Todd
// scaling and a Mehrotra predictor-corrector, so genuine infeasibility is
// detected via a Farkas certificate instead of non-convergence. Hermitian
// blocks with complex entries are handled through the real symmetric
// embedding [[Re, -Im], [Im, Re]]; blocks whose data is purely real are kept
// at their original dimension.
//
// An LMI "maximize c^T x with A_0 + sum x_v A_v >= 0" enters through its
// dual: minimize <A_0, Z> subject to <A_v, Z> = -c_v; the multiplier vector
// y of the solution then carries x = -y.

#include <iosfwd>
#include <string>
#include <vector>

#include "bellcert/qcore.hpp"

namespace bellcert::sdp {

enum class Sense { maximize, minimize };
enum class Status { optimal, infeasible, numerical_failure };

// One entry of a Hermitian block matrix; (row, col) with row <= col, the
// mirrored entry is implied by hermiticity. Diagonal entries must be real.
struct Entry {
  int block;
  int row;
  int col;
  qcore::Complex value;
};

struct Constraint {
  std::vector<Entry> matrix;  // Hermitian A_k, sparse
  double rhs;
};

struct SdpProblem {
  std::vector<int> block_dims;
  Sense sense = Sense::minimize;
  std::vector<Entry> objective;  // Hermitian C, sparse
  double objective_constant = 0.0;
  std::vector<Constraint> constraints;

  void validate() const;
};

struct Options {
  double tol = 1e-8;           // relative gap and feasibility target
  int max_iterations = 200;
  bool collect_trace = false;  // record per-iteration diagnostics
  // Dependent equality rows are detected and pruned when the constraint
  // count is at most this; larger problems are trusted to be full rank.
  int presolve_limit = 2000;
};

struct IterationRecord {
  int iter;
  double mu;        // complementarity measure, nonnegative by construction
  double step;
  double rel_gap;
  double primal_infeas;
  double dual_infeas;
};

struct SdpSolution {
  Status status = Status::numerical_failure;
  double primal_value = 0.0;  // from the matrix iterate Z
  double dual_value = 0.0;    // from the multipliers y
  std::vector<qcore::CMatrix> z_blocks;
  std::vector<double> y;      // multipliers; on infeasible, the Farkas certificate
  std::vector<qcore::CMatrix> slack_blocks;
  int iterations = 0;
  double rel_gap = 0.0;
  double primal_infeas = 0.0;
  double dual_infeas = 0.0;
  // On infeasible: b^T y / ||y||_2 for the certificate y with
  // sum_k y_k A_k <= 0 (minimize-sense convention).
  double infeasibility_margin = 0.0;
  std::vector<IterationRecord> trace;
  std::string detail;
};

SdpSolution solve(const SdpProblem& p, const Options& opt = {});

// Feasibility query: the objective is ignored (treated as zero); status
// optimal means a feasible point was found.
SdpSolution feasibility(const SdpProblem& p, const Options& opt = {});

// Plain-text export in the sparse SDPA format (complex blocks are written as
// their real symmetric embedding); for external cross-checking.
void export_sdpa(const SdpProblem& p, std::ostream& os);

}  // namespace bellcert::sdp
