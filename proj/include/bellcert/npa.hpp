#pragma once

// Moment-matrix relaxations certifying upper bounds on Bell functionals.
// Measurements are treated as projective (dilation argument) with the last
// outcome of every setting eliminated through completeness, so a word is a
// product of the remaining outcome projectors. The moment matrix over all
// words up to the level's degree is positive semidefinite; entries that
// canonicalize to the same word share one scalar variable and the relaxation
// enters the solver through its dual, whose minimum value certifies the
// bound from above.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bellcert/scenarios.hpp"
#include "bellcert/sdp.hpp"

namespace bellcert::npa {

struct Symbol {
  int party;    // 0 Alice, 1 Bob
  int setting;
  int outcome;  // < outcome count - 1 (last outcome eliminated)

  auto operator<=>(const Symbol&) const = default;
};

// Canonical operator word: Alice symbols before Bob symbols (parties
// commute), adjacent idempotence collapsed, same-setting cross-outcome
// adjacency annihilates to the zero monomial.
class Monomial {
public:
  Monomial() = default;  // identity
  static Monomial zero();

  bool is_zero() const { return zero_; }
  bool is_identity() const { return !zero_ && word_.empty(); }
  const std::vector<Symbol>& word() const { return word_; }
  int degree() const { return static_cast<int>(word_.size()); }

  Monomial adjoint() const;  // canonical form of the reversed word

  friend Monomial operator*(const Monomial& a, const Monomial& b);
  auto operator<=>(const Monomial&) const = default;

  friend Monomial canonicalize(std::vector<Symbol> word);

private:
  bool zero_ = false;
  std::vector<Symbol> word_;
};

Monomial canonicalize(std::vector<Symbol> word);

// degree in {1, 2, 3}; plus_ab augments degree 1 with all Alice*Bob products.
struct Level {
  int degree = 2;
  bool plus_ab = false;

  static Level parse(const std::string& text);  // "1", "2", "3", "1+AB"
  std::string to_string() const;
  void validate() const;
};

struct Relaxation {
  sdp::SdpProblem problem;   // minimize form; solved primal value = upper bound
  std::vector<Monomial> basis;
  std::vector<Monomial> class_reps;                          // one per variable
  std::vector<std::vector<std::pair<int, int>>> class_cells; // cells i <= j
  std::vector<std::pair<int, int>> unit_cells;               // fixed to 1
  double objective_constant = 0.0;

  int basis_size() const { return static_cast<int>(basis.size()); }
  int variable_count() const { return static_cast<int>(class_reps.size()); }
};

// Basis larger than this throws (the dense solver would not finish).
inline constexpr int kBasisLimit = 1200;

Relaxation build_relaxation(const scenarios::BellFunctional& f, Level level);

// Relabeling of settings and outcomes that leaves the functional's term
// tensor invariant while mapping each setting's eliminated outcome to the
// image setting's eliminated outcome, so it acts as a permutation of the
// moment basis. Entry [x][a] is the outcome image at the image setting.
struct PureRelabeling {
  std::vector<int> alice_settings;
  std::vector<std::vector<int>> alice_outcomes;
  std::vector<int> bob_settings;
  std::vector<std::vector<int>> bob_outcomes;

  bool trivial() const;
};

// First nontrivial involution among the pure relabelings, if any. The search
// space is capped; oversized scenarios report no symmetry.
std::optional<PureRelabeling> find_pure_involution(const scenarios::BellFunctional& f);

struct BoundResult {
  double upper_bound = 0.0;
  int basis_size = 0;          // full moment basis, even when reduced
  int variable_count = 0;      // constraints actually handed to the solver
  bool symmetry_reduced = false;
  sdp::SdpSolution solution;   // in reduced coordinates when symmetry_reduced
};

// Builds and solves; throws when the solver fails to converge. When the
// functional admits a pure involution and exploit_symmetry is set, the
// moment matrix is block-diagonalized in the involution's eigenbasis, which
// halves the constraint count at an unchanged optimum.
BoundResult upper_bound(const scenarios::BellFunctional& f, Level level,
                        const sdp::Options& options = {}, bool exploit_symmetry = true);

// Certified bound over every way of restricting one setting to a fixed
// number of outcomes: all drop subsets are enumerated, relabeling-equivalent
// restrictions are solved once.
struct RestrictedBoundClass {
  std::vector<std::vector<int>> kept_outcome_sets;  // members of the class
  double bound = 0.0;
  int basis_size = 0;
};

struct RestrictedBounds {
  double upper_bound = 0.0;  // max over classes
  std::vector<RestrictedBoundClass> classes;
};

RestrictedBounds restricted_upper_bound(const scenarios::BellFunctional& f,
                                        scenarios::Party party, int setting,
                                        int kept_outcomes, Level level,
                                        const sdp::Options& options = {},
                                        bool exploit_symmetry = true);

// Moment matrix of an explicit strategy over the relaxation's basis; used to
// validate the builder: the result is PSD, constant cells equal 1 and cells
// of one class agree (for projective strategies).
qcore::CMatrix strategy_moment_matrix(const Relaxation& rel,
                                      const scenarios::QuantumStrategy& strategy);

}  // namespace bellcert::npa
