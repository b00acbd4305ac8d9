#pragma once

// Jones-calculus model of the two-path Sagnac polarimeter: half-wave-plate
// and polarizing-beam-splitter unitaries, the Kraus operators of the three
// output ports, the implemented three-outcome qubit POVM, and fitting of
// the transmitted-arm plate angle to a target POVM.

#include "bellcert/qcore.hpp"

namespace bellcert::sagnac {

// Plate fast-axis angles in degrees, interpreted modulo 180.
struct SagnacConfig {
  double gamma_r = 0.0;
  double gamma_t = 117.37;
  double gamma_o = 112.5;
};

// Jones matrix of a half-wave plate at angle g:
// cos(2g)(|H><H|-|V><V|) + sin(2g)(|H><V|+|V><H|).
// Real, Hermitian, unitary, determinant -1.
qcore::CMatrix u_hwp(double gamma_deg);

// Polarizing beam splitter on the {|a,H>, |a,V>, |b,H>, |b,V>} basis:
// H is transmitted within its path, V is reflected into the other path
// with phase i.
qcore::CMatrix u_pbs();

// U_PBS * (HWP(gamma_t) on path a, HWP(gamma_r) on path b) * U_PBS.
qcore::CMatrix sagnac_unitary(const SagnacConfig& cfg);

struct KrausSet {
  qcore::CMatrix a0, a1, a2;  // 2x2 each; sum of a_k^dag a_k = identity
};

// Output-port Kraus operators: outcomes 0 and 1 are the H and V ports of
// the final PBS after mode a passes HWP(gamma_o); outcome 2 is mode b.
KrausSet kraus_operators(const SagnacConfig& cfg);

// M_k = A_k^dag A_k as a three-outcome qubit POVM.
qcore::Povm implemented_povm(const SagnacConfig& cfg);

// Largest entrywise deviation between two POVMs of equal shape.
double povm_distance(const qcore::Povm& x, const qcore::Povm& y);

struct AngleFit {
  double gamma_t = 0.0;    // degrees in [0, 180)
  double residual = 0.0;   // povm_distance at the optimum
  bool reachable = false;  // residual <= 1e-2
};

// Minimizes povm_distance(implemented_povm, target) over gamma_t with the
// other angles taken from base: 0.01-degree grid scan over [0, 180), then
// golden-section refinement around the best cell.
AngleFit fit_transmitted_angle(const qcore::Povm& target, const SagnacConfig& base = {});

}  // namespace bellcert::sagnac
