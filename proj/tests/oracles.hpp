#pragma once

// Independent reference computations used to cross-check library results.
// These deliberately avoid the library's own eigensolver and Born-rule
// plumbing where the point is to validate them.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "bellcert/qcore.hpp"
#include "bellcert/rng.hpp"

namespace oracles {

// For the state (|01>+|10>)/sqrt(2) and scaled x-z plane effects
// cA*P(thetaA) (x) cB*P(thetaB), the outcome probability is
// cA*cB*(1 - cos(thetaA + thetaB))/4.
inline double singlet_like_prob(double theta_a, double theta_b, double ca = 1.0, double cb = 1.0) {
  return ca * cb * (1.0 - std::cos(theta_a + theta_b)) / 4.0;
}

// Coefficients (e1..e4) of the characteristic polynomial
// z^4 - e1 z^3 + e2 z^2 - e3 z + e4 of a 4x4 Hermitian matrix, from
// power-sum traces via Newton's identities.
inline std::array<double, 4> quartic_char_coeffs(const bellcert::qcore::CMatrix& m) {
  if (m.rows() != 4 || m.cols() != 4) throw std::invalid_argument("oracle needs a 4x4 matrix");
  bellcert::qcore::CMatrix p = m;
  std::array<double, 5> power_sum{};  // power_sum[k] = tr(m^k)
  power_sum[1] = m.trace().real();
  for (int k = 2; k <= 4; ++k) {
    p = p * m;
    power_sum[static_cast<size_t>(k)] = p.trace().real();
  }
  const double e1 = power_sum[1];
  const double e2 = (e1 * power_sum[1] - power_sum[2]) / 2.0;
  const double e3 = (e2 * power_sum[1] - e1 * power_sum[2] + power_sum[3]) / 3.0;
  const double e4 = (e3 * power_sum[1] - e2 * power_sum[2] + e1 * power_sum[3] - power_sum[4]) / 4.0;
  return {e1, e2, e3, e4};
}

inline double quartic_char_eval(const std::array<double, 4>& e, double z) {
  return (((z - e[0]) * z + e[1]) * z - e[2]) * z + e[3];
}

// Eigenvalues of a 4x4 Hermitian matrix as the roots of its characteristic
// polynomial, found by Durand-Kerner iteration. Returned descending.
// Accuracy degrades to ~1e-8 at multiple roots.
inline std::vector<double> quartic_hermitian_eigenvalues(const bellcert::qcore::CMatrix& m) {
  using C = std::complex<double>;
  const auto e = quartic_char_coeffs(m);
  auto poly = [&](C z) { return (((z - e[0]) * z + e[1]) * z - e[2]) * z + e[3]; };
  std::array<C, 4> roots;
  const C seed(0.4, 0.9);
  C w = seed;
  for (auto& r : roots) {
    r = w;
    w *= seed;
  }
  for (int it = 0; it < 500; ++it) {
    double step = 0.0;
    for (size_t i = 0; i < 4; ++i) {
      C denom = 1.0;
      for (size_t j = 0; j < 4; ++j)
        if (j != i) denom *= roots[i] - roots[j];
      const C delta = poly(roots[i]) / denom;
      roots[i] -= delta;
      step = std::max(step, std::abs(delta));
    }
    if (step < 1e-14) break;
  }
  std::vector<double> out;
  for (const auto& r : roots) out.push_back(r.real());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

// Deterministic random Hermitian matrix with entries of magnitude ~1.
inline bellcert::qcore::CMatrix random_hermitian(int n, uint64_t seed, uint64_t stream) {
  bellcert::rng::Philox gen(seed, stream);
  bellcert::qcore::CMatrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g(i, j) = bellcert::qcore::Complex(gen.normal(), gen.normal());
  bellcert::qcore::CMatrix h = g;
  h += g.adjoint();
  h *= bellcert::qcore::Complex(0.5);
  return h;
}

}  // namespace oracles
