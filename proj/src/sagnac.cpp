#include "bellcert/sagnac.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bellcert::sagnac {

namespace {

constexpr double kDegree = std::numbers::pi / 180.0;
constexpr double kReachableResidual = 1e-2;

// Copies a 2x2 source into dst at the given row/column offset.
void place_block(qcore::CMatrix& dst, const qcore::CMatrix& src, int r0, int c0) {
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) dst(r0 + r, c0 + c) = src(r, c);
}

qcore::CMatrix take_block(const qcore::CMatrix& src, int r0, int c0) {
  qcore::CMatrix out(2, 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) out(r, c) = src(r0 + r, c0 + c);
  return out;
}

}  // namespace

qcore::CMatrix u_hwp(double gamma_deg) {
  const double c = std::cos(2.0 * gamma_deg * kDegree);
  const double s = std::sin(2.0 * gamma_deg * kDegree);
  return qcore::CMatrix::from_rows({{c, s}, {s, -c}});
}

qcore::CMatrix u_pbs() {
  qcore::CMatrix m(4, 4);
  m(0, 0) = 1.0;
  m(2, 2) = 1.0;
  m(3, 1) = qcore::Complex(0.0, 1.0);
  m(1, 3) = qcore::Complex(0.0, 1.0);
  return m;
}

qcore::CMatrix sagnac_unitary(const SagnacConfig& cfg) {
  qcore::CMatrix plates(4, 4);
  place_block(plates, u_hwp(cfg.gamma_t), 0, 0);
  place_block(plates, u_hwp(cfg.gamma_r), 2, 2);
  const qcore::CMatrix pbs = u_pbs();
  return pbs * plates * pbs;
}

KrausSet kraus_operators(const SagnacConfig& cfg) {
  const qcore::CMatrix us = sagnac_unitary(cfg);
  const qcore::CMatrix mode_a = take_block(us, 0, 0);
  const qcore::CMatrix mode_b = take_block(us, 2, 0);
  const qcore::CMatrix analyzed = u_hwp(cfg.gamma_o) * mode_a;
  KrausSet k;
  k.a0 = qcore::CMatrix(2, 2);
  k.a1 = qcore::CMatrix(2, 2);
  for (int c = 0; c < 2; ++c) {
    k.a0(0, c) = analyzed(0, c);
    k.a1(1, c) = analyzed(1, c);
  }
  k.a2 = mode_b;
  return k;
}

qcore::Povm implemented_povm(const SagnacConfig& cfg) {
  const KrausSet k = kraus_operators(cfg);
  return qcore::Povm(2, {k.a0.adjoint() * k.a0, k.a1.adjoint() * k.a1, k.a2.adjoint() * k.a2});
}

double povm_distance(const qcore::Povm& x, const qcore::Povm& y) {
  if (x.dim() != y.dim() || x.outcomes() != y.outcomes())
    throw std::invalid_argument("povm shapes differ");
  double d = 0.0;
  for (int k = 0; k < x.outcomes(); ++k) d = std::max(d, (x.effect(k) - y.effect(k)).max_abs());
  return d;
}

AngleFit fit_transmitted_angle(const qcore::Povm& target, const SagnacConfig& base) {
  if (target.dim() != 2 || target.outcomes() != 3)
    throw std::invalid_argument("target must be a three-outcome qubit POVM");
  auto residual_at = [&](double gamma_t) {
    SagnacConfig cfg = base;
    cfg.gamma_t = gamma_t;
    return povm_distance(implemented_povm(cfg), target);
  };

  double best_angle = 0.0;
  double best = residual_at(0.0);
  for (int i = 1; i < 18000; ++i) {
    const double g = 0.01 * i;
    const double r = residual_at(g);
    if (r < best) {
      best = r;
      best_angle = g;
    }
  }

  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best_angle - 0.01;
  double hi = best_angle + 0.01;
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = residual_at(x1);
  double f2 = residual_at(x2);
  while (hi - lo > 1e-10) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = residual_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = residual_at(x2);
    }
  }

  AngleFit fit;
  fit.gamma_t = 0.5 * (lo + hi);
  if (fit.gamma_t < 0.0) fit.gamma_t += 180.0;
  fit.residual = residual_at(fit.gamma_t);
  fit.reachable = fit.residual <= kReachableResidual;
  return fit;
}

}  // namespace bellcert::sagnac
