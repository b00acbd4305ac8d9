#include "bellcert/sagnac.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "bellcert/rng.hpp"
#include "bellcert/scenarios.hpp"
#include "doctest.h"

using namespace bellcert;
using qcore::CMatrix;
using qcore::Complex;
using sagnac::SagnacConfig;

namespace {

constexpr double kRoot2Half = std::numbers::sqrt2 / 2.0;

// Independent 4x4 complex multiply, used as the composition oracle.
using Mat4 = std::array<std::array<Complex, 4>, 4>;

Mat4 to_mat4(const CMatrix& m) {
  Mat4 out{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out[static_cast<size_t>(r)][static_cast<size_t>(c)] = m(r, c);
  return out;
}

Mat4 mul4(const Mat4& a, const Mat4& b) {
  Mat4 out{};
  for (size_t r = 0; r < 4; ++r)
    for (size_t c = 0; c < 4; ++c)
      for (size_t k = 0; k < 4; ++k) out[r][c] += a[r][k] * b[k][c];
  return out;
}

double max_diff(const Mat4& a, const CMatrix& b) {
  double d = 0.0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      d = std::max(d, std::abs(a[static_cast<size_t>(r)][static_cast<size_t>(c)] - b(r, c)));
  return d;
}

double unitarity_defect(const CMatrix& u) {
  return (u.adjoint() * u - CMatrix::identity(u.rows())).max_abs();
}

CMatrix kraus_sum(const sagnac::KrausSet& k) {
  return k.a0.adjoint() * k.a0 + k.a1.adjoint() * k.a1 + k.a2.adjoint() * k.a2;
}

}  // namespace

TEST_CASE("half-wave plate at reference angles") {
  const CMatrix h0 = sagnac::u_hwp(0.0);
  CHECK(h0(0, 0) == Complex(1.0));
  CHECK(h0(1, 1) == Complex(-1.0));
  CHECK(h0(0, 1) == Complex(0.0));

  const CMatrix h45 = sagnac::u_hwp(45.0);
  CHECK(std::abs(h45(0, 1) - Complex(1.0)) < 1e-15);
  CHECK(std::abs(h45(1, 0) - Complex(1.0)) < 1e-15);
  CHECK(std::abs(h45(0, 0)) < 1e-15);

  const CMatrix ho = sagnac::u_hwp(112.5);
  CHECK(ho(0, 0).real() == doctest::Approx(-kRoot2Half).epsilon(1e-12));
  CHECK(ho(0, 1).real() == doctest::Approx(-kRoot2Half).epsilon(1e-12));
  CHECK(ho(1, 1).real() == doctest::Approx(kRoot2Half).epsilon(1e-12));
}

TEST_CASE("half-wave plate is a real symmetric reflection at any angle") {
  rng::Philox gen(5, 0);
  for (int i = 0; i < 100; ++i) {
    const double g = 180.0 * gen.uniform();
    const CMatrix h = sagnac::u_hwp(g);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) CHECK(h(r, c).imag() == 0.0);
    CHECK(h.hermiticity_defect() < 1e-15);
    CHECK(unitarity_defect(h) < 1e-14);
    const Complex det = h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
    CHECK(det.real() == doctest::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("polarizing beam splitter transmits H and reflects V with phase i") {
  const CMatrix p = sagnac::u_pbs();
  // Columns map |a,H>, |a,V>, |b,H>, |b,V>.
  CHECK(p(0, 0) == Complex(1.0));
  CHECK(p(3, 1) == Complex(0.0, 1.0));
  CHECK(p(2, 2) == Complex(1.0));
  CHECK(p(1, 3) == Complex(0.0, 1.0));
  CHECK(std::abs(p(1, 1)) + std::abs(p(2, 0)) + std::abs(p(3, 3)) == 0.0);
  CHECK(unitarity_defect(p) < 1e-15);
}

TEST_CASE("interferometer unitary matches the independent composition") {
  rng::Philox gen(6, 0);
  for (int i = 0; i < 100; ++i) {
    SagnacConfig cfg;
    cfg.gamma_t = 180.0 * gen.uniform();
    cfg.gamma_r = 180.0 * gen.uniform();
    const CMatrix us = sagnac::sagnac_unitary(cfg);
    CHECK(unitarity_defect(us) < 1e-12);

    CMatrix plates(4, 4);
    const CMatrix ht = sagnac::u_hwp(cfg.gamma_t);
    const CMatrix hr = sagnac::u_hwp(cfg.gamma_r);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        plates(r, c) = ht(r, c);
        plates(r + 2, c + 2) = hr(r, c);
      }
    const Mat4 oracle =
        mul4(to_mat4(sagnac::u_pbs()), mul4(to_mat4(plates), to_mat4(sagnac::u_pbs())));
    CHECK(max_diff(oracle, us) < 1e-14);
  }

  // Both plates at zero: V reflects twice (phase i*i) and the plates give
  // two more sign flips, so the loop acts as the identity.
  const CMatrix id = sagnac::sagnac_unitary({0.0, 0.0, 112.5});
  CHECK((id - CMatrix::identity(4)).max_abs() < 1e-15);
}

TEST_CASE("third Kraus operator is the mode-b block of the unitary") {
  SagnacConfig cfg;  // pinned angles
  const CMatrix us = sagnac::sagnac_unitary(cfg);
  const auto k = sagnac::kraus_operators(cfg);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) CHECK(k.a2(r, c) == us(r + 2, c));
}

TEST_CASE("Kraus completeness and POVM validity across the angle grid") {
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j)
      for (int l = 0; l < 20; ++l) {
        const SagnacConfig cfg{i * 9.0, j * 9.0, l * 9.0};
        const auto k = sagnac::kraus_operators(cfg);
        REQUIRE((kraus_sum(k) - CMatrix::identity(2)).max_abs() < 1e-10);
        // Povm construction enforces hermiticity, positivity, completeness.
        REQUIRE_NOTHROW(sagnac::implemented_povm(cfg));
      }
}

TEST_CASE("optical model probabilities agree with the Born rule") {
  SagnacConfig cfg{23.0, 71.0, 112.5};
  const auto k = sagnac::kraus_operators(cfg);
  const auto povm = sagnac::implemented_povm(cfg);
  rng::Philox gen(7, 0);
  for (int i = 0; i < 50; ++i) {
    Complex psi0(gen.normal(), gen.normal());
    Complex psi1(gen.normal(), gen.normal());
    const double n = std::sqrt(std::norm(psi0) + std::norm(psi1));
    psi0 /= n;
    psi1 /= n;
    const std::array<const CMatrix*, 3> ops = {&k.a0, &k.a1, &k.a2};
    double total = 0.0;
    for (int o = 0; o < 3; ++o) {
      const CMatrix& a = *ops[static_cast<size_t>(o)];
      const Complex out0 = a(0, 0) * psi0 + a(0, 1) * psi1;
      const Complex out1 = a(1, 0) * psi0 + a(1, 1) * psi1;
      const double direct = std::norm(out0) + std::norm(out1);
      const CMatrix& m = povm.effect(o);
      const double born = (std::conj(psi0) * (m(0, 0) * psi0 + m(0, 1) * psi1) +
                           std::conj(psi1) * (m(1, 0) * psi0 + m(1, 1) * psi1))
                              .real();
      CHECK(direct == doctest::Approx(born).epsilon(1e-12));
      total += direct;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pinned angles implement the symmetric three-outcome measurement") {
  const auto target = scenarios::ideal_strategy("I_optimal").alice_povms[3];
  const auto povm = sagnac::implemented_povm({});
  CHECK(sagnac::povm_distance(povm, target) < 1e-3);
}

TEST_CASE("transmitted-plate fit recovers the pinned angle from the target") {
  const auto target = scenarios::ideal_strategy("I_optimal").alice_povms[3];
  const auto fit = sagnac::fit_transmitted_angle(target);
  CHECK(std::abs(fit.gamma_t - 117.37) < 0.01);
  CHECK(fit.residual < 1e-3);
  CHECK(fit.reachable);
}

TEST_CASE("transmitted-plate fit round-trips an implementable target") {
  SagnacConfig truth;
  truth.gamma_t = 63.4;
  const auto fit = sagnac::fit_transmitted_angle(sagnac::implemented_povm(truth));
  CHECK(std::abs(fit.gamma_t - 63.4) < 1e-6);
  CHECK(fit.residual < 1e-9);
  CHECK(fit.reachable);
}

TEST_CASE("fit reports an out-of-reach target without claiming it") {
  const CMatrix e0 = qcore::bloch_effect(0.3);
  const CMatrix e1 = CMatrix::identity(2) - e0;
  const qcore::Povm target(2, {e0, e1, CMatrix(2, 2)});
  const auto fit = sagnac::fit_transmitted_angle(target);
  CHECK(!fit.reachable);
  CHECK(fit.residual > 1e-2);
}

TEST_CASE("fitted measurement reproduces the functional value of the trine") {
  const auto f = scenarios::functional_catalog("I");
  auto s = scenarios::ideal_strategy("I_optimal");
  const auto fit = sagnac::fit_transmitted_angle(s.alice_povms[3]);
  SagnacConfig fitted;
  fitted.gamma_t = fit.gamma_t;
  auto alice = s.alice_povms;
  alice[3] = sagnac::implemented_povm(fitted);
  const scenarios::QuantumStrategy replaced(s.state, 2, 2, std::move(alice), s.bob_povms);
  const double value = scenarios::evaluate(f, scenarios::behavior_from_strategy(replaced)).value;
  CHECK(std::abs(value - 0.75 * std::sqrt(3.0)) < 5e-4);
}

TEST_CASE("fit rejects targets of the wrong shape") {
  const CMatrix half = 0.5 * CMatrix::identity(2);
  CHECK_THROWS_AS(sagnac::fit_transmitted_angle(qcore::Povm(2, {half, half})),
                  std::invalid_argument);
}
