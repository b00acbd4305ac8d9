#include "bellcert/qcore.hpp"

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

using namespace bellcert::qcore;

namespace {

constexpr double kPi = 3.14159265358979323846;

DensityOp singlet_like() {
  const double r = 1.0 / std::sqrt(2.0);
  return DensityOp::from_pure({0.0, r, r, 0.0});
}

DensityOp maximally_mixed4() {
  CMatrix m = CMatrix::identity(4);
  m *= Complex(0.25);
  return DensityOp(std::move(m));
}

}  // namespace

TEST_CASE("kron basics") {
  const CMatrix i2 = CMatrix::identity(2);
  const CMatrix i4 = kron(i2, i2);
  CHECK(i4.rows() == 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(std::abs(i4(i, j) - (i == j ? 1.0 : 0.0)) < 1e-15);

  const CMatrix zz = kron(pauli_z(), pauli_z());
  const double want[4] = {1.0, -1.0, -1.0, 1.0};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(std::abs(zz(i, j) - (i == j ? want[i] : 0.0)) < 1e-15);
}

TEST_CASE("bloch effect closed forms") {
  const CMatrix p0 = bloch_effect(0.0);
  CHECK(std::abs(p0(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(p0(1, 1)) < 1e-15);

  const CMatrix ppi = bloch_effect(kPi);
  CHECK(std::abs(ppi(0, 0)) < 1e-15);
  CHECK(std::abs(ppi(1, 1) - 1.0) < 1e-15);

  const CMatrix pt = bloch_effect(2.0 * kPi / 3.0);
  CHECK(pt(0, 0).real() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(pt(0, 1).real() == doctest::Approx(std::sqrt(3.0) / 4.0).epsilon(1e-12));
  CHECK(pt(1, 0).real() == doctest::Approx(std::sqrt(3.0) / 4.0).epsilon(1e-12));
  CHECK(pt(1, 1).real() == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("bloch effect is a projector on a 100 point grid") {
  for (int k = 0; k < 100; ++k) {
    const double theta = 2.0 * kPi * k / 100.0;
    const CMatrix p = bloch_effect(theta);
    CMatrix d = p * p;
    d -= p;
    CHECK(d.max_abs() < 1e-14);
    CHECK(p.is_hermitian(1e-14));
  }
}

TEST_CASE("born closed forms") {
  SUBCASE("maximally mixed state gives 1/4 for any pair of projectors") {
    const DensityOp mixed = maximally_mixed4();
    for (double ta : {0.0, 1.1, 2.7})
      for (double tb : {0.3, 4.0})
        CHECK(born(mixed, bloch_effect(ta), bloch_effect(tb)) == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("singlet-like state reproduces the analytic formula") {
    const DensityOp psi = singlet_like();
    CHECK(born(psi, bloch_effect(3.0 * kPi / 2.0), bloch_effect(-2.0 * kPi / 3.0)) ==
          doctest::Approx((2.0 + std::sqrt(3.0)) / 8.0).epsilon(1e-12));
    const CMatrix trine0 = (2.0 / 3.0) * bloch_effect(2.0 * kPi / 3.0);
    CHECK(born(psi, trine0, bloch_effect(-2.0 * kPi / 3.0)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(born(psi, bloch_effect(0.0), bloch_effect(kPi)) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("analytic grid") {
    const DensityOp psi = singlet_like();
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j) {
        const double ta = 2.0 * kPi * i / 7.0, tb = 2.0 * kPi * j / 7.0 + 0.1;
        CHECK(born(psi, bloch_effect(ta), bloch_effect(tb)) ==
              doctest::Approx(oracles::singlet_like_prob(ta, tb)).epsilon(1e-12));
      }
  }
}

TEST_CASE("born sums to one over the outcomes of two povms") {
  std::vector<CMatrix> trine;
  for (double g : {2.0 * kPi / 3.0, 4.0 * kPi / 3.0, 0.0})
    trine.push_back((2.0 / 3.0) * bloch_effect(g));
  const Povm ma(2, trine);
  CMatrix e0 = bloch_effect(0.7);
  CMatrix e1 = CMatrix::identity(2);
  e1 -= e0;
  const Povm mb(2, {e0, e1});

  for (uint64_t s = 0; s < 5; ++s) {
    const CMatrix h = oracles::random_hermitian(4, 11, s);
    const auto eig = hermitian_eig(h);
    std::vector<Complex> top(4);
    for (int i = 0; i < 4; ++i) top[static_cast<size_t>(i)] = eig.eigenvectors(i, 0);
    const DensityOp rho = DensityOp::from_pure(top);
    double total = 0.0;
    for (int a = 0; a < ma.outcomes(); ++a)
      for (int b = 0; b < mb.outcomes(); ++b) total += born(rho, ma.effect(a), mb.effect(b));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("partial traces") {
  const DensityOp psi = singlet_like();
  const CMatrix ra = partial_trace_second(psi.matrix(), 2, 2);
  const CMatrix rb = partial_trace_first(psi.matrix(), 2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(ra(i, j) - (i == j ? 0.5 : 0.0)) < 1e-12);
      CHECK(std::abs(rb(i, j) - (i == j ? 0.5 : 0.0)) < 1e-12);
    }

  const CMatrix a = oracles::random_hermitian(2, 3, 0);
  const CMatrix b = oracles::random_hermitian(3, 3, 1);
  const CMatrix ab = kron(a, b);
  CMatrix ta = partial_trace_second(ab, 2, 3);
  CMatrix tb = partial_trace_first(ab, 2, 3);
  ta -= b.trace() * a;
  tb -= a.trace() * b;
  CHECK(ta.max_abs() < 1e-12);
  CHECK(tb.max_abs() < 1e-12);
}

TEST_CASE("hermitian_eig closed forms") {
  const auto ex = hermitian_eig(pauli_x());
  CHECK(ex.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ex.eigenvalues[1] == doctest::Approx(-1.0).epsilon(1e-12));

  for (double theta : {0.0, 0.4, 2.0, 5.9}) {
    const auto ep = hermitian_eig(bloch_effect(theta));
    CHECK(ep.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(ep.eigenvalues[1]) < 1e-12);
  }
}

TEST_CASE("hermitian_eig reconstruction and orthonormality on random matrices") {
  for (int n : {2, 3, 4, 5, 8}) {
    for (uint64_t s = 0; s < 4; ++s) {
      const CMatrix h = oracles::random_hermitian(n, 42, 10 * static_cast<uint64_t>(n) + s);
      const auto eig = hermitian_eig(h);
      REQUIRE(static_cast<int>(eig.eigenvalues.size()) == n);
      for (size_t k = 1; k < eig.eigenvalues.size(); ++k)
        CHECK(eig.eigenvalues[k - 1] >= eig.eigenvalues[k] - 1e-12);

      // V Lambda V^dag reconstructs the input.
      CMatrix lam(n, n);
      for (int i = 0; i < n; ++i) lam(i, i) = eig.eigenvalues[static_cast<size_t>(i)];
      CMatrix rec = eig.eigenvectors * lam * eig.eigenvectors.adjoint();
      rec -= h;
      CHECK(rec.max_abs() < 1e-9);

      CMatrix gram = eig.eigenvectors.adjoint() * eig.eigenvectors;
      gram -= CMatrix::identity(n);
      CHECK(gram.max_abs() < 1e-10);

      // Phase convention: first component of magnitude above 1e-12 is real
      // positive.
      for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) {
          const Complex v = eig.eigenvectors(r, c);
          if (std::abs(v) > 1e-12) {
            CHECK(v.real() > 0.0);
            CHECK(std::abs(v.imag()) < 1e-10);
            break;
          }
        }
    }
  }
}

TEST_CASE("hermitian_eig handles degenerate spectra") {
  CMatrix m = CMatrix::identity(4);
  auto eig = hermitian_eig(m);
  for (double v : eig.eigenvalues) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  CMatrix gram = eig.eigenvectors.adjoint() * eig.eigenvectors;
  gram -= CMatrix::identity(4);
  CHECK(gram.max_abs() < 1e-10);

  // Two-fold degenerate block plus distinct eigenvalues.
  CMatrix d(4, 4);
  d(0, 0) = 2.0;
  d(1, 1) = 2.0;
  d(2, 2) = -1.0;
  d(3, 3) = 0.5;
  const CMatrix u = hermitian_eig(oracles::random_hermitian(4, 7, 7)).eigenvectors;
  const CMatrix h = u * d * u.adjoint();
  eig = hermitian_eig(h);
  CHECK(eig.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(eig.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(eig.eigenvalues[2] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(eig.eigenvalues[3] == doctest::Approx(-1.0).epsilon(1e-10));
  CMatrix lam(4, 4);
  for (int i = 0; i < 4; ++i) lam(i, i) = eig.eigenvalues[static_cast<size_t>(i)];
  CMatrix rec = eig.eigenvectors * lam * eig.eigenvectors.adjoint();
  rec -= h;
  CHECK(rec.max_abs() < 1e-9);
}

TEST_CASE("hermitian_eig rejects non-hermitian input") {
  CMatrix m(2, 2);
  m(0, 1) = Complex(1.0, 0.0);
  m(1, 0) = Complex(0.5, 0.0);
  CHECK_THROWS(hermitian_eig(m));
}

TEST_CASE("bell operator of the optimal trine strategy") {
  // W = sum over the functional's terms of coeff * (E_a|x (x) E_b|y) with the
  // trine strategy's effects; its top eigenvalue is the best value over
  // states, which equals 3*sqrt(3)/4. Cross-checked against an independent
  // characteristic-polynomial eigensolver.
  const double alpha[3] = {3.0 * kPi / 2.0, kPi / 6.0, 5.0 * kPi / 6.0};
  const double gamma[3] = {2.0 * kPi / 3.0, 4.0 * kPi / 3.0, 0.0};

  CMatrix w(4, 4);
  auto add = [&w](double c, const CMatrix& ea, const CMatrix& eb) {
    CMatrix t = kron(ea, eb);
    t *= Complex(c);
    w += t;
  };
  for (int x = 0; x < 3; ++x) add(1.0, bloch_effect(alpha[x]), bloch_effect(-gamma[x]));
  add(-1.0, bloch_effect(alpha[0]), bloch_effect(-gamma[1]));
  add(-1.0, bloch_effect(alpha[1]), bloch_effect(-gamma[2]));
  add(-1.0, bloch_effect(alpha[2]), bloch_effect(-gamma[0]));
  for (int a = 0; a < 3; ++a)
    add(-1.0, (2.0 / 3.0) * bloch_effect(gamma[a]), bloch_effect(-gamma[a]));

  const double target = 3.0 * std::sqrt(3.0) / 4.0;
  const auto eig = hermitian_eig(w);
  CHECK(eig.eigenvalues[0] == doctest::Approx(target).epsilon(1e-10));

  // Every eigenvalue annihilates the independent characteristic polynomial
  // (sharp even at multiple roots), and the root multisets agree within the
  // root finder's accuracy.
  const auto coeffs = oracles::quartic_char_coeffs(w);
  for (double lam : eig.eigenvalues) CHECK(std::abs(oracles::quartic_char_eval(coeffs, lam)) < 1e-9);
  const auto roots = oracles::quartic_hermitian_eigenvalues(w);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(roots[static_cast<size_t>(i)] - eig.eigenvalues[static_cast<size_t>(i)]) < 1e-6);
}

TEST_CASE("density operator validation") {
  CHECK_NOTHROW(maximally_mixed4());
  CHECK_NOTHROW(singlet_like());

  CMatrix bad_trace = CMatrix::identity(2);
  CHECK_THROWS(DensityOp(bad_trace));

  CMatrix not_psd(2, 2);
  not_psd(0, 0) = 1.5;
  not_psd(1, 1) = -0.5;
  CHECK_THROWS(DensityOp(not_psd));

  CHECK_THROWS(DensityOp::from_pure({Complex(0.5, 0.0), Complex(0.5, 0.0)}));
}

TEST_CASE("povm validation") {
  std::vector<CMatrix> trine;
  for (double g : {2.0 * kPi / 3.0, 4.0 * kPi / 3.0, 0.0})
    trine.push_back((2.0 / 3.0) * bloch_effect(g));
  CHECK_NOTHROW(Povm(2, trine));

  // Effects that do not complete to the identity.
  std::vector<CMatrix> incomplete{bloch_effect(0.0), bloch_effect(0.0)};
  CHECK_THROWS(Povm(2, incomplete));

  // An effect with a negative eigenvalue.
  CMatrix neg = CMatrix::identity(2);
  neg(1, 1) = -0.1;
  CMatrix rest = CMatrix::identity(2);
  rest -= neg;
  CHECK_THROWS(Povm(2, {neg, rest}));
}

TEST_CASE("fidelity with pure states") {
  const double r = 1.0 / std::sqrt(2.0);
  const std::vector<Complex> psi{0.0, r, r, 0.0};
  CHECK(fidelity_with_pure(singlet_like(), psi) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fidelity_with_pure(maximally_mixed4(), psi) == doctest::Approx(0.25).epsilon(1e-12));

  // Werner mixture: linearity of the trace.
  CMatrix w = singlet_like().matrix();
  w *= Complex(0.9);
  CMatrix id = CMatrix::identity(4);
  id *= Complex(0.025);
  w += id;
  CHECK(fidelity_with_pure(DensityOp(w), psi) == doctest::Approx(0.925).epsilon(1e-12));
}
