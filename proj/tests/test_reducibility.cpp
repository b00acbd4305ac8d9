#include <cmath>
#include <numbers>

#include "bellcert/qcore.hpp"
#include "bellcert/scenarios.hpp"
#include "doctest.h"

using namespace bellcert;
using scenarios::ReducibilityVerdict;

namespace {

qcore::Povm trine_povm() {
  const double pi = std::numbers::pi;
  std::vector<qcore::CMatrix> effects;
  for (double g : {2.0 * pi / 3.0, 4.0 * pi / 3.0, 0.0}) {
    qcore::CMatrix e = qcore::bloch_effect(g);
    e *= 2.0 / 3.0;
    effects.push_back(std::move(e));
  }
  return qcore::Povm(2, effects);
}

double reconstruction_gap(const qcore::Povm& m, const scenarios::ReducibilityDecomposition& dec) {
  double err = 0.0;
  for (size_t k = 0; k < m.effects().size(); ++k) {
    qcore::CMatrix acc(m.dim(), m.dim());
    for (size_t j = 0; j < dec.sub_povms.size(); ++j)
      if (dec.sub_povms[j]) {
        qcore::CMatrix g = dec.sub_povms[j]->effects()[k];
        g *= dec.weights[j];
        acc += g;
      }
    acc -= m.effects()[k];
    err = std::max(err, acc.max_abs());
  }
  return err;
}

}  // namespace

TEST_CASE("the symmetric three-outcome qubit measurement is irreducible") {
  auto res = scenarios::decompose_into_fewer_outcomes(trine_povm());
  CHECK(res.verdict == ReducibilityVerdict::irreducible);
  CHECK(res.infeasibility_margin >= 1e-6);
  CHECK(!res.decomposition.has_value());
}

TEST_CASE("a flat three-outcome measurement splits into binary pieces") {
  qcore::CMatrix third = qcore::CMatrix::identity(2);
  third *= 1.0 / 3.0;
  qcore::Povm flat(2, {third, third, third});
  auto res = scenarios::decompose_into_fewer_outcomes(flat);
  REQUIRE(res.verdict == ReducibilityVerdict::reducible);
  REQUIRE(res.decomposition.has_value());
  CHECK(res.reconstruction_error <= 1e-7);
  CHECK(reconstruction_gap(flat, *res.decomposition) <= 1e-7);
  double total = 0.0;
  for (double w : res.decomposition->weights) {
    CHECK(w >= 0.0);
    total += w;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  // Every retained component is a valid POVM whose skipped effect vanishes.
  for (size_t j = 0; j < res.decomposition->sub_povms.size(); ++j)
    if (res.decomposition->sub_povms[j])
      CHECK(res.decomposition->sub_povms[j]->effects()[j].max_abs() <= 1e-9);
}

TEST_CASE("a padded mixture of two binary measurements is reducible") {
  // E_0 = (P + Q)/2, E_1 = (I - P)/2, E_2 = (I - Q)/2 arises from flipping a
  // fair coin between the binary POVMs {P, I-P} and {Q, I-Q} and merging the
  // first outcomes.
  const double pi = std::numbers::pi;
  qcore::CMatrix proj_p = qcore::bloch_effect(0.0);
  qcore::CMatrix proj_q = qcore::bloch_effect(2.0 * pi / 3.0);
  qcore::CMatrix id = qcore::CMatrix::identity(2);
  qcore::CMatrix e0 = proj_p;
  e0 += proj_q;
  e0 *= 0.5;
  qcore::CMatrix e1 = id;
  e1 -= proj_p;
  e1 *= 0.5;
  qcore::CMatrix e2 = id;
  e2 -= proj_q;
  e2 *= 0.5;
  qcore::Povm mixed(2, {e0, e1, e2});

  auto res = scenarios::decompose_into_fewer_outcomes(mixed);
  REQUIRE(res.verdict == ReducibilityVerdict::reducible);
  REQUIRE(res.decomposition.has_value());
  CHECK(res.reconstruction_error <= 1e-7);
  CHECK(reconstruction_gap(mixed, *res.decomposition) <= 1e-7);
  // The decomposition itself need not match the generating mixture (it is
  // not unique); validity and reconstruction are the invariants.
  for (size_t j = 0; j < res.decomposition->sub_povms.size(); ++j)
    if (res.decomposition->sub_povms[j]) {
      CHECK(res.decomposition->weights[j] > 0.0);
      CHECK(res.decomposition->sub_povms[j]->effects()[j].max_abs() <= 1e-9);
    }
}

TEST_CASE("nontrivial binary measurements admit no one-outcome simulation") {
  qcore::CMatrix proj = qcore::bloch_effect(std::numbers::pi / 5.0);
  qcore::CMatrix rest = qcore::CMatrix::identity(2);
  rest -= proj;
  auto res = scenarios::decompose_into_fewer_outcomes(qcore::Povm(2, {proj, rest}));
  CHECK(res.verdict == ReducibilityVerdict::irreducible);
  CHECK(res.infeasibility_margin >= 1e-6);

  // The trivial coin {I/2, I/2} is a classical mixture of one-outcome POVMs.
  qcore::CMatrix half = qcore::CMatrix::identity(2);
  half *= 0.5;
  auto coin = scenarios::decompose_into_fewer_outcomes(qcore::Povm(2, {half, half}));
  CHECK(coin.verdict == ReducibilityVerdict::reducible);
}

TEST_CASE("single-outcome measurements are irreducible by definition") {
  auto res = scenarios::decompose_into_fewer_outcomes(qcore::Povm(2, {qcore::CMatrix::identity(2)}));
  CHECK(res.verdict == ReducibilityVerdict::irreducible);
}

TEST_CASE("noisy symmetric measurements cross reducibility at sqrt(3)/2 visibility") {
  // v E + (1-v) I/3 has effects (I + v n_a sigma)/3 with coplanar unit
  // vectors n_a at 120 degrees. Averaging any decomposition over the
  // threefold symmetry yields a covariant one with binary effects
  // B = beta I + m sigma, and matching the target forces |m| = v/sqrt(3)
  // with beta and 1-beta both at least |m|; hence reducible iff
  // v <= sqrt(3)/2.
  qcore::Povm trine = trine_povm();
  qcore::CMatrix noise = qcore::CMatrix::identity(2);
  noise *= 1.0 / 3.0;
  auto smeared = [&](double v) {
    std::vector<qcore::CMatrix> effects;
    for (const auto& e : trine.effects()) {
      qcore::CMatrix blend = e;
      blend *= v;
      qcore::CMatrix n = noise;
      n *= 1.0 - v;
      blend += n;
      effects.push_back(std::move(blend));
    }
    return qcore::Povm(2, effects);
  };
  for (double v : {0.80, 0.85}) {
    auto res = scenarios::decompose_into_fewer_outcomes(smeared(v));
    CHECK(res.verdict == ReducibilityVerdict::reducible);
    CHECK(res.reconstruction_error <= 1e-7);
  }
  for (double v : {0.88, 0.90}) {
    auto res = scenarios::decompose_into_fewer_outcomes(smeared(v));
    CHECK(res.verdict == ReducibilityVerdict::irreducible);
    CHECK(res.infeasibility_margin >= 1e-6);
  }
}
