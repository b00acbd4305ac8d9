#include "bellcert/seesaw.hpp"

#include <cmath>
#include <stdexcept>

#include "bellcert/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bellcert;
using qcore::CMatrix;
using qcore::Complex;
using qcore::Povm;
using scenarios::Party;

namespace {

const double kChainMax = 0.75 * std::sqrt(3.0);

double top_eigenvalue(const CMatrix& w) {
  return qcore::hermitian_eig(w).eigenvalues.front();
}

double payoff(const Povm& m, const std::vector<CMatrix>& effective) {
  double v = 0.0;
  for (int a = 0; a < m.outcomes(); ++a)
    v += (m.effect(a) * effective[static_cast<size_t>(a)]).trace().real();
  return v;
}

void check_povm_valid(const Povm& m, double tol) {
  CMatrix total(m.dim(), m.dim());
  for (const auto& e : m.effects()) {
    CHECK(e.hermiticity_defect() < tol);
    CHECK(qcore::hermitian_eig(e).eigenvalues.back() > -tol);
    total += e;
  }
  CHECK((total - CMatrix::identity(m.dim())).max_abs() < tol);
}

}  // namespace

TEST_CASE("bell operator expectation reproduces the behavior value") {
  for (const char* name : {"I_optimal", "chsh_optimal"}) {
    const auto s = scenarios::ideal_strategy(name);
    const auto f = scenarios::functional_catalog(name == std::string("I_optimal")
                                                     ? "I"
                                                     : "chsh_correlator_as_probabilities");
    const CMatrix w = seesaw::bell_operator(f, s.alice_povms, s.bob_povms);
    const double direct = (w * s.state.matrix()).trace().real();
    const double via_behavior = scenarios::evaluate(f, scenarios::behavior_from_strategy(s)).value;
    CHECK(direct == doctest::Approx(via_behavior).epsilon(1e-12));
  }
}

TEST_CASE("bell operator of the ideal strategies peaks at the known maxima") {
  const auto s = scenarios::ideal_strategy("I_optimal");
  const auto f = scenarios::functional_catalog("I");
  CHECK(top_eigenvalue(seesaw::bell_operator(f, s.alice_povms, s.bob_povms)) ==
        doctest::Approx(kChainMax).epsilon(1e-9));

  const auto c = scenarios::ideal_strategy("chsh_optimal");
  const auto g = scenarios::functional_catalog("chsh_correlator_as_probabilities");
  CHECK(top_eigenvalue(seesaw::bell_operator(g, c.alice_povms, c.bob_povms)) ==
        doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("bell operator rejects mismatched measurement lists") {
  const auto s = scenarios::ideal_strategy("I_optimal");
  const auto f = scenarios::functional_catalog("I");
  auto alice_missing = s.alice_povms;
  alice_missing.pop_back();
  CHECK_THROWS_AS(seesaw::bell_operator(f, alice_missing, s.bob_povms), std::invalid_argument);
  auto bob_missing = s.bob_povms;
  bob_missing.pop_back();
  CHECK_THROWS_AS(seesaw::bell_operator(f, s.alice_povms, bob_missing), std::invalid_argument);
}

TEST_CASE("optimize_state picks the top eigenvector") {
  CMatrix w(4, 4);
  w(0, 0) = 0.2;
  w(1, 1) = 0.9;
  w(2, 2) = 0.5;
  w(3, 3) = 0.1;
  const auto rho = seesaw::optimize_state(w);
  CHECK(rho.matrix()(1, 1).real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((w * rho.matrix()).trace().real() == doctest::Approx(0.9).epsilon(1e-12));

  const CMatrix h = oracles::random_hermitian(4, 11, 0);
  const auto top = oracles::quartic_hermitian_eigenvalues(h)[0];
  CHECK((h * seesaw::optimize_state(h).matrix()).trace().real() ==
        doctest::Approx(top).epsilon(1e-8));
}

TEST_CASE("effective operators decompose the functional value by setting") {
  const auto s = scenarios::ideal_strategy("I_optimal");
  const auto f = scenarios::functional_catalog("I");
  const double value = scenarios::evaluate(f, scenarios::behavior_from_strategy(s)).value;

  double total = 0.0;
  for (int x = 0; x < static_cast<int>(s.alice_povms.size()); ++x) {
    const auto r = seesaw::effective_operators(f, s.state, 2, 2, s.bob_povms, Party::alice, x);
    REQUIRE(static_cast<int>(r.size()) == s.alice_povms[static_cast<size_t>(x)].outcomes());
    total += payoff(s.alice_povms[static_cast<size_t>(x)], r);
  }
  CHECK(total == doctest::Approx(value).epsilon(1e-12));

  total = 0.0;
  for (int y = 0; y < static_cast<int>(s.bob_povms.size()); ++y) {
    const auto r = seesaw::effective_operators(f, s.state, 2, 2, s.alice_povms, Party::bob, y);
    total += payoff(s.bob_povms[static_cast<size_t>(y)], r);
  }
  CHECK(total == doctest::Approx(value).epsilon(1e-12));
}

TEST_CASE("binary measurement update matches the spectral oracle") {
  for (uint64_t stream = 0; stream < 20; ++stream) {
    const CMatrix r0 = oracles::random_hermitian(2, 23, 2 * stream);
    const CMatrix r1 = oracles::random_hermitian(2, 23, 2 * stream + 1);
    const CMatrix d = r0 - r1;
    // Eigenvalues of the 2x2 Hermitian difference, by trace and determinant.
    const double tr = d.trace().real();
    const double det = (d(0, 0) * d(1, 1) - d(0, 1) * d(1, 0)).real();
    const double root = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
    const double best = r1.trace().real() + std::max(tr / 2.0 + root, 0.0) +
                        std::max(tr / 2.0 - root, 0.0);

    const auto m = seesaw::optimize_measurement({r0, r1}, 2);
    check_povm_valid(m, 1e-10);
    CHECK(payoff(m, {r0, r1}) == doctest::Approx(best).epsilon(1e-10));
  }
}

TEST_CASE("binary measurement update handles a flat objective") {
  const CMatrix h = oracles::random_hermitian(2, 29, 0);
  const auto m = seesaw::optimize_measurement({h, h}, 2);
  check_povm_valid(m, 1e-10);
  CHECK(payoff(m, {h, h}) == doctest::Approx(h.trace().real()).epsilon(1e-10));
}

TEST_CASE("measurement SDP recovers a diagonal optimum") {
  // R_a = w_a |a><a| with w_a > 0: the basis projectors reach sum(w), and
  // no POVM can exceed it because <a|E_a|a> <= 1.
  const std::vector<double> w = {0.7, 1.3, 0.4};
  std::vector<CMatrix> effective;
  for (int a = 0; a < 3; ++a) {
    CMatrix r(3, 3);
    r(a, a) = w[static_cast<size_t>(a)];
    effective.push_back(r);
  }
  const auto m = seesaw::optimize_measurement(effective, 3);
  check_povm_valid(m, 1e-7);
  CHECK(payoff(m, effective) == doctest::Approx(0.7 + 1.3 + 0.4).epsilon(1e-7));
}

TEST_CASE("measurement SDP ties every valid POVM on a flat objective") {
  CMatrix h = oracles::random_hermitian(2, 31, 0);
  h = h * h.adjoint();  // PSD
  const std::vector<CMatrix> effective = {h, h, h};
  const auto m = seesaw::optimize_measurement(effective, 2);
  check_povm_valid(m, 1e-7);
  CHECK(payoff(m, effective) == doctest::Approx(h.trace().real()).epsilon(1e-7));
}

TEST_CASE("single sweep from the ideal strategy does not regress") {
  // Stationarity: re-optimizing any one measurement (or the state) at the
  // functional's maximizer must keep the value at the maximum.
  const auto s = scenarios::ideal_strategy("I_optimal");
  const auto f = scenarios::functional_catalog("I");

  auto alice = s.alice_povms;
  for (int x = 0; x < static_cast<int>(alice.size()); ++x) {
    const auto r = seesaw::effective_operators(f, s.state, 2, 2, s.bob_povms, Party::alice, x);
    alice[static_cast<size_t>(x)] =
        seesaw::optimize_measurement(r, 2);
  }
  const CMatrix w = seesaw::bell_operator(f, alice, s.bob_povms);
  CHECK(top_eigenvalue(w) >= kChainMax - 1e-7);
}

TEST_CASE("seesaw reaches the known maxima of the catalog functionals") {
  seesaw::SeesawConfig cfg;
  cfg.restarts = 12;
  cfg.seed = 7;

  SUBCASE("three-outcome setting unlocked") {
    const auto res = seesaw::run(scenarios::functional_catalog("I"), cfg);
    CHECK(res.best_value >= kChainMax - 1e-6);
    CHECK(res.best_value <= kChainMax + 1e-9);
  }
  SUBCASE("all-binary restriction stays below the unrestricted maximum") {
    const auto f = scenarios::functional_catalog("I");
    const auto g = scenarios::restrict_outcome(f, Party::alice, 3, 2);
    const auto res = seesaw::run(g, cfg);
    CHECK(res.best_value >= 1.27104 - 1e-4);
    CHECK(res.best_value <= 1.2711);
  }
  SUBCASE("four-outcome tomographic setting") {
    const auto res = seesaw::run(scenarios::functional_catalog("L"), cfg);
    CHECK(res.best_value >= 4.0 * std::sqrt(3.0) - 1e-5);
    CHECK(res.best_value <= 4.0 * std::sqrt(3.0) + 1e-9);
  }
}

TEST_CASE("seesaw result is internally consistent") {
  seesaw::SeesawConfig cfg;
  cfg.restarts = 4;
  cfg.seed = 3;
  const auto f = scenarios::functional_catalog("I");
  const auto res = seesaw::run(f, cfg);

  REQUIRE(static_cast<int>(res.restarts.size()) == cfg.restarts);
  double best = -1e300;
  for (const auto& t : res.restarts) {
    REQUIRE(!t.values.empty());
    for (size_t i = 1; i < t.values.size(); ++i) CHECK(t.values[i] >= t.values[i - 1] - 1e-9);
    best = std::max(best, t.values.back());
  }
  CHECK(res.best_value == doctest::Approx(best).epsilon(1e-12));
  CHECK(res.restarts[static_cast<size_t>(res.best_restart)].values.back() ==
        doctest::Approx(res.best_value).epsilon(1e-12));

  const double replay =
      scenarios::evaluate(f, scenarios::behavior_from_strategy(res.best_strategy)).value;
  CHECK(replay == doctest::Approx(res.best_value).epsilon(1e-9));
}

TEST_CASE("seesaw is deterministic for a fixed seed") {
  seesaw::SeesawConfig cfg;
  cfg.restarts = 3;
  cfg.seed = 42;
  const auto f = scenarios::functional_catalog("chsh_correlator_as_probabilities");
  const auto a = seesaw::run(f, cfg);
  const auto b = seesaw::run(f, cfg);
  CHECK(a.best_value == b.best_value);
  CHECK(a.best_restart == b.best_restart);
  REQUIRE(a.restarts.size() == b.restarts.size());
  for (size_t r = 0; r < a.restarts.size(); ++r)
    CHECK(a.restarts[r].values == b.restarts[r].values);
}

TEST_CASE("seesaw config validation rejects bad parameters") {
  seesaw::SeesawConfig cfg;
  cfg.dim_a = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.dim_b = 9;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.restarts = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
