#include "bellcert/seesaw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "bellcert/rng.hpp"
#include "bellcert/sdp.hpp"

namespace bellcert::seesaw {

namespace {

using qcore::CMatrix;
using qcore::Complex;

// Spectral tie slack: eigenvalues within this of zero are kernel.
constexpr double kKernelTol = 1e-12;

void check_povms(const scenarios::Scenario& sc, const std::vector<qcore::Povm>& alice,
                 const std::vector<qcore::Povm>& bob) {
  if (static_cast<int>(alice.size()) != sc.alice_settings() ||
      static_cast<int>(bob.size()) != sc.bob_settings())
    throw std::invalid_argument("povm list does not match scenario settings");
  for (int x = 0; x < sc.alice_settings(); ++x)
    if (alice[static_cast<size_t>(x)].outcomes() != sc.alice_outcomes[static_cast<size_t>(x)])
      throw std::invalid_argument("alice povm outcome count mismatch");
  for (int y = 0; y < sc.bob_settings(); ++y)
    if (bob[static_cast<size_t>(y)].outcomes() != sc.bob_outcomes[static_cast<size_t>(y)])
      throw std::invalid_argument("bob povm outcome count mismatch");
}

CMatrix hermitize(const CMatrix& m) {
  const int d = m.rows();
  CMatrix out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
  return out;
}

// Haar-distributed unitary: QR of a Ginibre matrix with the R diagonal's
// phases absorbed, orthonormalized by modified Gram-Schmidt with one
// re-orthogonalization pass.
CMatrix haar_unitary(int d, rng::Philox& gen) {
  CMatrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = Complex(gen.normal(), gen.normal());
  for (int c = 0; c < d; ++c) {
    for (int pass = 0; pass < 2; ++pass)
      for (int p = 0; p < c; ++p) {
        Complex overlap(0.0, 0.0);
        for (int r = 0; r < d; ++r) overlap += std::conj(g(r, p)) * g(r, c);
        for (int r = 0; r < d; ++r) g(r, c) -= overlap * g(r, p);
      }
    double norm2 = 0.0;
    for (int r = 0; r < d; ++r) norm2 += std::norm(g(r, c));
    const double inv = 1.0 / std::sqrt(norm2);
    for (int r = 0; r < d; ++r) g(r, c) *= inv;
    // Fix the column phase so the draw is determined by the Ginibre sample.
    Complex phase(1.0, 0.0);
    for (int r = 0; r < d; ++r)
      if (std::abs(g(r, c)) > 1e-9) {
        phase = g(r, c) / std::abs(g(r, c));
        break;
      }
    for (int r = 0; r < d; ++r) g(r, c) /= phase;
  }
  return g;
}

// Random projective measurement: Haar basis columns distributed round-robin
// over the outcomes; outcomes past the dimension start as zero effects (the
// optimization step can repopulate them).
qcore::Povm random_projective(int d, int outcomes, rng::Philox& gen) {
  CMatrix u = haar_unitary(d, gen);
  std::vector<CMatrix> effects(static_cast<size_t>(outcomes), CMatrix(d, d));
  for (int c = 0; c < d; ++c) {
    CMatrix& e = effects[static_cast<size_t>(c % outcomes)];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) e(i, j) += u(i, c) * std::conj(u(j, c));
  }
  return qcore::Povm(d, std::move(effects));
}

std::vector<Complex> haar_pure(int dim, rng::Philox& gen) {
  std::vector<Complex> amps(static_cast<size_t>(dim));
  double norm2 = 0.0;
  for (auto& a : amps) {
    a = Complex(gen.normal(), gen.normal());
    norm2 += std::norm(a);
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& a : amps) a *= inv;
  return amps;
}

// Renormalize nearly-valid effects into an exact POVM: clamp each effect to
// PSD, then conjugate by the inverse square root of their sum.
qcore::Povm repair_povm(int d, std::vector<CMatrix> effects) {
  CMatrix total(d, d);
  for (auto& e : effects) {
    e = qcore::clamp_psd(hermitize(e));
    total += e;
  }
  const CMatrix t = qcore::inverse_sqrt(total);
  for (auto& e : effects) e = hermitize(t * e * t);
  return qcore::Povm(d, std::move(effects));
}

// Optimal POVM for >= 3 outcomes: maximize sum_a Tr(E_a R_a) over
// completeness-constrained PSD effects, one SDP block per effect.
qcore::Povm measurement_sdp(const std::vector<CMatrix>& effective, int d) {
  const int n = static_cast<int>(effective.size());
  sdp::SdpProblem p;
  p.block_dims.assign(static_cast<size_t>(n), d);
  p.sense = sdp::Sense::maximize;
  for (int a = 0; a < n; ++a)
    for (int r = 0; r < d; ++r)
      for (int c = r; c < d; ++c) {
        const Complex v = effective[static_cast<size_t>(a)](r, c);
        if (std::abs(v) > 0.0) p.objective.push_back({a, r, c, r == c ? Complex(v.real()) : v});
      }
  for (int r = 0; r < d; ++r)
    for (int c = r; c < d; ++c) {
      sdp::Constraint re;
      for (int a = 0; a < n; ++a) re.matrix.push_back({a, r, c, Complex(r == c ? 1.0 : 2.0)});
      re.rhs = r == c ? 1.0 : 0.0;
      p.constraints.push_back(std::move(re));
      if (r < c) {
        sdp::Constraint im;
        for (int a = 0; a < n; ++a) im.matrix.push_back({a, r, c, Complex(0.0, 2.0)});
        im.rhs = 0.0;
        p.constraints.push_back(std::move(im));
      }
    }
  sdp::Options opt;
  opt.tol = 1e-10;
  sdp::SdpSolution sol = sdp::solve(p, opt);
  if (sol.status != sdp::Status::optimal)
    throw std::runtime_error("measurement update SDP failed: " + sol.detail);
  return repair_povm(d, std::move(sol.z_blocks));
}

}  // namespace

void SeesawConfig::validate() const {
  if (dim_a < 2 || dim_b < 2 || dim_a > 8 || dim_b > 8)
    throw std::invalid_argument("seesaw local dimensions must be in [2, 8]");
  if (restarts < 1) throw std::invalid_argument("seesaw needs at least one restart");
  if (max_iters < 1) throw std::invalid_argument("seesaw needs at least one iteration");
  if (!(tol > 0.0)) throw std::invalid_argument("seesaw tolerance must be positive");
}

CMatrix bell_operator(const scenarios::BellFunctional& f,
                      const std::vector<qcore::Povm>& alice_povms,
                      const std::vector<qcore::Povm>& bob_povms) {
  f.validate();
  check_povms(f.scenario, alice_povms, bob_povms);
  const int da = alice_povms.front().dim();
  const int db = bob_povms.front().dim();
  for (const auto& m : alice_povms)
    if (m.dim() != da) throw std::invalid_argument("alice povm dimension mismatch");
  for (const auto& m : bob_povms)
    if (m.dim() != db) throw std::invalid_argument("bob povm dimension mismatch");
  CMatrix w(da * db, da * db);
  for (const auto& t : f.terms) {
    CMatrix term = qcore::kron(alice_povms[static_cast<size_t>(t.x)].effect(t.a),
                               bob_povms[static_cast<size_t>(t.y)].effect(t.b));
    term *= Complex(t.coeff);
    w += term;
  }
  return hermitize(w);
}

qcore::DensityOp optimize_state(const CMatrix& w) {
  if (!w.is_hermitian()) throw std::invalid_argument("bell operator not hermitian");
  const auto eig = qcore::hermitian_eig(w);
  std::vector<Complex> top(static_cast<size_t>(w.rows()));
  for (int i = 0; i < w.rows(); ++i) top[static_cast<size_t>(i)] = eig.eigenvectors(i, 0);
  return qcore::DensityOp::from_pure(top);
}

std::vector<CMatrix> effective_operators(const scenarios::BellFunctional& f,
                                         const qcore::DensityOp& state, int dim_a, int dim_b,
                                         const std::vector<qcore::Povm>& other_povms,
                                         scenarios::Party party, int setting) {
  if (state.dim() != dim_a * dim_b) throw std::invalid_argument("state dimension mismatch");
  const bool for_alice = party == scenarios::Party::alice;
  const auto& counts = for_alice ? f.scenario.alice_outcomes : f.scenario.bob_outcomes;
  if (setting < 0 || setting >= static_cast<int>(counts.size()))
    throw std::invalid_argument("effective operators: setting out of range");
  const int n = counts[static_cast<size_t>(setting)];
  const int d = for_alice ? dim_a : dim_b;
  std::vector<CMatrix> r(static_cast<size_t>(n), CMatrix(d, d));
  for (const auto& t : f.terms) {
    if ((for_alice ? t.x : t.y) != setting) continue;
    const auto& other_effect = for_alice ? other_povms[static_cast<size_t>(t.y)].effect(t.b)
                                         : other_povms[static_cast<size_t>(t.x)].effect(t.a);
    CMatrix lifted = for_alice ? qcore::kron(CMatrix::identity(dim_a), other_effect)
                               : qcore::kron(other_effect, CMatrix::identity(dim_b));
    CMatrix traced = for_alice
                         ? qcore::partial_trace_second(state.matrix() * lifted, dim_a, dim_b)
                         : qcore::partial_trace_first(state.matrix() * lifted, dim_a, dim_b);
    traced *= Complex(t.coeff);
    r[static_cast<size_t>(for_alice ? t.a : t.b)] += traced;
  }
  for (auto& m : r) m = hermitize(m);
  return r;
}

qcore::Povm optimize_measurement(const std::vector<CMatrix>& effective, int dim) {
  if (effective.empty()) throw std::invalid_argument("measurement update without outcomes");
  for (const auto& m : effective)
    if (m.rows() != dim || m.cols() != dim)
      throw std::invalid_argument("effective operator dimension mismatch");
  const int n = static_cast<int>(effective.size());
  if (n == 1) return qcore::Povm(dim, {CMatrix::identity(dim)});
  if (n == 2) {
    // Closed form: outcome 0 takes the nonnegative eigenspace of R0 - R1,
    // kernel directions alternate deterministically between the outcomes.
    const auto eig = qcore::hermitian_eig(hermitize(effective[0] - effective[1]));
    std::vector<CMatrix> effects(2, CMatrix(dim, dim));
    int kernel_seen = 0;
    for (int k = 0; k < dim; ++k) {
      const double lam = eig.eigenvalues[static_cast<size_t>(k)];
      int who = lam > kKernelTol ? 0 : 1;
      if (std::abs(lam) <= kKernelTol) who = (kernel_seen++ % 2 == 0) ? 0 : 1;
      CMatrix& e = effects[static_cast<size_t>(who)];
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          e(i, j) += eig.eigenvectors(i, k) * std::conj(eig.eigenvectors(j, k));
    }
    return repair_povm(dim, std::move(effects));
  }
  return measurement_sdp(effective, dim);
}

SeesawResult run(const scenarios::BellFunctional& f, const SeesawConfig& cfg) {
  f.validate();
  cfg.validate();
  const scenarios::Scenario& sc = f.scenario;
  const int dim = cfg.dim_a * cfg.dim_b;

  // Placeholder strategy; the first restart always replaces it.
  SeesawResult result{
      0.0,
      0,
      scenarios::QuantumStrategy(
          qcore::DensityOp::from_pure({Complex(1.0), Complex(0.0), Complex(0.0), Complex(0.0)}),
          2, 2, {qcore::Povm(2, {CMatrix::identity(2)})}, {qcore::Povm(2, {CMatrix::identity(2)})}),
      {},
      true};
  result.restarts.reserve(static_cast<size_t>(cfg.restarts));
  bool have_best = false;

  for (int rs = 0; rs < cfg.restarts; ++rs) {
    rng::Philox gen(cfg.seed, static_cast<uint64_t>(rs));
    qcore::DensityOp state = qcore::DensityOp::from_pure(haar_pure(dim, gen));
    std::vector<qcore::Povm> alice, bob;
    for (int x = 0; x < sc.alice_settings(); ++x)
      alice.push_back(random_projective(cfg.dim_a, sc.alice_outcomes[static_cast<size_t>(x)], gen));
    for (int y = 0; y < sc.bob_settings(); ++y)
      bob.push_back(random_projective(cfg.dim_b, sc.bob_outcomes[static_cast<size_t>(y)], gen));

    RestartTrace trace;
    double value = -std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < cfg.max_iters; ++sweep) {
      auto prev_alice = alice;
      auto prev_bob = bob;
      auto prev_state = state;
      for (int x = 0; x < sc.alice_settings(); ++x)
        alice[static_cast<size_t>(x)] = optimize_measurement(
            effective_operators(f, state, cfg.dim_a, cfg.dim_b, bob, scenarios::Party::alice, x),
            cfg.dim_a);
      for (int y = 0; y < sc.bob_settings(); ++y)
        bob[static_cast<size_t>(y)] = optimize_measurement(
            effective_operators(f, state, cfg.dim_a, cfg.dim_b, alice, scenarios::Party::bob, y),
            cfg.dim_b);
      const CMatrix w = bell_operator(f, alice, bob);
      const auto eig = qcore::hermitian_eig(w);
      const double next = eig.eigenvalues.front();
      if (next < value - 1e-12) {
        // A numerically regressive sweep: keep the previous iterate.
        alice = std::move(prev_alice);
        bob = std::move(prev_bob);
        state = std::move(prev_state);
        trace.converged = true;
        break;
      }
      std::vector<Complex> top(static_cast<size_t>(dim));
      for (int i = 0; i < dim; ++i) top[static_cast<size_t>(i)] = eig.eigenvectors(i, 0);
      state = qcore::DensityOp::from_pure(top);
      trace.values.push_back(next);
      const bool settled = sweep > 0 && next - value < cfg.tol;
      value = std::max(value, next);
      if (settled) {
        trace.converged = true;
        break;
      }
    }
    if (!trace.converged) result.all_converged = false;
    if (!have_best || value > result.best_value) {
      have_best = true;
      result.best_value = value;
      result.best_restart = rs;
      result.best_strategy =
          scenarios::QuantumStrategy(state, cfg.dim_a, cfg.dim_b, alice, bob);
    }
    result.restarts.push_back(std::move(trace));
  }
  return result;
}

}  // namespace bellcert::seesaw
