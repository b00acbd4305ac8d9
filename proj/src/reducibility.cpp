#include <cmath>
#include <optional>

#include "bellcert/qcore.hpp"
#include "bellcert/scenarios.hpp"
#include "bellcert/sdp.hpp"

namespace bellcert::scenarios {

namespace {

constexpr double kReconstructionTol = 1e-7;  // reducible when met
constexpr double kMarginTol = 1e-6;          // irreducible when exceeded
constexpr double kWeightCutoff = 1e-6;       // mixture components below are dropped

// Push the Hermitian matrix equality <target block sum> = rhs into real
// equality rows, one per independent real degree of freedom.
void add_matrix_equality(sdp::SdpProblem& p, const std::vector<int>& blocks,
                         const std::vector<double>& scales, int extra_block,
                         double extra_scale, const qcore::CMatrix& rhs) {
  const int d = rhs.rows();
  for (int r = 0; r < d; ++r)
    for (int c = r; c < d; ++c) {
      sdp::Constraint re;
      for (size_t t = 0; t < blocks.size(); ++t)
        re.matrix.push_back({blocks[t], r, c, scales[t]});
      if (extra_block >= 0 && r == c) re.matrix.push_back({extra_block, 0, 0, extra_scale});
      re.rhs = (r == c ? 1.0 : 2.0) * rhs(r, c).real();
      p.constraints.push_back(std::move(re));
      if (r < c) {
        sdp::Constraint im;
        for (size_t t = 0; t < blocks.size(); ++t)
          im.matrix.push_back({blocks[t], r, c, qcore::Complex(0.0, scales[t])});
        im.rhs = 2.0 * rhs(r, c).imag();
        p.constraints.push_back(std::move(im));
      }
    }
}

}  // namespace

ReducibilityResult decompose_into_fewer_outcomes(const qcore::Povm& m) {
  const int n = static_cast<int>(m.effects().size());
  const int d = m.dim();
  ReducibilityResult res;
  if (n == 1) {
    // No POVM with zero outcomes exists, so a single-outcome POVM admits no
    // fewer-outcome simulation by definition.
    res.verdict = ReducibilityVerdict::irreducible;
    res.infeasibility_margin = 1.0;
    return res;
  }

  // Feasibility program: blocks F_k^(j) for ordered pairs j != k, then the
  // mixture weights p_j as 1x1 blocks.
  sdp::SdpProblem p;
  auto fblock = [&](int j, int k) { return j * (n - 1) + (k < j ? k : k - 1); };
  const int pblock0 = n * (n - 1);
  for (int t = 0; t < n * (n - 1); ++t) p.block_dims.push_back(d);
  for (int j = 0; j < n; ++j) p.block_dims.push_back(1);

  qcore::CMatrix zero(d, d);
  for (int j = 0; j < n; ++j) {
    // sum_k F_k^(j) - p_j I = 0: the j-th component is p_j times a POVM.
    std::vector<int> blocks;
    std::vector<double> scales;
    for (int k = 0; k < n; ++k)
      if (k != j) {
        blocks.push_back(fblock(j, k));
        scales.push_back(1.0);
      }
    add_matrix_equality(p, blocks, scales, pblock0 + j, -1.0, zero);
  }
  for (int k = 0; k < n; ++k) {
    // sum_j F_k^(j) = E_k: the mixture reconstructs each effect.
    std::vector<int> blocks;
    std::vector<double> scales;
    for (int j = 0; j < n; ++j)
      if (j != k) {
        blocks.push_back(fblock(j, k));
        scales.push_back(1.0);
      }
    add_matrix_equality(p, blocks, scales, -1, 0.0, m.effects()[static_cast<size_t>(k)]);
  }
  {
    // sum_j p_j = 1; implied by the rows above, kept for explicitness.
    sdp::Constraint c;
    for (int j = 0; j < n; ++j) c.matrix.push_back({pblock0 + j, 0, 0, 1.0});
    c.rhs = 1.0;
    p.constraints.push_back(std::move(c));
  }

  sdp::Options opt;
  opt.tol = 1e-9;
  auto sol = sdp::feasibility(p, opt);

  if (sol.status == sdp::Status::infeasible) {
    res.infeasibility_margin = sol.infeasibility_margin;
    res.verdict = sol.infeasibility_margin >= kMarginTol ? ReducibilityVerdict::irreducible
                                                         : ReducibilityVerdict::inconclusive;
    return res;
  }
  if (sol.status != sdp::Status::optimal) {
    res.verdict = ReducibilityVerdict::inconclusive;
    return res;
  }

  ReducibilityDecomposition dec;
  dec.weights.assign(static_cast<size_t>(n), 0.0);
  dec.sub_povms.assign(static_cast<size_t>(n), std::nullopt);
  for (int j = 0; j < n; ++j) {
    const double pj = sol.z_blocks[static_cast<size_t>(pblock0 + j)](0, 0).real();
    if (pj <= kWeightCutoff) continue;
    dec.weights[static_cast<size_t>(j)] = pj;
    std::vector<qcore::CMatrix> effects;
    qcore::CMatrix total(d, d);
    for (int k = 0; k < n; ++k) {
      if (k == j) {
        effects.push_back(zero);
        continue;
      }
      qcore::CMatrix g = sol.z_blocks[static_cast<size_t>(fblock(j, k))];
      g *= 1.0 / pj;
      g = qcore::clamp_psd(g);
      total += g;
      effects.push_back(std::move(g));
    }
    // Repair completeness exactly: G_k <- T G_k T with T = (sum G)^(-1/2).
    qcore::CMatrix t = qcore::inverse_sqrt(total);
    for (int k = 0; k < n; ++k) {
      if (k == j) continue;
      effects[static_cast<size_t>(k)] = t * effects[static_cast<size_t>(k)] * t;
    }
    dec.sub_povms[static_cast<size_t>(j)] = qcore::Povm(d, effects);
  }

  // Reconstruction error of the cleaned decomposition.
  double err = 0.0;
  for (int k = 0; k < n; ++k) {
    qcore::CMatrix acc(d, d);
    for (int j = 0; j < n; ++j)
      if (dec.sub_povms[static_cast<size_t>(j)]) {
        qcore::CMatrix g = dec.sub_povms[static_cast<size_t>(j)]->effects()[static_cast<size_t>(k)];
        g *= dec.weights[static_cast<size_t>(j)];
        acc += g;
      }
    acc -= m.effects()[static_cast<size_t>(k)];
    err = std::max(err, acc.max_abs());
  }
  res.reconstruction_error = err;
  if (err <= kReconstructionTol) {
    res.verdict = ReducibilityVerdict::reducible;
    res.decomposition = std::move(dec);
  } else {
    res.verdict = ReducibilityVerdict::inconclusive;
  }
  return res;
}

}  // namespace bellcert::scenarios
