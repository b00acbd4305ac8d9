#include "bellcert/sdp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace bellcert::sdp {

namespace {

// Real symmetric sparse entry; (r, c) with r <= c stands for the value at
// both mirror positions.
struct REntry {
  int blk, r, c;
  double v;
};

using Dense = std::vector<Eigen::MatrixXd>;

struct Lowered {
  std::vector<int> dims;          // real block dimensions
  std::vector<bool> embedded;     // block uses the [[Re,-Im],[Im,Re]] doubling
  std::vector<REntry> c;          // objective (internal sense: minimize)
  std::vector<std::vector<REntry>> a;
  std::vector<double> b;
  double obj_sign = 1.0;          // multiply internal values by this to report
  double obj_const = 0.0;
  int total_dim = 0;
};

void append_real(std::vector<REntry>& out, int blk, int d, bool embed, const Entry& e,
                 double scale) {
  const double re = e.value.real() * scale;
  const double im = e.value.imag() * scale;
  if (!embed) {
    out.push_back({blk, e.row, e.col, re});
    return;
  }
  // Half of the real embedding keeps <C,Z> values unchanged.
  out.push_back({blk, e.row, e.col, 0.5 * re});
  out.push_back({blk, e.row + d, e.col + d, 0.5 * re});
  if (im != 0.0) {
    out.push_back({blk, e.col, e.row + d, 0.5 * im});
    out.push_back({blk, e.row, e.col + d, -0.5 * im});
  }
}

// Merge duplicate (blk, r, c) keys so inner products and rank updates see
// each position once.
std::vector<REntry> merged(std::vector<REntry> es) {
  std::sort(es.begin(), es.end(), [](const REntry& x, const REntry& y) {
    return std::tie(x.blk, x.r, x.c) < std::tie(y.blk, y.r, y.c);
  });
  std::vector<REntry> out;
  for (const auto& e : es) {
    if (!out.empty() && out.back().blk == e.blk && out.back().r == e.r && out.back().c == e.c)
      out.back().v += e.v;
    else
      out.push_back(e);
  }
  std::erase_if(out, [](const REntry& e) { return e.v == 0.0; });
  return out;
}

Lowered lower(const SdpProblem& p) {
  p.validate();
  const int nb = static_cast<int>(p.block_dims.size());
  std::vector<bool> embed(static_cast<size_t>(nb), false);
  auto scan = [&](const std::vector<Entry>& es) {
    for (const auto& e : es)
      if (e.value.imag() != 0.0) embed[static_cast<size_t>(e.block)] = true;
  };
  scan(p.objective);
  for (const auto& con : p.constraints) scan(con.matrix);

  Lowered l;
  l.embedded = embed;
  for (int k = 0; k < nb; ++k) {
    l.dims.push_back(embed[static_cast<size_t>(k)] ? 2 * p.block_dims[static_cast<size_t>(k)]
                                                   : p.block_dims[static_cast<size_t>(k)]);
    l.total_dim += l.dims.back();
  }
  l.obj_sign = (p.sense == Sense::maximize) ? -1.0 : 1.0;
  l.obj_const = p.objective_constant;
  for (const auto& e : p.objective)
    append_real(l.c, e.block, p.block_dims[static_cast<size_t>(e.block)],
                embed[static_cast<size_t>(e.block)], e, l.obj_sign);
  l.c = merged(std::move(l.c));
  for (const auto& con : p.constraints) {
    std::vector<REntry> a;
    for (const auto& e : con.matrix)
      append_real(a, e.block, p.block_dims[static_cast<size_t>(e.block)],
                  embed[static_cast<size_t>(e.block)], e, 1.0);
    l.a.push_back(merged(std::move(a)));
    l.b.push_back(con.rhs);
  }
  return l;
}

double inner(const std::vector<REntry>& s, const Dense& x) {
  double t = 0.0;
  for (const auto& e : s)
    t += (e.r == e.c ? 1.0 : 2.0) * e.v * x[static_cast<size_t>(e.blk)](e.r, e.c);
  return t;
}

void scatter(Dense& x, const std::vector<REntry>& s, double scale) {
  for (const auto& e : s) {
    x[static_cast<size_t>(e.blk)](e.r, e.c) += scale * e.v;
    if (e.r != e.c) x[static_cast<size_t>(e.blk)](e.c, e.r) += scale * e.v;
  }
}

Dense zeros(const std::vector<int>& dims) {
  Dense x;
  for (int d : dims) x.push_back(Eigen::MatrixXd::Zero(d, d));
  return x;
}

Dense identity(const std::vector<int>& dims) {
  Dense x;
  for (int d : dims) x.push_back(Eigen::MatrixXd::Identity(d, d));
  return x;
}

double dot_blocks(const Dense& x, const Dense& y) {
  double t = 0.0;
  for (size_t k = 0; k < x.size(); ++k) t += (x[k].array() * y[k].array()).sum();
  return t;
}

double fro_norm(const Dense& x) {
  double t = 0.0;
  for (const auto& m : x) t += m.squaredNorm();
  return std::sqrt(t);
}

// Enforce the commutation symmetry J X J^T = X of embedded blocks; keeps the
// complex structure exact against roundoff drift.
void j_symmetrize(Dense& x, const std::vector<bool>& embedded) {
  for (size_t k = 0; k < x.size(); ++k) {
    x[k] = 0.5 * (x[k] + x[k].transpose()).eval();
    if (!embedded[k]) continue;
    const int d = static_cast<int>(x[k].rows()) / 2;
    Eigen::MatrixXd pp = 0.5 * (x[k].topLeftCorner(d, d) + x[k].bottomRightCorner(d, d));
    Eigen::MatrixXd qq = 0.5 * (x[k].topRightCorner(d, d) - x[k].bottomLeftCorner(d, d));
    qq = 0.5 * (qq - qq.transpose()).eval();  // imaginary part is antisymmetric
    x[k].topLeftCorner(d, d) = pp;
    x[k].bottomRightCorner(d, d) = pp;
    x[k].topRightCorner(d, d) = qq;
    x[k].bottomLeftCorner(d, d) = -qq;
  }
}

struct NtScaling {
  Dense g, ginv, w;
  std::vector<Eigen::VectorXd> lam;
  Dense lx, ls;  // Cholesky factors of X and S
  bool ok = false;
};

NtScaling nt_scaling(const Dense& x, const Dense& s) {
  NtScaling nt;
  for (size_t k = 0; k < x.size(); ++k) {
    Eigen::LLT<Eigen::MatrixXd> cx(x[k]);
    Eigen::LLT<Eigen::MatrixXd> cs(s[k]);
    if (cx.info() != Eigen::Success || cs.info() != Eigen::Success) return nt;
    Eigen::MatrixXd lx = cx.matrixL();
    Eigen::MatrixXd ls = cs.matrixL();
    Eigen::MatrixXd rl = ls.transpose() * lx;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rl, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::VectorXd lam = svd.singularValues();
    if (lam.minCoeff() <= 0.0) return nt;
    Eigen::VectorXd isq = lam.cwiseSqrt().cwiseInverse();
    nt.g.push_back(lx * svd.matrixV() * isq.asDiagonal());
    nt.ginv.push_back(isq.asDiagonal() * svd.matrixU().transpose() * ls.transpose());
    nt.w.push_back(nt.g.back() * nt.g.back().transpose());
    nt.lam.push_back(std::move(lam));
    nt.lx.push_back(std::move(lx));
    nt.ls.push_back(std::move(ls));
  }
  nt.ok = true;
  return nt;
}

// Largest step alpha with X + alpha*dX staying PSD, via the minimum
// eigenvalue of L^-1 dX L^-T.
double step_to_boundary(const Dense& x_chol, const Dense& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < dx.size(); ++k) {
    Eigen::MatrixXd t = x_chol[k].triangularView<Eigen::Lower>().solve(dx[k]);
    t = x_chol[k].triangularView<Eigen::Lower>().solve(t.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    const double mn = es.eigenvalues()(0);
    if (mn < 0.0) alpha = std::min(alpha, -1.0 / mn);
  }
  return alpha;
}

struct Presolve {
  std::vector<int> keep;     // indices of retained constraints
  bool inconsistent = false;
  double mismatch = 0.0;
  std::vector<double> farkas;  // certificate when inconsistent
};

// Pivoted Cholesky on the constraint Gram matrix detects dependent rows;
// dependent-but-consistent rows are dropped, inconsistent ones produce an
// exact Farkas certificate.
Presolve presolve_rank(const Lowered& l) {
  const int m = static_cast<int>(l.a.size());
  Eigen::MatrixXd gram(m, m);
  for (int i = 0; i < m; ++i) {
    Dense ai = zeros(l.dims);
    scatter(ai, l.a[static_cast<size_t>(i)], 1.0);
    for (int j = i; j < m; ++j) {
      const double v = inner(l.a[static_cast<size_t>(j)], ai);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }

  Presolve out;
  const double maxdiag = std::max(gram.diagonal().maxCoeff(), 1e-300);
  Eigen::VectorXd resid = gram.diagonal();
  Eigen::MatrixXd lrows = Eigen::MatrixXd::Zero(m, m);  // rows of pivoted factor
  std::vector<int> order;
  std::vector<bool> used(static_cast<size_t>(m), false);
  for (int round = 0; round < m; ++round) {
    int piv = -1;
    double best = 1e-12 * maxdiag;
    for (int i = 0; i < m; ++i)
      if (!used[static_cast<size_t>(i)] && resid(i) > best) {
        best = resid(i);
        piv = i;
      }
    if (piv < 0) break;
    used[static_cast<size_t>(piv)] = true;
    const int t = static_cast<int>(order.size());
    const double d = std::sqrt(resid(piv));
    for (int i = 0; i < m; ++i) {
      double v = gram(piv, i);
      for (int u = 0; u < t; ++u) v -= lrows(u, piv) * lrows(u, i);
      lrows(t, i) = v / d;
    }
    for (int i = 0; i < m; ++i)
      if (!used[static_cast<size_t>(i)]) resid(i) = std::max(0.0, resid(i) - lrows(t, i) * lrows(t, i));
    order.push_back(piv);
  }
  out.keep = order;
  std::sort(out.keep.begin(), out.keep.end());
  if (static_cast<int>(order.size()) == m) return out;

  // Express each dependent row in the retained basis and check its rhs.
  const int r = static_cast<int>(order.size());
  Eigen::MatrixXd gss(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) gss(i, j) = gram(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gss);
  double bscale = 1.0;
  for (double v : l.b) bscale = std::max(bscale, std::abs(v));
  for (int dep = 0; dep < m; ++dep) {
    if (used[static_cast<size_t>(dep)]) continue;
    Eigen::VectorXd rhs(r);
    for (int i = 0; i < r; ++i) rhs(i) = gram(order[static_cast<size_t>(i)], dep);
    Eigen::VectorXd coef = ldlt.solve(rhs);
    double combo = 0.0;
    for (int i = 0; i < r; ++i) combo += coef(i) * l.b[static_cast<size_t>(order[static_cast<size_t>(i)])];
    const double mismatch = l.b[static_cast<size_t>(dep)] - combo;
    if (std::abs(mismatch) > 1e-8 * bscale) {
      out.inconsistent = true;
      out.mismatch = std::abs(mismatch);
      out.farkas.assign(static_cast<size_t>(m), 0.0);
      const double sign = mismatch > 0.0 ? 1.0 : -1.0;
      out.farkas[static_cast<size_t>(dep)] = sign;
      for (int i = 0; i < r; ++i)
        out.farkas[static_cast<size_t>(order[static_cast<size_t>(i)])] = -sign * coef(i);
      return out;
    }
  }
  return out;
}

qcore::CMatrix extract_block(const Eigen::MatrixXd& m, bool embedded) {
  if (!embedded) {
    qcore::CMatrix out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
    return out;
  }
  const int d = static_cast<int>(m.rows()) / 2;
  qcore::CMatrix out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      out(i, j) = qcore::Complex(0.5 * (m(i, j) + m(i + d, j + d)),
                                 0.5 * (m(i + d, j) - m(i, j + d)));
  return out;
}

struct Iterate {
  Dense x, s;
  std::vector<double> y;
  double tau = 1.0, kappa = 1.0;
};

}  // namespace

void SdpProblem::validate() const {
  if (block_dims.empty()) throw std::invalid_argument("sdp problem needs at least one block");
  for (int d : block_dims)
    if (d < 1) throw std::invalid_argument("sdp block dimension must be positive");
  if (constraints.empty()) throw std::invalid_argument("sdp problem needs at least one constraint");
  auto check = [&](const std::vector<Entry>& es) {
    for (const auto& e : es) {
      if (e.block < 0 || e.block >= static_cast<int>(block_dims.size()))
        throw std::invalid_argument("sdp entry block out of range");
      const int d = block_dims[static_cast<size_t>(e.block)];
      if (e.row < 0 || e.col < 0 || e.row >= d || e.col >= d || e.row > e.col)
        throw std::invalid_argument("sdp entry indices invalid (need row <= col in range)");
      if (e.row == e.col && std::abs(e.value.imag()) > 1e-12)
        throw std::invalid_argument("sdp diagonal entry must be real");
    }
  };
  check(objective);
  for (const auto& c : constraints) check(c.matrix);
}

SdpSolution solve(const SdpProblem& p, const Options& opt) {
  Lowered l = lower(p);
  const int m_full = static_cast<int>(l.a.size());
  SdpSolution sol;
  sol.y.assign(static_cast<size_t>(m_full), 0.0);

  // Presolve: prune dependent equality rows, or certify inconsistency.
  std::vector<int> keep(static_cast<size_t>(m_full));
  for (int i = 0; i < m_full; ++i) keep[static_cast<size_t>(i)] = i;
  if (m_full <= opt.presolve_limit) {
    Presolve pre = presolve_rank(l);
    if (pre.inconsistent) {
      sol.status = Status::infeasible;
      sol.detail = "inconsistent equality constraints";
      sol.y = pre.farkas;
      double ny = 0.0, by = 0.0;
      for (int i = 0; i < m_full; ++i) {
        ny += sol.y[static_cast<size_t>(i)] * sol.y[static_cast<size_t>(i)];
        by += sol.y[static_cast<size_t>(i)] * l.b[static_cast<size_t>(i)];
      }
      sol.infeasibility_margin = by / std::max(std::sqrt(ny), 1e-300);
      return sol;
    }
    if (static_cast<int>(pre.keep.size()) < m_full) {
      keep = pre.keep;
      std::vector<std::vector<REntry>> a2;
      std::vector<double> b2;
      for (int i : keep) {
        a2.push_back(std::move(l.a[static_cast<size_t>(i)]));
        b2.push_back(l.b[static_cast<size_t>(i)]);
      }
      l.a = std::move(a2);
      l.b = std::move(b2);
    }
  }
  const int m = static_cast<int>(l.a.size());
  const int ncone = l.total_dim;

  // Scatter lists for fast <A_i, B> evaluation on column-major blocks.
  std::vector<std::vector<int>> sc_blk(static_cast<size_t>(m)), sc_idx(static_cast<size_t>(m));
  std::vector<std::vector<double>> sc_w(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i)
    for (const auto& e : l.a[static_cast<size_t>(i)]) {
      sc_blk[static_cast<size_t>(i)].push_back(e.blk);
      sc_idx[static_cast<size_t>(i)].push_back(e.r * l.dims[static_cast<size_t>(e.blk)] + e.c);
      sc_w[static_cast<size_t>(i)].push_back(e.r == e.c ? e.v : 2.0 * e.v);
    }

  Eigen::Map<const Eigen::VectorXd> b(l.b.data(), m);
  const double bnorm = b.norm();
  Dense cmat = zeros(l.dims);
  scatter(cmat, l.c, 1.0);
  double cnorm = 0.0;
  for (const auto& blk : cmat) cnorm = std::hypot(cnorm, blk.norm());

  Iterate it;
  it.x = identity(l.dims);
  it.s = identity(l.dims);
  it.y.assign(static_cast<size_t>(m), 0.0);
  const double mu0 = 1.0;

  Eigen::MatrixXd schur(m, m);
  Eigen::MatrixXd schur_raw(m, m);
  Iterate best = it;
  double best_metric = std::numeric_limits<double>::infinity();
  int stall = 0;
  std::string exit_detail = "iteration limit reached";

  auto a_apply = [&](const Dense& x) {
    Eigen::VectorXd v(m);
    for (int i = 0; i < m; ++i) v(i) = inner(l.a[static_cast<size_t>(i)], x);
    return v;
  };

  // Schur matrix M_ij = <A_i, W A_j W>, lower triangle, factored in place.
  std::optional<Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>>> llt;
  auto build_schur = [&](const NtScaling& nt, double ridge) {
    Dense bj = zeros(l.dims);
    std::vector<char> touched(l.dims.size(), 0);
    for (int j = 0; j < m; ++j) {
      for (size_t k = 0; k < touched.size(); ++k)
        if (touched[k]) {
          bj[k].setZero();
          touched[k] = 0;
        }
      for (const auto& e : l.a[static_cast<size_t>(j)]) {
        touched[static_cast<size_t>(e.blk)] = 1;
        auto view = bj[static_cast<size_t>(e.blk)].selfadjointView<Eigen::Lower>();
        if (e.r == e.c)
          view.rankUpdate(nt.w[static_cast<size_t>(e.blk)].col(e.r), e.v);
        else
          view.rankUpdate(nt.w[static_cast<size_t>(e.blk)].col(e.r),
                          nt.w[static_cast<size_t>(e.blk)].col(e.c), e.v);
      }
      for (int i = j; i < m; ++i) {
        double t = 0.0;
        const auto& blks = sc_blk[static_cast<size_t>(i)];
        const auto& idxs = sc_idx[static_cast<size_t>(i)];
        const auto& ws = sc_w[static_cast<size_t>(i)];
        for (size_t u = 0; u < blks.size(); ++u) {
          if (!touched[static_cast<size_t>(blks[u])]) continue;
          // (r, c) with r <= c read from the lower triangle at (c, r).
          t += ws[u] * bj[static_cast<size_t>(blks[u])].data()[idxs[u]];
        }
        schur(i, j) = t;
      }
      schur(j, j) += ridge;
    }
  };
  auto factorize = [&](const NtScaling& nt) {
    double ridge = 0.0;
    build_schur(nt, ridge);
    schur_raw = schur;
    llt.emplace(schur);
    for (int attempt = 0; attempt < 3 && llt->info() != Eigen::Success; ++attempt) {
      ridge = (ridge == 0.0) ? 1e-12 * (1.0 + schur_raw.diagonal().maxCoeff()) : ridge * 100.0;
      build_schur(nt, ridge);
      schur_raw = schur;
      llt.emplace(schur);
    }
    return llt->info() == Eigen::Success;
  };
  // One pass of iterative refinement; the factorization is in-place, the
  // unfactored copy supplies the residual.
  auto solve_ref = [&](const Eigen::VectorXd& rhs) {
    Eigen::VectorXd v = llt->solve(rhs);
    v += llt->solve(rhs - schur_raw.selfadjointView<Eigen::Lower>() * v);
    return v;
  };

  std::vector<double> alpha_hist, mu_hist;
  bool split_phase = false;

  int iter = 0;
  for (; iter < opt.max_iterations; ++iter) {
    Eigen::Map<Eigen::VectorXd> y(it.y.data(), m);

    // Residuals of the homogeneous model.
    Eigen::VectorXd rp = b * it.tau - a_apply(it.x);
    Dense rd = cmat;
    for (auto& blk : rd) blk *= it.tau;
    for (int i = 0; i < m; ++i) scatter(rd, l.a[static_cast<size_t>(i)], -it.y[static_cast<size_t>(i)]);
    for (size_t k = 0; k < rd.size(); ++k) rd[k] -= it.s[k];
    const double cx = inner(l.c, it.x);
    const double by = b.dot(y);
    const double rg = by - cx - it.kappa;
    const double mu = (dot_blocks(it.x, it.s) + it.tau * it.kappa) / (ncone + 1);

    const double pinf = (rp / it.tau).norm() / (1.0 + bnorm);
    const double dinf = fro_norm(rd) / it.tau / (1.0 + cnorm);
    const double pobj = cx / it.tau;
    const double dobj = by / it.tau;
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double metric = std::max({pinf, dinf, relgap});

    if (opt.collect_trace) sol.trace.push_back({iter, mu, 0.0, relgap, pinf, dinf});
    if (metric < best_metric) {
      best_metric = metric;
      best = it;
    }

    if (pinf <= opt.tol && dinf <= opt.tol && relgap <= opt.tol) {
      exit_detail = "optimal";
      sol.status = Status::optimal;
      best = it;
      break;
    }

    // Infeasibility ray: tau collapses while kappa stays bounded away.
    if (it.tau < 1e-10 * std::max(1.0, it.kappa) && mu < 1e-10 * mu0) {
      const double yn = y.norm();
      if (by > 1e-14 && yn > 0.0) {
        sol.status = Status::infeasible;
        sol.infeasibility_margin = by / yn;
        exit_detail = "primal infeasibility certificate";
        for (int i = 0; i < m; ++i) sol.y[static_cast<size_t>(keep[static_cast<size_t>(i)])] =
            it.y[static_cast<size_t>(i)];
        sol.iterations = iter;
        sol.detail = exit_detail;
        return sol;
      }
      if (cx < -1e-14) {
        sol.status = Status::infeasible;
        sol.infeasibility_margin = -cx / std::max(fro_norm(it.x), 1e-300);
        exit_detail = "dual infeasibility certificate (primal objective unbounded)";
        sol.iterations = iter;
        sol.detail = exit_detail;
        return sol;
      }
      exit_detail = "homogeneous ray without classification";
      break;
    }

    // Degeneracy traps the common homogeneous step at a constant fraction,
    // contracting the residuals linearly at that fixed rate. Once the iterate
    // is clearly feasible, hand it to a split-step phase instead.
    mu_hist.push_back(mu);
    if (iter >= 20 && metric < 3e-2 && it.kappa < 1e-2 * it.tau && alpha_hist.size() >= 6) {
      double amax = 0.0;
      double amin = 1.0;
      for (size_t u = alpha_hist.size() - 6; u < alpha_hist.size(); ++u) {
        amax = std::max(amax, alpha_hist[u]);
        amin = std::min(amin, alpha_hist[u]);
      }
      // Creep means short steps AND near-stalled mu (ratio < 1.35 over six
      // iterations is rate 0.95); healthy runs show steps of 0.3+ and ratios
      // near 2, and the split phase only hurts them.
      if (amax < 0.25 && amin > 0.02 && mu_hist[mu_hist.size() - 7] < 1.35 * mu) {
        split_phase = true;
        exit_detail = "switched to split-step refinement";
        break;
      }
    }

    NtScaling nt = nt_scaling(it.x, it.s);
    if (!nt.ok) {
      exit_detail = "cone boundary reached (scaling factorization failed)";
      break;
    }

    // Shared per-iteration quantities.
    Dense wcw(l.dims.size(), Eigen::MatrixXd());
    Dense wrdw(l.dims.size(), Eigen::MatrixXd());
    for (size_t k = 0; k < nt.w.size(); ++k) {
      wcw[k] = nt.w[k] * cmat[k] * nt.w[k];
      wrdw[k] = nt.w[k] * rd[k] * nt.w[k];
    }
    const Eigen::VectorXd g = a_apply(wcw);
    const double cc = dot_blocks(cmat, wcw);

    if (!factorize(nt)) {
      exit_detail = "schur factorization failed";
      break;
    }

    const Eigen::VectorXd q = b + g;
    const Eigen::VectorXd dy1 = solve_ref(q);
    const Eigen::VectorXd bg = b - g;
    const double den = bg.dot(dy1) + cc + it.kappa / it.tau;

    struct Direction {
      Dense dx, ds;
      Eigen::VectorXd dy;
      double dtau, dkappa;
    };
    // comp_rhs drives the linearized complementarity in the scaled space:
    // sym(lam o (dXhat + dShat)) = comp_rhs, tau*dkappa + kappa*dtau = rs.
    auto solve_direction = [&](double eta, const Dense& comp_rhs, double rs) -> Direction {
      Direction d;
      Dense t1(l.dims.size(), Eigen::MatrixXd());
      double mc = 0.0;
      Eigen::VectorXd h(m);
      for (size_t k = 0; k < nt.g.size(); ++k) {
        const auto& lam = nt.lam[k];
        const int n = static_cast<int>(lam.size());
        Eigen::MatrixXd rc(n, n);
        for (int i2 = 0; i2 < n; ++i2)
          for (int j2 = 0; j2 < n; ++j2)
            rc(i2, j2) = 2.0 * comp_rhs[k](i2, j2) / (lam(i2) + lam(j2));
        t1[k] = nt.g[k] * rc * nt.g[k].transpose();
      }
      for (int i2 = 0; i2 < m; ++i2)
        h(i2) = eta * (rp(i2) + inner(l.a[static_cast<size_t>(i2)], wrdw)) -
                inner(l.a[static_cast<size_t>(i2)], t1);
      mc = dot_blocks(cmat, t1) - eta * dot_blocks(cmat, wrdw);
      const Eigen::VectorXd dy2 = solve_ref(h);
      const double num = mc + rs / it.tau - eta * rg - bg.dot(dy2);
      d.dtau = num / den;
      d.dy = dy1 * d.dtau + dy2;
      d.ds = cmat;
      for (auto& blk : d.ds) blk *= d.dtau;
      for (int i2 = 0; i2 < m; ++i2) scatter(d.ds, l.a[static_cast<size_t>(i2)], -d.dy(i2));
      for (size_t k = 0; k < d.ds.size(); ++k) d.ds[k] += eta * rd[k];
      d.dx = t1;
      for (size_t k = 0; k < d.dx.size(); ++k) d.dx[k] -= nt.w[k] * d.ds[k] * nt.w[k];
      d.dkappa = (rs - it.kappa * d.dtau) / it.tau;
      return d;
    };

    auto boundary = [&](const Direction& d) {
      double a = std::min(step_to_boundary(nt.lx, d.dx), step_to_boundary(nt.ls, d.ds));
      if (d.dtau < 0.0) a = std::min(a, -it.tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -it.kappa / d.dkappa);
      return a;
    };

    // Predictor.
    Dense comp_rhs(l.dims.size(), Eigen::MatrixXd());
    for (size_t k = 0; k < nt.lam.size(); ++k) {
      comp_rhs[k] = Eigen::MatrixXd::Zero(nt.lam[k].size(), nt.lam[k].size());
      comp_rhs[k].diagonal() = (-nt.lam[k].array().square()).matrix();
    }
    Direction aff = solve_direction(1.0, comp_rhs, -it.tau * it.kappa);
    const double a_aff = std::min(1.0, boundary(aff));
    double gap_aff = it.tau * it.kappa + a_aff * (it.tau * aff.dkappa + it.kappa * aff.dtau) +
                     a_aff * a_aff * aff.dtau * aff.dkappa;
    for (size_t k = 0; k < it.x.size(); ++k) {
      gap_aff += ((it.x[k] + a_aff * aff.dx[k]).array() * (it.s[k] + a_aff * aff.ds[k]).array()).sum();
    }
    const double mu_aff = std::max(gap_aff, 0.0) / (ncone + 1);
    double sigma = std::pow(mu_aff / mu, 3.0);
    sigma = std::clamp(sigma, 1e-10, 0.99);

    // Corrector with the predictor's second-order term in the scaled space.
    for (size_t k = 0; k < nt.g.size(); ++k) {
      Eigen::MatrixXd dxh = nt.ginv[k] * aff.dx[k] * nt.ginv[k].transpose();
      Eigen::MatrixXd dsh = nt.g[k].transpose() * aff.ds[k] * nt.g[k];
      comp_rhs[k].noalias() = -0.5 * (dxh * dsh + dsh * dxh);
      comp_rhs[k].diagonal().array() += sigma * mu;
      comp_rhs[k].diagonal() -= nt.lam[k].array().square().matrix();
    }
    Direction dir = solve_direction(1.0 - sigma, comp_rhs,
                                    sigma * mu - it.tau * it.kappa - aff.dtau * aff.dkappa);
    double alpha = std::min(1.0, 0.99 * boundary(dir));

    // Extra centrality correctors: at an extended trial step, clip the scaled
    // complementarity spectrum into [0.1, 10] x mu_t and correct toward it,
    // reusing the factorization. Accept only if the step length grows.
    for (int rounds = 0; rounds < 3 && alpha < 0.95; ++rounds) {
      const double atil = std::min(1.0, alpha + 0.3);
      const double taut = it.tau + atil * dir.dtau;
      const double kappat = it.kappa + atil * dir.dkappa;
      double gap_t = taut * kappat;
      std::vector<Eigen::MatrixXd> xt(l.dims.size()), st(l.dims.size());
      for (size_t k = 0; k < nt.g.size(); ++k) {
        xt[k].noalias() = atil * (nt.ginv[k] * dir.dx[k] * nt.ginv[k].transpose());
        xt[k].diagonal() += nt.lam[k];
        st[k].noalias() = atil * (nt.g[k].transpose() * dir.ds[k] * nt.g[k]);
        st[k].diagonal() += nt.lam[k];
        gap_t += (xt[k].array() * st[k].array()).sum();
      }
      const double mu_t = std::max(gap_t, 0.0) / (ncone + 1);
      if (mu_t <= 0.0) break;
      for (size_t k = 0; k < nt.g.size(); ++k) {
        Eigen::MatrixXd prod = 0.5 * (xt[k] * st[k] + st[k] * xt[k]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prod);
        Eigen::VectorXd dev = (es.eigenvalues().array().max(0.1 * mu_t).min(10.0 * mu_t) -
                               es.eigenvalues().array())
                                  .matrix();
        comp_rhs[k].noalias() =
            es.eigenvectors() * dev.asDiagonal() * es.eigenvectors().transpose();
      }
      const double u_tk = std::clamp(taut * kappat, 0.1 * mu_t, 10.0 * mu_t) - taut * kappat;
      Direction ex = solve_direction(0.0, comp_rhs, u_tk);
      for (size_t k = 0; k < ex.dx.size(); ++k) {
        ex.dx[k] += dir.dx[k];
        ex.ds[k] += dir.ds[k];
      }
      ex.dy += dir.dy;
      ex.dtau += dir.dtau;
      ex.dkappa += dir.dkappa;
      const double a_ex = std::min(1.0, 0.99 * boundary(ex));
      if (a_ex < alpha + 0.01) break;
      dir = std::move(ex);
      alpha = a_ex;
    }
    if (opt.collect_trace) sol.trace.back().step = alpha;
    if (alpha < 1e-7) {
      if (++stall >= 3) {
        exit_detail = "step length collapsed";
        break;
      }
    } else {
      stall = 0;
    }

    for (size_t k = 0; k < it.x.size(); ++k) {
      it.x[k] += alpha * dir.dx[k];
      it.s[k] += alpha * dir.ds[k];
    }
    y += alpha * dir.dy;
    it.tau += alpha * dir.dtau;
    it.kappa += alpha * dir.dkappa;
    j_symmetrize(it.x, l.embedded);
    j_symmetrize(it.s, l.embedded);
    alpha_hist.push_back(alpha);
  }

  if (split_phase) {
    // Infeasible-start refinement with independent primal and dual step
    // lengths. When only one cone side blocks the step, the other still
    // moves at full stride, so both residuals keep contracting.
    {
      Eigen::Map<Eigen::VectorXd> y(it.y.data(), m);
      for (auto& blk : it.x) blk /= it.tau;
      for (auto& blk : it.s) blk /= it.tau;
      y /= it.tau;
      it.tau = 1.0;
      it.kappa = 0.0;
    }
    int stall2 = 0;
    for (; iter < opt.max_iterations; ++iter) {
      Eigen::Map<Eigen::VectorXd> y(it.y.data(), m);
      Eigen::VectorXd rp = b - a_apply(it.x);
      Dense rd = cmat;
      for (int i = 0; i < m; ++i) scatter(rd, l.a[static_cast<size_t>(i)], -it.y[static_cast<size_t>(i)]);
      for (size_t k = 0; k < rd.size(); ++k) rd[k] -= it.s[k];
      const double cx = inner(l.c, it.x);
      const double by = b.dot(y);
      const double mu = dot_blocks(it.x, it.s) / ncone;
      const double pinf = rp.norm() / (1.0 + bnorm);
      const double dinf = fro_norm(rd) / (1.0 + cnorm);
      const double relgap = std::abs(cx - by) / (1.0 + std::abs(cx) + std::abs(by));
      const double metric = std::max({pinf, dinf, relgap});

      if (opt.collect_trace) sol.trace.push_back({iter, mu, 0.0, relgap, pinf, dinf});
      if (metric < best_metric) {
        best_metric = metric;
        best = it;
      }
      if (pinf <= opt.tol && dinf <= opt.tol && relgap <= opt.tol) {
        exit_detail = "optimal";
        sol.status = Status::optimal;
        best = it;
        break;
      }

      NtScaling nt = nt_scaling(it.x, it.s);
      if (!nt.ok) {
        exit_detail = "cone boundary reached (scaling factorization failed)";
        break;
      }
      Dense wrdw(l.dims.size(), Eigen::MatrixXd());
      for (size_t k = 0; k < nt.w.size(); ++k) wrdw[k] = nt.w[k] * rd[k] * nt.w[k];
      if (!factorize(nt)) {
        exit_detail = "schur factorization failed";
        break;
      }

      struct Step {
        Dense dx, ds;
        Eigen::VectorXd dy;
      };
      auto direction = [&](double eta, const Dense& comp_rhs) -> Step {
        Step d;
        Dense t1(l.dims.size(), Eigen::MatrixXd());
        for (size_t k = 0; k < nt.g.size(); ++k) {
          const auto& lam = nt.lam[k];
          const int n = static_cast<int>(lam.size());
          Eigen::MatrixXd rc(n, n);
          for (int i2 = 0; i2 < n; ++i2)
            for (int j2 = 0; j2 < n; ++j2)
              rc(i2, j2) = 2.0 * comp_rhs[k](i2, j2) / (lam(i2) + lam(j2));
          t1[k] = nt.g[k] * rc * nt.g[k].transpose();
        }
        Eigen::VectorXd h(m);
        for (int i2 = 0; i2 < m; ++i2)
          h(i2) = eta * (rp(i2) + inner(l.a[static_cast<size_t>(i2)], wrdw)) -
                  inner(l.a[static_cast<size_t>(i2)], t1);
        d.dy = solve_ref(h);
        d.ds = zeros(l.dims);
        for (int i2 = 0; i2 < m; ++i2) scatter(d.ds, l.a[static_cast<size_t>(i2)], -d.dy(i2));
        for (size_t k = 0; k < d.ds.size(); ++k) d.ds[k] += eta * rd[k];
        d.dx = t1;
        for (size_t k = 0; k < d.dx.size(); ++k) d.dx[k] -= nt.w[k] * d.ds[k] * nt.w[k];
        return d;
      };

      Dense comp_rhs(l.dims.size(), Eigen::MatrixXd());
      for (size_t k = 0; k < nt.lam.size(); ++k) {
        comp_rhs[k] = Eigen::MatrixXd::Zero(nt.lam[k].size(), nt.lam[k].size());
        comp_rhs[k].diagonal() = (-nt.lam[k].array().square()).matrix();
      }
      Step aff = direction(1.0, comp_rhs);
      const double ap_aff = std::min(1.0, step_to_boundary(nt.lx, aff.dx));
      const double ad_aff = std::min(1.0, step_to_boundary(nt.ls, aff.ds));
      double gap_aff = 0.0;
      for (size_t k = 0; k < it.x.size(); ++k) {
        gap_aff +=
            ((it.x[k] + ap_aff * aff.dx[k]).array() * (it.s[k] + ad_aff * aff.ds[k]).array()).sum();
      }
      const double mu_aff = std::max(gap_aff, 0.0) / ncone;
      double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 1e-10, 0.99);

      // Residual reduction here is independent of sigma, so when one cone
      // side stalls the direction is recentered (larger sigma) until both
      // sides move; only gap progress is traded away.
      Step dir;
      double ap = 0.0;
      double ad = 0.0;
      for (;;) {
        for (size_t k = 0; k < nt.g.size(); ++k) {
          Eigen::MatrixXd dxh = nt.ginv[k] * aff.dx[k] * nt.ginv[k].transpose();
          Eigen::MatrixXd dsh = nt.g[k].transpose() * aff.ds[k] * nt.g[k];
          comp_rhs[k].noalias() = -0.5 * (dxh * dsh + dsh * dxh);
          comp_rhs[k].diagonal().array() += sigma * mu;
          comp_rhs[k].diagonal() -= nt.lam[k].array().square().matrix();
        }
        dir = direction(1.0, comp_rhs);
        ap = std::min(1.0, 0.98 * step_to_boundary(nt.lx, dir.dx));
        ad = std::min(1.0, 0.98 * step_to_boundary(nt.ls, dir.ds));
        if (std::min(ap, ad) >= 0.1 || sigma >= 0.9) break;
        sigma = 0.5 * (1.0 + sigma);
      }

      // Extra centrality correctors, split-step form: clip the spectrum of
      // the extended trial point's scaled products into [0.1, 10] x mu_t and
      // correct toward it, reusing the factorization. Keep only if the
      // combined step grows.
      for (int rounds = 0; rounds < 3 && std::min(ap, ad) < 0.95; ++rounds) {
        const double apt = std::min(1.0, ap + 0.3);
        const double adt = std::min(1.0, ad + 0.3);
        double gap_t = 0.0;
        std::vector<Eigen::MatrixXd> xt(l.dims.size()), st(l.dims.size());
        for (size_t k = 0; k < nt.g.size(); ++k) {
          xt[k].noalias() = apt * (nt.ginv[k] * dir.dx[k] * nt.ginv[k].transpose());
          xt[k].diagonal() += nt.lam[k];
          st[k].noalias() = adt * (nt.g[k].transpose() * dir.ds[k] * nt.g[k]);
          st[k].diagonal() += nt.lam[k];
          gap_t += (xt[k].array() * st[k].array()).sum();
        }
        const double mu_t = std::max(gap_t, 0.0) / ncone;
        if (mu_t <= 0.0) break;
        for (size_t k = 0; k < nt.g.size(); ++k) {
          Eigen::MatrixXd prod = 0.5 * (xt[k] * st[k] + st[k] * xt[k]);
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prod);
          Eigen::VectorXd dev = (es.eigenvalues().array().max(0.1 * mu_t).min(10.0 * mu_t) -
                                 es.eigenvalues().array())
                                    .matrix();
          comp_rhs[k].noalias() =
              es.eigenvectors() * dev.asDiagonal() * es.eigenvectors().transpose();
        }
        Step ex = direction(0.0, comp_rhs);
        for (size_t k = 0; k < ex.dx.size(); ++k) {
          ex.dx[k] += dir.dx[k];
          ex.ds[k] += dir.ds[k];
        }
        ex.dy += dir.dy;
        const double ap_ex = std::min(1.0, 0.98 * step_to_boundary(nt.lx, ex.dx));
        const double ad_ex = std::min(1.0, 0.98 * step_to_boundary(nt.ls, ex.ds));
        if (ap_ex + ad_ex < ap + ad + 0.02) break;
        dir = std::move(ex);
        ap = ap_ex;
        ad = ad_ex;
      }
      if (opt.collect_trace) sol.trace.back().step = std::min(ap, ad);
      if (std::max(ap, ad) < 1e-7) {
        if (++stall2 >= 3) {
          exit_detail = "step length collapsed";
          break;
        }
      } else {
        stall2 = 0;
      }

      for (size_t k = 0; k < it.x.size(); ++k) {
        it.x[k] += ap * dir.dx[k];
        it.s[k] += ad * dir.ds[k];
      }
      y += ad * dir.dy;
      j_symmetrize(it.x, l.embedded);
      j_symmetrize(it.s, l.embedded);
    }
  }

  // Report the best iterate, normalized by tau.
  const Iterate& fin = best;
  Eigen::Map<const Eigen::VectorXd> yfin(fin.y.data(), m);
  const double tau = fin.tau;
  const double pobj = inner(l.c, fin.x) / tau;
  const double dobj = b.dot(yfin) / tau;
  sol.primal_value = l.obj_sign * pobj + l.obj_const;
  sol.dual_value = l.obj_sign * dobj + l.obj_const;
  sol.rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
  sol.primal_infeas = (b - a_apply(fin.x) / tau).norm() / (1.0 + bnorm);
  Dense rd = cmat;
  for (int i = 0; i < m; ++i) scatter(rd, l.a[static_cast<size_t>(i)], -fin.y[static_cast<size_t>(i)] / tau);
  for (size_t k = 0; k < rd.size(); ++k) rd[k] -= fin.s[k] / tau;
  sol.dual_infeas = fro_norm(rd) / (1.0 + cnorm);
  for (size_t k = 0; k < fin.x.size(); ++k) {
    sol.z_blocks.push_back(extract_block(fin.x[k] / tau, l.embedded[k]));
    sol.slack_blocks.push_back(extract_block(fin.s[k] / tau, l.embedded[k]));
  }
  for (int i = 0; i < m; ++i)
    sol.y[static_cast<size_t>(keep[static_cast<size_t>(i)])] =
        l.obj_sign * fin.y[static_cast<size_t>(i)] / tau;
  sol.iterations = iter;
  sol.detail = exit_detail;
  sol.status = (exit_detail == "optimal") ? Status::optimal : Status::numerical_failure;
  return sol;
}

SdpSolution feasibility(const SdpProblem& p, const Options& opt) {
  SdpProblem q = p;
  q.objective.clear();
  q.objective_constant = 0.0;
  return solve(q, opt);
}

void export_sdpa(const SdpProblem& p, std::ostream& os) {
  Lowered l = lower(p);
  const int m = static_cast<int>(l.a.size());
  os << "\"exported problem: internal sense minimize <C,Z>, SDPA dual form\"\n";
  os << m << " = mDIM\n";
  os << l.dims.size() << " = nBLOCK\n";
  for (size_t k = 0; k < l.dims.size(); ++k) os << l.dims[k] << (k + 1 < l.dims.size() ? " " : "");
  os << " = bLOCKsTRUCT\n";
  for (int i = 0; i < m; ++i) os << -l.b[static_cast<size_t>(i)] << (i + 1 < m ? " " : "");
  os << "\n";
  // SDPA: X = sum_i x_i F_i - F_0 >= 0 with objective min c^T x; our dual
  // "max b^T y with C - sum y_i A_i >= 0" maps to c = -b, F_0 = -C, F_i = -A_i.
  char buf[160];
  for (const auto& e : l.c) {
    std::snprintf(buf, sizeof buf, "0 %d %d %d %.17g\n", e.blk + 1, e.r + 1, e.c + 1, -e.v);
    os << buf;
  }
  for (int i = 0; i < m; ++i)
    for (const auto& e : l.a[static_cast<size_t>(i)]) {
      std::snprintf(buf, sizeof buf, "%d %d %d %d %.17g\n", i + 1, e.blk + 1, e.r + 1, e.c + 1, -e.v);
      os << buf;
    }
}

}  // namespace bellcert::sdp
