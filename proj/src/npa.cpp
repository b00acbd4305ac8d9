#include "bellcert/npa.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace bellcert::npa {

namespace {

// Reduce one party-sorted segment in place; returns false on annihilation.
bool reduce_segment(std::vector<Symbol>& w) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i + 1 < w.size(); ++i) {
      if (w[i] == w[i + 1]) {
        w.erase(w.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        changed = true;
        break;
      }
      if (w[i].party == w[i + 1].party && w[i].setting == w[i + 1].setting)
        return false;  // orthogonal projectors of one measurement
    }
  }
  return true;
}

// Alice and Bob symbols for one functional, last outcome eliminated.
std::vector<Symbol> scenario_symbols(const scenarios::Scenario& sc) {
  std::vector<Symbol> out;
  for (int x = 0; x < sc.alice_settings(); ++x)
    for (int a = 0; a + 1 < sc.alice_outcomes[static_cast<size_t>(x)]; ++a)
      out.push_back({0, x, a});
  for (int y = 0; y < sc.bob_settings(); ++y)
    for (int b = 0; b + 1 < sc.bob_outcomes[static_cast<size_t>(y)]; ++b)
      out.push_back({1, y, b});
  return out;
}

// Effect operator of outcome a at setting x as constant + signed symbols;
// the last outcome is I minus the others.
struct EffectExpansion {
  double constant = 0.0;
  std::vector<std::pair<Symbol, double>> symbols;
};

EffectExpansion expand_effect(int party, int setting, int outcome, int outcomes) {
  EffectExpansion e;
  if (outcome + 1 < outcomes) {
    e.symbols.push_back({{party, setting, outcome}, 1.0});
  } else {
    e.constant = 1.0;
    for (int a = 0; a + 1 < outcomes; ++a) e.symbols.push_back({{party, setting, a}, -1.0});
  }
  return e;
}

// Image of a canonical word under a pure relabeling; symbol-wise injective,
// so the image is canonical of the same degree.
Monomial map_monomial(const Monomial& m, const PureRelabeling& g) {
  std::vector<Symbol> w;
  w.reserve(m.word().size());
  for (const auto& s : m.word()) {
    const auto x = static_cast<size_t>(s.setting);
    const auto a = static_cast<size_t>(s.outcome);
    if (s.party == 0)
      w.push_back({0, g.alice_settings[x], g.alice_outcomes[x][a]});
    else
      w.push_back({1, g.bob_settings[x], g.bob_outcomes[x][a]});
  }
  return canonicalize(std::move(w));
}

// One party's half of an involutive relabeling.
struct PartyMap {
  std::vector<int> settings;
  std::vector<std::vector<int>> outcomes;
  bool trivial = true;
};

std::vector<int> identity_perm(int n) {
  std::vector<int> p(static_cast<size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  return p;
}

bool perm_is_involution(const std::vector<int>& p) {
  for (size_t i = 0; i < p.size(); ++i)
    if (p[static_cast<size_t>(p[i])] != static_cast<int>(i)) return false;
  return true;
}

bool perm_is_identity(const std::vector<int>& p) {
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] != static_cast<int>(i)) return false;
  return true;
}

// Permutations of {0..o-1} that fix the eliminated outcome o-1.
std::vector<std::vector<int>> perms_fixing_last(int o) {
  std::vector<std::vector<int>> out;
  if (o <= 1) {
    out.push_back(identity_perm(o));
    return out;
  }
  std::vector<int> head = identity_perm(o - 1);
  do {
    std::vector<int> full = head;
    full.push_back(o - 1);
    out.push_back(std::move(full));
  } while (std::next_permutation(head.begin(), head.end()));
  return out;
}

// Involutive relabelings of one party's settings and outcomes. Settings pair
// only when their outcome counts agree; across a settings 2-cycle one
// outcome map is free and the partner is its inverse, on a fixed setting the
// map must itself be an involution. budget caps the total emitted.
std::vector<PartyMap> party_involutions(const std::vector<int>& counts, long& budget) {
  const int n = static_cast<int>(counts.size());
  std::vector<PartyMap> out;
  std::vector<int> sperm = identity_perm(n);
  do {
    bool ok = perm_is_involution(sperm);
    for (int x = 0; ok && x < n; ++x)
      ok = counts[static_cast<size_t>(sperm[static_cast<size_t>(x)])] == counts[static_cast<size_t>(x)];
    if (!ok) continue;

    // Free slots: fixed settings (involutive maps) and cycle minima (any map).
    std::vector<int> slots;
    std::vector<std::vector<std::vector<int>>> slot_options;
    for (int x = 0; x < n; ++x) {
      const int sx = sperm[static_cast<size_t>(x)];
      if (sx < x) continue;
      auto opts = perms_fixing_last(counts[static_cast<size_t>(x)]);
      if (sx == x)
        std::erase_if(opts, [](const std::vector<int>& p) { return !perm_is_involution(p); });
      slots.push_back(x);
      slot_options.push_back(std::move(opts));
    }

    std::vector<size_t> pick(slots.size(), 0);
    while (true) {
      if (--budget < 0) return out;
      PartyMap pm;
      pm.settings = sperm;
      pm.outcomes.resize(static_cast<size_t>(n));
      pm.trivial = perm_is_identity(sperm);
      for (size_t s = 0; s < slots.size(); ++s) {
        const int x = slots[s];
        const int sx = sperm[static_cast<size_t>(x)];
        const auto& p = slot_options[s][pick[s]];
        pm.outcomes[static_cast<size_t>(x)] = p;
        if (sx != x) {
          std::vector<int> inv(p.size());
          for (size_t a = 0; a < p.size(); ++a) inv[static_cast<size_t>(p[a])] = static_cast<int>(a);
          pm.outcomes[static_cast<size_t>(sx)] = std::move(inv);
        }
        if (!perm_is_identity(p)) pm.trivial = false;
      }
      out.push_back(std::move(pm));

      size_t s = 0;
      while (s < pick.size() && ++pick[s] == slot_options[s].size()) pick[s++] = 0;
      if (s == pick.size()) break;
    }
  } while (std::next_permutation(sperm.begin(), sperm.end()));
  return out;
}

std::map<std::array<int, 4>, double> term_tensor(const scenarios::BellFunctional& f) {
  std::map<std::array<int, 4>, double> t;
  for (const auto& term : f.terms) t[{term.x, term.y, term.a, term.b}] += term.coeff;
  return t;
}

// Outcome relabeling at one setting; the image functional is equivalent.
scenarios::BellFunctional relabel_outcomes(const scenarios::BellFunctional& f,
                                           scenarios::Party party, int setting,
                                           const std::vector<int>& perm) {
  scenarios::BellFunctional g = f;
  for (auto& t : g.terms) {
    if (party == scenarios::Party::alice && t.x == setting) t.a = perm[static_cast<size_t>(t.a)];
    if (party == scenarios::Party::bob && t.y == setting) t.b = perm[static_cast<size_t>(t.b)];
  }
  return g;
}

// Block-diagonalization of a relaxation in the eigenbasis of the basis
// permutation induced by an involutive pure relabeling. Congruence by the
// orthogonal eigenbasis maps an invariant moment matrix to an even and an
// odd block, and the two constraints of one relabeling orbit coincide on
// those blocks, so one is kept: the constraint count halves at an unchanged
// optimum. Returns nothing when the relabeling fails to act as a basis
// involution, in which case the caller solves the plain form.
struct ReducedRelaxation {
  sdp::SdpProblem problem;
  int constraint_count = 0;
};

std::optional<ReducedRelaxation> reduce_relaxation(const Relaxation& rel,
                                                   const PureRelabeling& g) {
  const int n = rel.basis_size();
  const auto deg_less = [](const Monomial& a, const Monomial& b) {
    return std::pair(a.degree(), a) < std::pair(b.degree(), b);
  };
  std::vector<int> img(static_cast<size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const Monomial m = map_monomial(rel.basis[static_cast<size_t>(i)], g);
    if (m.is_zero()) return std::nullopt;
    const auto it = std::lower_bound(rel.basis.begin(), rel.basis.end(), m, deg_less);
    if (it == rel.basis.end() || *it != m) return std::nullopt;
    img[static_cast<size_t>(i)] = static_cast<int>(it - rel.basis.begin());
  }
  bool moved = false;
  for (int i = 0; i < n; ++i) {
    if (img[static_cast<size_t>(img[static_cast<size_t>(i)])] != i) return std::nullopt;
    moved = moved || img[static_cast<size_t>(i)] != i;
  }
  if (!moved) return std::nullopt;

  // Fixed words stay; orbit pairs split into even and odd combinations.
  std::vector<int> pidx(static_cast<size_t>(n), -1), midx(static_cast<size_t>(n), -1);
  std::vector<double> pval(static_cast<size_t>(n), 0.0), mval(static_cast<size_t>(n), 0.0);
  const double isq2 = 1.0 / std::sqrt(2.0);
  int np = 0, nm = 0;
  for (int i = 0; i < n; ++i) {
    const int j = img[static_cast<size_t>(i)];
    if (j == i) {
      pidx[static_cast<size_t>(i)] = np++;
      pval[static_cast<size_t>(i)] = 1.0;
    } else if (j > i) {
      pidx[static_cast<size_t>(i)] = pidx[static_cast<size_t>(j)] = np++;
      pval[static_cast<size_t>(i)] = pval[static_cast<size_t>(j)] = isq2;
      midx[static_cast<size_t>(i)] = midx[static_cast<size_t>(j)] = nm++;
      mval[static_cast<size_t>(i)] = isq2;
      mval[static_cast<size_t>(j)] = -isq2;
    }
  }
  if (nm == 0) return std::nullopt;

  const size_t k = rel.class_reps.size();
  std::map<Monomial, int> class_of;
  for (size_t v = 0; v < k; ++v) class_of.emplace(rel.class_reps[v], static_cast<int>(v));
  std::vector<int> cimg(k, -1);
  for (size_t v = 0; v < k; ++v) {
    const Monomial m = map_monomial(rel.class_reps[v], g);
    const Monomial rep = std::min(m, m.adjoint());
    const auto it = class_of.find(rep);
    if (it == class_of.end()) return std::nullopt;
    cimg[v] = it->second;
  }
  for (size_t v = 0; v < k; ++v)
    if (cimg[static_cast<size_t>(cimg[v])] != static_cast<int>(v)) return std::nullopt;

  std::set<std::pair<int, int>> units(rel.unit_cells.begin(), rel.unit_cells.end());
  for (const auto& [i, j] : rel.unit_cells) {
    const int a = img[static_cast<size_t>(i)], b = img[static_cast<size_t>(j)];
    if (!units.count({std::min(a, b), std::max(a, b)})) return std::nullopt;
  }

  // Dense scatter of the congruence restricted to the diagonal blocks; slots
  // touched by one cell list are emitted once and zeroed for the next.
  std::vector<double> bp(static_cast<size_t>(np) * static_cast<size_t>(np), 0.0);
  std::vector<double> bm(static_cast<size_t>(nm) * static_cast<size_t>(nm), 0.0);
  std::vector<int> tp, tm;
  const auto add_full = [&](int r, int c) {
    const size_t sp = static_cast<size_t>(pidx[static_cast<size_t>(r)]) * static_cast<size_t>(np) +
                      static_cast<size_t>(pidx[static_cast<size_t>(c)]);
    if (bp[sp] == 0.0) tp.push_back(static_cast<int>(sp));
    bp[sp] += pval[static_cast<size_t>(r)] * pval[static_cast<size_t>(c)];
    if (midx[static_cast<size_t>(r)] >= 0 && midx[static_cast<size_t>(c)] >= 0) {
      const size_t sm = static_cast<size_t>(midx[static_cast<size_t>(r)]) * static_cast<size_t>(nm) +
                        static_cast<size_t>(midx[static_cast<size_t>(c)]);
      if (bm[sm] == 0.0) tm.push_back(static_cast<int>(sm));
      bm[sm] += mval[static_cast<size_t>(r)] * mval[static_cast<size_t>(c)];
    }
  };
  const auto drain = [&](std::vector<sdp::Entry>& out) {
    for (const int s : tp) {
      if (bp[static_cast<size_t>(s)] != 0.0) {
        const int r = s / np, c = s % np;
        if (r <= c) out.push_back({0, r, c, bp[static_cast<size_t>(s)]});
        bp[static_cast<size_t>(s)] = 0.0;
      }
    }
    tp.clear();
    for (const int s : tm) {
      if (bm[static_cast<size_t>(s)] != 0.0) {
        const int r = s / nm, c = s % nm;
        if (r <= c) out.push_back({1, r, c, bm[static_cast<size_t>(s)]});
        bm[static_cast<size_t>(s)] = 0.0;
      }
    }
    tm.clear();
  };

  ReducedRelaxation red;
  red.problem.block_dims = {np, nm};
  red.problem.sense = sdp::Sense::minimize;
  red.problem.objective_constant = rel.problem.objective_constant;
  for (const auto& [i, j] : rel.unit_cells) {
    add_full(i, j);
    if (i != j) add_full(j, i);
  }
  drain(red.problem.objective);
  for (size_t v = 0; v < k; ++v) {
    const int w = cimg[v];
    if (w < static_cast<int>(v)) continue;
    const double ra = rel.problem.constraints[v].rhs;
    const double rb = rel.problem.constraints[static_cast<size_t>(w)].rhs;
    if (std::abs(ra - rb) > 1e-9 * std::max(1.0, std::abs(ra))) return std::nullopt;
    sdp::Constraint con;
    for (const auto& [i, j] : rel.class_cells[v]) {
      add_full(i, j);
      if (i != j) add_full(j, i);
    }
    drain(con.matrix);
    con.rhs = 0.5 * (ra + rb);
    red.problem.constraints.push_back(std::move(con));
  }
  red.constraint_count = static_cast<int>(red.problem.constraints.size());
  return red;
}

}  // namespace

Monomial Monomial::zero() {
  Monomial m;
  m.zero_ = true;
  return m;
}

Monomial canonicalize(std::vector<Symbol> word) {
  std::stable_partition(word.begin(), word.end(), [](const Symbol& s) { return s.party == 0; });
  if (!reduce_segment(word)) return Monomial::zero();
  Monomial m;
  m.word_ = std::move(word);
  return m;
}

Monomial Monomial::adjoint() const {
  if (zero_) return zero();
  std::vector<Symbol> rev(word_.rbegin(), word_.rend());
  return canonicalize(std::move(rev));
}

Monomial operator*(const Monomial& a, const Monomial& b) {
  if (a.is_zero() || b.is_zero()) return Monomial::zero();
  std::vector<Symbol> w = a.word_;
  w.insert(w.end(), b.word_.begin(), b.word_.end());
  return canonicalize(std::move(w));
}

Level Level::parse(const std::string& text) {
  if (text == "1") return {1, false};
  if (text == "2") return {2, false};
  if (text == "3") return {3, false};
  if (text == "1+AB" || text == "1+ab") return {1, true};
  throw std::invalid_argument("unknown relaxation level: " + text);
}

std::string Level::to_string() const {
  if (plus_ab) return "1+AB";
  return std::to_string(degree);
}

void Level::validate() const {
  if (degree < 1 || degree > 3) throw std::invalid_argument("relaxation degree must be 1, 2 or 3");
  if (plus_ab && degree != 1)
    throw std::invalid_argument("the +AB augmentation applies to degree 1 only");
}

Relaxation build_relaxation(const scenarios::BellFunctional& f, Level level) {
  level.validate();
  f.validate();
  const auto symbols = scenario_symbols(f.scenario);

  // Canonical words of degree <= level by breadth-first extension; every
  // canonical word arises from its canonical prefix, so this is exhaustive.
  std::set<Monomial> words;
  words.insert(Monomial());
  std::vector<Monomial> frontier = {Monomial()};
  for (int depth = 0; depth < level.degree; ++depth) {
    std::vector<Monomial> next;
    for (const auto& w : frontier)
      for (const auto& s : symbols) {
        Monomial ext = w * canonicalize({s});
        if (ext.is_zero() || ext.degree() != w.degree() + 1) continue;
        if (words.insert(ext).second) next.push_back(ext);
      }
    frontier = std::move(next);
    if (static_cast<int>(words.size()) > kBasisLimit)
      throw std::runtime_error("moment basis exceeds " + std::to_string(kBasisLimit) +
                               " monomials; lower the level");
  }
  if (level.plus_ab) {
    for (const auto& sa : symbols)
      for (const auto& sb : symbols) {
        if (sa.party != 0 || sb.party != 1) continue;
        words.insert(canonicalize({sa, sb}));
      }
    if (static_cast<int>(words.size()) > kBasisLimit)
      throw std::runtime_error("moment basis exceeds " + std::to_string(kBasisLimit) +
                               " monomials; lower the level");
  }

  Relaxation rel;
  rel.basis.assign(words.begin(), words.end());
  std::sort(rel.basis.begin(), rel.basis.end(),
            [](const Monomial& a, const Monomial& b) {
              return std::pair(a.degree(), a) < std::pair(b.degree(), b);
            });
  const int n = rel.basis_size();

  // Group moment-matrix cells by canonical word, merging adjoint classes so
  // the matrix is real symmetric; the value of the relaxation is unchanged
  // because the data is real and conjugation preserves feasibility.
  std::map<Monomial, int> class_of;
  for (int i = 0; i < n; ++i) {
    const Monomial row = rel.basis[static_cast<size_t>(i)].adjoint();
    for (int j = i; j < n; ++j) {
      Monomial w = row * rel.basis[static_cast<size_t>(j)];
      if (w.is_zero()) continue;
      if (w.is_identity()) {
        rel.unit_cells.push_back({i, j});
        continue;
      }
      Monomial rep = std::min(w, w.adjoint());
      auto [it, fresh] = class_of.try_emplace(rep, static_cast<int>(rel.class_reps.size()));
      if (fresh) {
        rel.class_reps.push_back(rep);
        rel.class_cells.emplace_back();
      }
      rel.class_cells[static_cast<size_t>(it->second)].push_back({i, j});
    }
  }

  // Functional expansion into a constant plus first-degree moments.
  std::map<Monomial, double> objective;
  double constant = 0.0;
  for (const auto& t : f.terms) {
    const EffectExpansion ea =
        expand_effect(0, t.x, t.a, f.scenario.alice_outcomes[static_cast<size_t>(t.x)]);
    const EffectExpansion eb =
        expand_effect(1, t.y, t.b, f.scenario.bob_outcomes[static_cast<size_t>(t.y)]);
    constant += t.coeff * ea.constant * eb.constant;
    for (const auto& [sa, ca] : ea.symbols)
      objective[canonicalize({sa})] += t.coeff * ca * eb.constant;
    for (const auto& [sb, cb] : eb.symbols)
      objective[canonicalize({sb})] += t.coeff * ea.constant * cb;
    for (const auto& [sa, ca] : ea.symbols)
      for (const auto& [sb, cb] : eb.symbols)
        objective[canonicalize({sa, sb})] += t.coeff * ca * cb;
  }

  // Dual of the moment program: minimize <A_unit, Z> + constant subject to
  // <A_v, Z> = -c_v over Z >= 0; its value upper-bounds the functional.
  rel.problem.block_dims = {n};
  rel.problem.sense = sdp::Sense::minimize;
  rel.problem.objective_constant = constant;
  rel.objective_constant = constant;
  for (auto [i, j] : rel.unit_cells) rel.problem.objective.push_back({0, i, j, 1.0});
  std::vector<double> coeff(rel.class_reps.size(), 0.0);
  for (const auto& [w, c] : objective) {
    if (c == 0.0) continue;
    const Monomial rep = std::min(w, w.adjoint());
    auto it = class_of.find(rep);
    if (it == class_of.end())
      throw std::logic_error("functional moment missing from the moment matrix");
    coeff[static_cast<size_t>(it->second)] += c;
  }
  for (size_t v = 0; v < rel.class_reps.size(); ++v) {
    sdp::Constraint con;
    for (auto [i, j] : rel.class_cells[v]) con.matrix.push_back({0, i, j, 1.0});
    con.rhs = -coeff[v];
    rel.problem.constraints.push_back(std::move(con));
  }
  return rel;
}

bool PureRelabeling::trivial() const {
  const auto all_id = [](const std::vector<std::vector<int>>& maps) {
    for (const auto& p : maps)
      if (!perm_is_identity(p)) return false;
    return true;
  };
  return perm_is_identity(alice_settings) && perm_is_identity(bob_settings) &&
         all_id(alice_outcomes) && all_id(bob_outcomes);
}

std::optional<PureRelabeling> find_pure_involution(const scenarios::BellFunctional& f) {
  f.validate();
  const auto tensor = term_tensor(f);
  double scale = 1.0;
  for (const auto& [key, coeff] : tensor) scale = std::max(scale, std::abs(coeff));
  const double tol = 1e-12 * scale;

  long budget = 200000;
  const auto alice = party_involutions(f.scenario.alice_outcomes, budget);
  const auto bob = party_involutions(f.scenario.bob_outcomes, budget);
  if (budget < 0) return std::nullopt;  // search space too large to certify

  // Moved symbols pair more basis words, so the highest-scoring involution
  // gives the smallest reduced problem.
  const auto moved_symbols = [](const PartyMap& p, const std::vector<int>& counts) {
    int moved = 0;
    for (size_t x = 0; x < counts.size(); ++x)
      for (int a = 0; a + 1 < counts[x]; ++a)
        if (p.settings[x] != static_cast<int>(x) ||
            p.outcomes[x][static_cast<size_t>(a)] != a)
          ++moved;
    return moved;
  };

  std::optional<PureRelabeling> best;
  int best_score = -1;
  for (const auto& pa : alice)
    for (const auto& pb : bob) {
      if (pa.trivial && pb.trivial) continue;
      bool ok = true;
      for (const auto& [key, coeff] : tensor) {
        const std::array<int, 4> image = {
            pa.settings[static_cast<size_t>(key[0])],
            pb.settings[static_cast<size_t>(key[1])],
            pa.outcomes[static_cast<size_t>(key[0])][static_cast<size_t>(key[2])],
            pb.outcomes[static_cast<size_t>(key[1])][static_cast<size_t>(key[3])]};
        const auto it = tensor.find(image);
        if (it == tensor.end() || std::abs(it->second - coeff) > tol) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      const int score = moved_symbols(pa, f.scenario.alice_outcomes) +
                        moved_symbols(pb, f.scenario.bob_outcomes);
      if (score > best_score) {
        best_score = score;
        best = PureRelabeling{pa.settings, pa.outcomes, pb.settings, pb.outcomes};
      }
    }
  return best;
}

BoundResult upper_bound(const scenarios::BellFunctional& f, Level level,
                        const sdp::Options& options, bool exploit_symmetry) {
  Relaxation rel = build_relaxation(f, level);
  sdp::Options opt = options;
  opt.presolve_limit = 0;  // identification classes are independent by construction
  BoundResult out;
  out.basis_size = rel.basis_size();
  if (exploit_symmetry) {
    if (const auto invo = find_pure_involution(f)) {
      if (const auto red = reduce_relaxation(rel, *invo)) {
        out.solution = sdp::solve(red->problem, opt);
        if (out.solution.status != sdp::Status::optimal)
          throw std::runtime_error("relaxation solve failed: " + out.solution.detail);
        out.upper_bound = out.solution.primal_value;
        out.variable_count = red->constraint_count;
        out.symmetry_reduced = true;
        return out;
      }
    }
  }
  out.solution = sdp::solve(rel.problem, opt);
  if (out.solution.status != sdp::Status::optimal)
    throw std::runtime_error("relaxation solve failed: " + out.solution.detail);
  out.upper_bound = out.solution.primal_value;
  out.variable_count = rel.variable_count();
  return out;
}

RestrictedBounds restricted_upper_bound(const scenarios::BellFunctional& f,
                                        scenarios::Party party, int setting,
                                        int kept_outcomes, Level level,
                                        const sdp::Options& options,
                                        bool exploit_symmetry) {
  const auto& counts =
      party == scenarios::Party::alice ? f.scenario.alice_outcomes : f.scenario.bob_outcomes;
  if (setting < 0 || setting >= static_cast<int>(counts.size()))
    throw std::invalid_argument("restricted setting out of range");
  const int total = counts[static_cast<size_t>(setting)];
  if (kept_outcomes < 2 || kept_outcomes > total)
    throw std::invalid_argument("kept outcome count must lie in [2, outcomes]");

  // Enumerate kept subsets as sorted outcome lists.
  std::vector<std::vector<int>> subsets;
  std::vector<int> pick;
  auto recurse = [&](auto&& self, int start) -> void {
    if (static_cast<int>(pick.size()) == kept_outcomes) {
      subsets.push_back(pick);
      return;
    }
    for (int o = start; o < total; ++o) {
      pick.push_back(o);
      self(self, o + 1);
      pick.pop_back();
    }
  };
  recurse(recurse, 0);

  RestrictedBounds out;
  std::vector<scenarios::BellFunctional> reps;
  for (const auto& kept : subsets) {
    scenarios::BellFunctional g = f;
    for (int o = total - 1; o >= 0; --o)
      if (std::find(kept.begin(), kept.end(), o) == kept.end())
        g = scenarios::restrict_outcome(g, party, setting, o);
    bool matched = false;
    for (size_t c = 0; c < reps.size(); ++c)
      if (scenarios::functionals_equivalent(g, reps[c])) {
        out.classes[c].kept_outcome_sets.push_back(kept);
        matched = true;
        break;
      }
    if (!matched) {
      reps.push_back(g);
      out.classes.push_back({{kept}, 0.0, 0});
    }
  }
  for (size_t c = 0; c < reps.size(); ++c) {
    // An outcome relabeling at the restricted setting keeps the bound and
    // may expose an involution the representative as built lacks; the
    // variant whose involution moves the most symbols reduces best.
    scenarios::BellFunctional chosen = reps[c];
    if (exploit_symmetry) {
      const auto relabeling_score = [](const scenarios::BellFunctional& fn,
                                       const PureRelabeling& g) {
        int moved = 0;
        const auto count_party = [&moved](const std::vector<int>& counts,
                                          const std::vector<int>& sperm,
                                          const std::vector<std::vector<int>>& operms) {
          for (size_t x = 0; x < counts.size(); ++x)
            for (int a = 0; a + 1 < counts[x]; ++a)
              if (sperm[x] != static_cast<int>(x) || operms[x][static_cast<size_t>(a)] != a)
                ++moved;
        };
        count_party(fn.scenario.alice_outcomes, g.alice_settings, g.alice_outcomes);
        count_party(fn.scenario.bob_outcomes, g.bob_settings, g.bob_outcomes);
        return moved;
      };
      int best_score = -1;
      std::vector<int> perm = identity_perm(kept_outcomes);
      do {
        scenarios::BellFunctional variant = relabel_outcomes(reps[c], party, setting, perm);
        if (const auto invo = find_pure_involution(variant)) {
          const int score = relabeling_score(variant, *invo);
          if (score > best_score) {
            best_score = score;
            chosen = std::move(variant);
          }
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    BoundResult r = upper_bound(chosen, level, options, exploit_symmetry);
    out.classes[c].bound = r.upper_bound;
    out.classes[c].basis_size = r.basis_size;
    out.upper_bound = std::max(out.upper_bound, r.upper_bound);
  }
  return out;
}

qcore::CMatrix strategy_moment_matrix(const Relaxation& rel,
                                      const scenarios::QuantumStrategy& strategy) {
  const int da = strategy.dim_a;
  const int db = strategy.dim_b;
  auto party_operator = [&](const std::vector<Symbol>& word, int party, int dim) {
    qcore::CMatrix op = qcore::CMatrix::identity(dim);
    for (const auto& s : word) {
      if (s.party != party) continue;
      const auto& povm = party == 0 ? strategy.alice_povms[static_cast<size_t>(s.setting)]
                                    : strategy.bob_povms[static_cast<size_t>(s.setting)];
      op = op * povm.effects()[static_cast<size_t>(s.outcome)];
    }
    return op;
  };
  const int n = rel.basis_size();
  std::vector<qcore::CMatrix> ops_a, ops_b;
  for (const auto& m : rel.basis) {
    ops_a.push_back(party_operator(m.word(), 0, da));
    ops_b.push_back(party_operator(m.word(), 1, db));
  }
  qcore::CMatrix gamma(n, n);
  const qcore::CMatrix& rho = strategy.state.matrix();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      qcore::CMatrix prod = qcore::kron(ops_a[static_cast<size_t>(i)].adjoint() *
                                            ops_a[static_cast<size_t>(j)],
                                        ops_b[static_cast<size_t>(i)].adjoint() *
                                            ops_b[static_cast<size_t>(j)]);
      const qcore::Complex v = (rho * prod).trace();
      gamma(i, j) = v;
      gamma(j, i) = std::conj(v);
    }
  return gamma;
}

}  // namespace bellcert::npa
