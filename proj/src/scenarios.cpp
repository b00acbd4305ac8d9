#include "bellcert/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace bellcert::scenarios {

namespace {

constexpr double kPi = 3.14159265358979323846;

int outcomes_of(const Scenario& s, Party party, int setting) {
  const auto& v = (party == Party::alice) ? s.alice_outcomes : s.bob_outcomes;
  if (setting < 0 || setting >= static_cast<int>(v.size()))
    throw std::invalid_argument("setting index out of range");
  return v[static_cast<size_t>(setting)];
}

}  // namespace

void Scenario::validate() const {
  if (alice_outcomes.empty() || bob_outcomes.empty())
    throw std::invalid_argument("scenario needs at least one setting per party");
  for (int n : alice_outcomes)
    if (n < 2) throw std::invalid_argument("alice setting with fewer than 2 outcomes");
  for (int n : bob_outcomes)
    if (n < 2) throw std::invalid_argument("bob setting with fewer than 2 outcomes");
}

Behavior::Behavior(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
  size_t off = 0;
  for (int x = 0; x < scenario_.alice_settings(); ++x)
    for (int y = 0; y < scenario_.bob_settings(); ++y) {
      offsets_.push_back(off);
      off += static_cast<size_t>(scenario_.alice_outcomes[static_cast<size_t>(x)]) *
             scenario_.bob_outcomes[static_cast<size_t>(y)];
    }
  table_.assign(off, 0.0);
}

Behavior Behavior::uniform(const Scenario& scenario) {
  Behavior b(scenario);
  for (int x = 0; x < scenario.alice_settings(); ++x)
    for (int y = 0; y < scenario.bob_settings(); ++y) {
      const double p = 1.0 / (scenario.alice_outcomes[static_cast<size_t>(x)] *
                              scenario.bob_outcomes[static_cast<size_t>(y)]);
      for (int a = 0; a < scenario.alice_outcomes[static_cast<size_t>(x)]; ++a)
        for (int bo = 0; bo < scenario.bob_outcomes[static_cast<size_t>(y)]; ++bo)
          b.set_p(a, bo, x, y, p);
    }
  return b;
}

size_t Behavior::index(int a, int b, int x, int y) const {
  const int na = outcomes_of(scenario_, Party::alice, x);
  const int nb = outcomes_of(scenario_, Party::bob, y);
  if (a < 0 || a >= na || b < 0 || b >= nb)
    throw std::invalid_argument("outcome index out of range");
  return offsets_[static_cast<size_t>(x) * scenario_.bob_settings() + y] +
         static_cast<size_t>(a) * nb + b;
}

double Behavior::sigma(int a, int b, int x, int y) const {
  if (!sigma_) throw std::logic_error("behavior carries no sigma");
  return (*sigma_)[index(a, b, x, y)];
}

void Behavior::set_sigma(int a, int b, int x, int y, double v) {
  if (!sigma_) sigma_.emplace(table_.size(), 0.0);
  (*sigma_)[index(a, b, x, y)] = v;
}

double Behavior::trials(int x, int y) const {
  if (!trials_) throw std::logic_error("behavior carries no trials");
  return (*trials_)[static_cast<size_t>(x) * scenario_.bob_settings() + y];
}

void Behavior::set_trials(int x, int y, double n) {
  if (!trials_)
    trials_.emplace(static_cast<size_t>(scenario_.alice_settings()) * scenario_.bob_settings(), 0.0);
  (*trials_)[static_cast<size_t>(x) * scenario_.bob_settings() + y] = n;
}

void Behavior::validate() const {
  for (double v : table_)
    if (v < -1e-9 || v > 1.0 + 1e-9) throw std::invalid_argument("behavior entry outside [0,1]");
  for (int x = 0; x < scenario_.alice_settings(); ++x)
    for (int y = 0; y < scenario_.bob_settings(); ++y) {
      double s = 0.0;
      for (int a = 0; a < scenario_.alice_outcomes[static_cast<size_t>(x)]; ++a)
        for (int b = 0; b < scenario_.bob_outcomes[static_cast<size_t>(y)]; ++b) s += p(a, b, x, y);
      if (std::abs(s - 1.0) > 1e-8)
        throw std::invalid_argument("behavior setting block not normalized");
    }
}

void BellFunctional::validate() const {
  scenario.validate();
  for (const auto& t : terms) {
    const int na = outcomes_of(scenario, Party::alice, t.x);
    const int nb = outcomes_of(scenario, Party::bob, t.y);
    if (t.a < 0 || t.a >= na || t.b < 0 || t.b >= nb)
      throw std::invalid_argument("functional term outside scenario");
  }
}

QuantumStrategy::QuantumStrategy(qcore::DensityOp state_in, int da, int db,
                                 std::vector<qcore::Povm> apovms, std::vector<qcore::Povm> bpovms)
    : state(std::move(state_in)),
      dim_a(da),
      dim_b(db),
      alice_povms(std::move(apovms)),
      bob_povms(std::move(bpovms)) {
  if (dim_a < 2 || dim_b < 2 || state.dim() != dim_a * dim_b)
    throw std::invalid_argument("strategy dimensions inconsistent with state");
  for (const auto& m : alice_povms)
    if (m.dim() != dim_a) throw std::invalid_argument("alice povm dimension mismatch");
  for (const auto& m : bob_povms)
    if (m.dim() != dim_b) throw std::invalid_argument("bob povm dimension mismatch");
  if (alice_povms.empty() || bob_povms.empty())
    throw std::invalid_argument("strategy needs measurements on both sides");
}

Scenario QuantumStrategy::scenario() const {
  Scenario s;
  for (const auto& m : alice_povms) s.alice_outcomes.push_back(m.outcomes());
  for (const auto& m : bob_povms) s.bob_outcomes.push_back(m.outcomes());
  return s;
}

BellFunctional functional_catalog(const std::string& name) {
  BellFunctional f;
  f.name = name;
  if (name == "I" || name == "chain3") {
    f.scenario = (name == "I") ? Scenario{{2, 2, 2, 3}, {2, 2, 2}} : Scenario{{2, 2, 2}, {2, 2, 2}};
    f.terms = {{0, 0, 0, 0, 1.0},  {0, 0, 1, 1, 1.0},  {0, 0, 2, 2, 1.0},
               {0, 0, 0, 1, -1.0}, {0, 0, 1, 2, -1.0}, {0, 0, 2, 0, -1.0}};
    if (name == "I") {
      f.terms.push_back({0, 0, 3, 0, -1.0});
      f.terms.push_back({1, 0, 3, 1, -1.0});
      f.terms.push_back({2, 0, 3, 2, -1.0});
      f.known_bounds = {1.0, 1.2711, 3.0 * std::sqrt(3.0) / 4.0};
    } else {
      f.known_bounds = {1.0, std::nullopt, 3.0 * std::sqrt(3.0) / 4.0};
    }
  } else if (name == "chsh_correlator_as_probabilities") {
    f.scenario = Scenario{{2, 2}, {2, 2}};
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) {
        const double sxy = (x == 1 && y == 1) ? -1.0 : 1.0;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            f.terms.push_back({a, b, x, y, sxy * (((a + b) % 2 == 0) ? 1.0 : -1.0)});
      }
    f.known_bounds = {2.0, std::nullopt, 2.0 * std::sqrt(2.0)};
  } else if (name == "beta_el" || name == "L") {
    f.scenario = Scenario{{2, 2, 2, 4}, {2, 2, 2, 2}};
    f.terms = {{1, 0, 0, 2, 1.0},  {1, 0, 0, 3, 1.0},  {1, 0, 1, 1, 1.0},  {1, 0, 1, 3, 1.0},
               {1, 0, 2, 1, 1.0},  {1, 0, 2, 2, 1.0},  {0, 0, 0, 0, 2.0},  {0, 0, 1, 0, 2.0},
               {0, 0, 2, 0, 2.0},  {0, 0, 0, 1, 4.0},  {0, 0, 1, 2, 4.0},  {0, 0, 2, 3, 4.0},
               {1, 0, 0, 0, -2.0}, {1, 0, 1, 0, -2.0}, {1, 0, 2, 0, -2.0}, {0, 0, 0, 2, -3.0},
               {0, 0, 0, 3, -3.0}, {0, 0, 1, 1, -3.0}, {0, 0, 1, 3, -3.0}, {0, 0, 2, 1, -3.0},
               {0, 0, 2, 2, -3.0}};
    if (name == "L") {
      for (int i = 0; i < 4; ++i) f.terms.push_back({i, 0, 3, i, -8.0});
      f.known_bounds = {6.0, 6.6876, 4.0 * std::sqrt(3.0)};
    } else {
      f.known_bounds = {6.0, std::nullopt, std::nullopt};
    }
  } else {
    throw std::invalid_argument("unknown functional: " + name);
  }
  f.validate();
  return f;
}

namespace {

// Terms with duplicate indices combined; zero coefficients dropped.
std::map<std::array<int, 4>, double> combined_terms(const BellFunctional& f) {
  std::map<std::array<int, 4>, double> m;
  for (const auto& t : f.terms) m[{t.x, t.y, t.a, t.b}] += t.coeff;
  for (auto it = m.begin(); it != m.end();)
    it = (it->second == 0.0) ? m.erase(it) : std::next(it);
  return m;
}

}  // namespace

EvalResult evaluate(const BellFunctional& f, const Behavior& p) {
  f.validate();
  if (!(f.scenario == p.scenario())) throw std::invalid_argument("functional/behavior scenario mismatch");
  const auto terms = combined_terms(f);
  double value = 0.0;
  for (const auto& [k, c] : terms) value += c * p.p(k[2], k[3], k[0], k[1]);

  EvalResult r{value, std::nullopt};
  if (p.has_trials()) {
    // Per-setting multinomial covariance: Var = (sum c^2 P - (sum c P)^2) / N.
    std::map<std::pair<int, int>, std::vector<std::pair<std::array<int, 2>, double>>> by_setting;
    for (const auto& [k, c] : terms) by_setting[{k[0], k[1]}].push_back({{k[2], k[3]}, c});
    double var = 0.0;
    for (const auto& [xy, ts] : by_setting) {
      const double n = p.trials(xy.first, xy.second);
      if (n <= 0.0) throw std::invalid_argument("behavior trials must be positive");
      double m1 = 0.0, m2 = 0.0;
      for (const auto& [ab, c] : ts) {
        const double pv = p.p(ab[0], ab[1], xy.first, xy.second);
        m1 += c * pv;
        m2 += c * c * pv;
      }
      var += std::max(0.0, m2 - m1 * m1) / n;
    }
    r.sigma = std::sqrt(var);
  } else if (p.has_sigma()) {
    double var = 0.0;
    for (const auto& [k, c] : terms) {
      const double s = p.sigma(k[2], k[3], k[0], k[1]);
      var += c * c * s * s;
    }
    r.sigma = std::sqrt(var);
  }
  return r;
}

Behavior behavior_from_strategy(const QuantumStrategy& s) {
  Behavior b(s.scenario());
  for (int x = 0; x < static_cast<int>(s.alice_povms.size()); ++x)
    for (int y = 0; y < static_cast<int>(s.bob_povms.size()); ++y)
      for (int a = 0; a < s.alice_povms[static_cast<size_t>(x)].outcomes(); ++a)
        for (int bo = 0; bo < s.bob_povms[static_cast<size_t>(y)].outcomes(); ++bo)
          b.set_p(a, bo, x, y,
                  qcore::born(s.state, s.alice_povms[static_cast<size_t>(x)].effect(a),
                              s.bob_povms[static_cast<size_t>(y)].effect(bo)));
  b.validate();
  return b;
}

BellFunctional restrict_outcome(const BellFunctional& f, Party party, int setting,
                                int dropped_outcome) {
  f.validate();
  const int n = outcomes_of(f.scenario, party, setting);
  if (n < 3) throw std::invalid_argument("cannot drop below 2 outcomes");
  if (dropped_outcome < 0 || dropped_outcome >= n)
    throw std::invalid_argument("dropped outcome out of range");

  BellFunctional g;
  g.scenario = f.scenario;
  auto& counts = (party == Party::alice) ? g.scenario.alice_outcomes : g.scenario.bob_outcomes;
  counts[static_cast<size_t>(setting)] = n - 1;
  g.name = f.name + "_drop" + ((party == Party::alice) ? "A" : "B") + std::to_string(setting) +
           "o" + std::to_string(dropped_outcome);
  for (const auto& t : f.terms) {
    const int o = (party == Party::alice) ? t.a : t.b;
    const bool on_setting = ((party == Party::alice) ? t.x : t.y) == setting;
    if (on_setting && o == dropped_outcome) continue;
    FunctionalTerm u = t;
    if (on_setting && o > dropped_outcome) {
      if (party == Party::alice)
        --u.a;
      else
        --u.b;
    }
    g.terms.push_back(u);
  }
  g.validate();
  return g;
}

double classical_bound(const BellFunctional& f) {
  f.validate();
  double count_a = 1.0, count_b = 1.0;
  for (int n : f.scenario.alice_outcomes) count_a *= n;
  for (int n : f.scenario.bob_outcomes) count_b *= n;
  if (count_a * count_b > 1e7) throw std::invalid_argument("scenario too large for enumeration");

  const int xa = f.scenario.alice_settings();
  const int xb = f.scenario.bob_settings();
  std::vector<int> aa(static_cast<size_t>(xa), 0), bb(static_cast<size_t>(xb), 0);
  double best = -std::numeric_limits<double>::infinity();

  auto advance = [](std::vector<int>& v, const std::vector<int>& lim) {
    for (size_t i = 0; i < v.size(); ++i) {
      if (++v[i] < lim[i]) return true;
      v[i] = 0;
    }
    return false;
  };

  do {
    std::fill(bb.begin(), bb.end(), 0);
    do {
      double val = 0.0;
      for (const auto& t : f.terms)
        if (aa[static_cast<size_t>(t.x)] == t.a && bb[static_cast<size_t>(t.y)] == t.b)
          val += t.coeff;
      best = std::max(best, val);
    } while (advance(bb, f.scenario.bob_outcomes));
  } while (advance(aa, f.scenario.alice_outcomes));
  return best;
}

namespace {

qcore::Povm binary_povm(double theta) {
  qcore::CMatrix e0 = qcore::bloch_effect(theta);
  qcore::CMatrix e1 = qcore::CMatrix::identity(2);
  e1 -= e0;
  return qcore::Povm(2, {e0, e1});
}

}  // namespace

QuantumStrategy ideal_strategy(const std::string& name) {
  const double r = 1.0 / std::sqrt(2.0);
  auto psi_plus = qcore::DensityOp::from_pure({0.0, r, r, 0.0});
  if (name == "I_optimal") {
    const double gamma[3] = {2.0 * kPi / 3.0, 4.0 * kPi / 3.0, 0.0};
    std::vector<qcore::Povm> alice{binary_povm(3.0 * kPi / 2.0), binary_povm(kPi / 6.0),
                                   binary_povm(5.0 * kPi / 6.0)};
    std::vector<qcore::CMatrix> trine;
    for (double g : gamma) trine.push_back((2.0 / 3.0) * qcore::bloch_effect(g));
    alice.emplace_back(2, trine);
    std::vector<qcore::Povm> bob;
    for (double g : gamma) bob.push_back(binary_povm(-g));
    return QuantumStrategy(std::move(psi_plus), 2, 2, std::move(alice), std::move(bob));
  }
  if (name == "chsh_optimal") {
    std::vector<qcore::Povm> alice{binary_povm(0.0), binary_povm(kPi / 2.0)};
    std::vector<qcore::Povm> bob{binary_povm(3.0 * kPi / 4.0), binary_povm(5.0 * kPi / 4.0)};
    return QuantumStrategy(std::move(psi_plus), 2, 2, std::move(alice), std::move(bob));
  }
  throw std::invalid_argument("unknown strategy: " + name);
}

Behavior noisy_behavior(const QuantumStrategy& s, double visibility) {
  if (visibility < 0.0 || visibility > 1.0) throw std::invalid_argument("visibility outside [0,1]");
  const int d = s.state.dim();
  qcore::CMatrix mixed = s.state.matrix();
  mixed *= qcore::Complex(visibility);
  qcore::CMatrix white = qcore::CMatrix::identity(d);
  white *= qcore::Complex((1.0 - visibility) / d);
  mixed += white;
  QuantumStrategy noisy(qcore::DensityOp(std::move(mixed)), s.dim_a, s.dim_b, s.alice_povms,
                        s.bob_povms);
  return behavior_from_strategy(noisy);
}

double visibility_threshold(double max_quantum, double restricted_bound, double noise_value) {
  if (!(max_quantum > restricted_bound && restricted_bound > noise_value))
    throw std::invalid_argument("visibility threshold needs max > bound > noise");
  return (restricted_bound - noise_value) / (max_quantum - noise_value);
}

NoSignalingReport check_no_signaling(const Behavior& p) {
  const Scenario& s = p.scenario();
  NoSignalingReport rep{0.0, ""};
  auto consider = [&rep](double d, const std::string& where) {
    if (d > rep.max_discrepancy) {
      rep.max_discrepancy = d;
      rep.worst = where;
    }
  };
  for (int x = 0; x < s.alice_settings(); ++x)
    for (int a = 0; a < s.alice_outcomes[static_cast<size_t>(x)]; ++a) {
      double lo = 1.0, hi = 0.0;
      for (int y = 0; y < s.bob_settings(); ++y) {
        double m = 0.0;
        for (int b = 0; b < s.bob_outcomes[static_cast<size_t>(y)]; ++b) m += p.p(a, b, x, y);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
      }
      consider(hi - lo, "alice marginal a=" + std::to_string(a) + " x=" + std::to_string(x));
    }
  for (int y = 0; y < s.bob_settings(); ++y)
    for (int b = 0; b < s.bob_outcomes[static_cast<size_t>(y)]; ++b) {
      double lo = 1.0, hi = 0.0;
      for (int x = 0; x < s.alice_settings(); ++x) {
        double m = 0.0;
        for (int a = 0; a < s.alice_outcomes[static_cast<size_t>(x)]; ++a) m += p.p(a, b, x, y);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
      }
      consider(hi - lo, "bob marginal b=" + std::to_string(b) + " y=" + std::to_string(y));
    }
  return rep;
}

namespace {

std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<int> p(static_cast<size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// Setting permutations that preserve per-setting outcome counts between from
// and to (from-setting i maps to to-setting p[i]).
std::vector<std::vector<int>> compatible_setting_perms(const std::vector<int>& from,
                                                       const std::vector<int>& to) {
  std::vector<std::vector<int>> out;
  if (from.size() != to.size()) return out;
  for (auto& p : all_permutations(static_cast<int>(from.size()))) {
    bool ok = true;
    for (size_t i = 0; i < from.size(); ++i)
      if (from[i] != to[static_cast<size_t>(p[i])]) {
        ok = false;
        break;
      }
    if (ok) out.push_back(p);
  }
  return out;
}

}  // namespace

bool functionals_equivalent(const BellFunctional& f, const BellFunctional& g) {
  f.validate();
  g.validate();
  const auto target = combined_terms(g);
  const auto source = combined_terms(f);
  if (source.size() != target.size()) return false;

  const auto aperms = compatible_setting_perms(f.scenario.alice_outcomes, g.scenario.alice_outcomes);
  const auto bperms = compatible_setting_perms(f.scenario.bob_outcomes, g.scenario.bob_outcomes);
  if (aperms.empty() || bperms.empty()) return false;

  // Per-target-setting outcome permutation tables.
  std::vector<std::vector<std::vector<int>>> aout, bout;
  for (int n : g.scenario.alice_outcomes) aout.push_back(all_permutations(n));
  for (int n : g.scenario.bob_outcomes) bout.push_back(all_permutations(n));

  for (const auto& pa : aperms)
    for (const auto& pb : bperms) {
      // Odometer over the outcome permutation choice per setting.
      std::vector<size_t> ai(aout.size(), 0), bi(bout.size(), 0);
      auto advance = [](std::vector<size_t>& idx, const auto& tables) {
        for (size_t i = 0; i < idx.size(); ++i) {
          if (++idx[i] < tables[i].size()) return true;
          idx[i] = 0;
        }
        return false;
      };
      do {
        std::fill(bi.begin(), bi.end(), 0);
        do {
          bool match = true;
          for (const auto& [k, c] : source) {
            const int nx = pa[static_cast<size_t>(k[0])];
            const int ny = pb[static_cast<size_t>(k[1])];
            const int na = aout[static_cast<size_t>(nx)][ai[static_cast<size_t>(nx)]]
                               [static_cast<size_t>(k[2])];
            const int nb = bout[static_cast<size_t>(ny)][bi[static_cast<size_t>(ny)]]
                               [static_cast<size_t>(k[3])];
            auto it = target.find({nx, ny, na, nb});
            if (it == target.end() || std::abs(it->second - c) > 1e-12) {
              match = false;
              break;
            }
          }
          if (match) return true;
        } while (advance(bi, bout));
      } while (advance(ai, aout));
    }
  return false;
}

Json scenario_to_json(const Scenario& s) {
  return Json{{"alice_outcomes", s.alice_outcomes}, {"bob_outcomes", s.bob_outcomes}};
}

Scenario scenario_from_json(const Json& j) {
  Scenario s;
  s.alice_outcomes = j.at("alice_outcomes").get<std::vector<int>>();
  s.bob_outcomes = j.at("bob_outcomes").get<std::vector<int>>();
  s.validate();
  return s;
}

Json functional_to_json(const BellFunctional& f) {
  Json j;
  j["type"] = "bell_functional";
  j["name"] = f.name;
  j["scenario"] = scenario_to_json(f.scenario);
  Json terms = Json::array();
  for (const auto& t : f.terms)
    terms.push_back(Json{{"a", t.a}, {"b", t.b}, {"x", t.x}, {"y", t.y}, {"coeff", t.coeff}});
  j["terms"] = std::move(terms);
  Json kb = Json::object();
  if (f.known_bounds.classical) kb["classical"] = *f.known_bounds.classical;
  if (f.known_bounds.binary_quantum) kb["binary_quantum"] = *f.known_bounds.binary_quantum;
  if (f.known_bounds.quantum_max) kb["quantum_max"] = *f.known_bounds.quantum_max;
  if (!kb.empty()) j["known_bounds"] = std::move(kb);
  return j;
}

BellFunctional functional_from_json(const Json& j) {
  BellFunctional f;
  f.name = j.value("name", "");
  f.scenario = scenario_from_json(j.at("scenario"));
  for (const auto& t : j.at("terms"))
    f.terms.push_back({t.at("a").get<int>(), t.at("b").get<int>(), t.at("x").get<int>(),
                       t.at("y").get<int>(), t.at("coeff").get<double>()});
  if (j.contains("known_bounds")) {
    const auto& kb = j.at("known_bounds");
    if (kb.contains("classical")) f.known_bounds.classical = kb.at("classical").get<double>();
    if (kb.contains("binary_quantum"))
      f.known_bounds.binary_quantum = kb.at("binary_quantum").get<double>();
    if (kb.contains("quantum_max")) f.known_bounds.quantum_max = kb.at("quantum_max").get<double>();
  }
  f.validate();
  return f;
}

Json behavior_to_json(const Behavior& b) {
  Json j;
  j["type"] = "behavior";
  j["scenario"] = scenario_to_json(b.scenario());
  j["table"] = b.table();
  if (b.has_sigma()) {
    std::vector<double> sig;
    const Scenario& s = b.scenario();
    for (int x = 0; x < s.alice_settings(); ++x)
      for (int y = 0; y < s.bob_settings(); ++y)
        for (int a = 0; a < s.alice_outcomes[static_cast<size_t>(x)]; ++a)
          for (int bo = 0; bo < s.bob_outcomes[static_cast<size_t>(y)]; ++bo)
            sig.push_back(b.sigma(a, bo, x, y));
    j["sigma"] = std::move(sig);
  }
  if (b.has_trials()) {
    std::vector<double> tr;
    const Scenario& s = b.scenario();
    for (int x = 0; x < s.alice_settings(); ++x)
      for (int y = 0; y < s.bob_settings(); ++y) tr.push_back(b.trials(x, y));
    j["trials"] = std::move(tr);
  }
  return j;
}

Behavior behavior_from_json(const Json& j) {
  Behavior b(scenario_from_json(j.at("scenario")));
  const auto table = j.at("table").get<std::vector<double>>();
  if (table.size() != b.table().size()) throw std::invalid_argument("behavior table size mismatch");
  const Scenario& s = b.scenario();
  size_t k = 0;
  for (int x = 0; x < s.alice_settings(); ++x)
    for (int y = 0; y < s.bob_settings(); ++y)
      for (int a = 0; a < s.alice_outcomes[static_cast<size_t>(x)]; ++a)
        for (int bo = 0; bo < s.bob_outcomes[static_cast<size_t>(y)]; ++bo)
          b.set_p(a, bo, x, y, table[k++]);
  if (j.contains("sigma")) {
    const auto sig = j.at("sigma").get<std::vector<double>>();
    if (sig.size() != table.size()) throw std::invalid_argument("behavior sigma size mismatch");
    k = 0;
    for (int x = 0; x < s.alice_settings(); ++x)
      for (int y = 0; y < s.bob_settings(); ++y)
        for (int a = 0; a < s.alice_outcomes[static_cast<size_t>(x)]; ++a)
          for (int bo = 0; bo < s.bob_outcomes[static_cast<size_t>(y)]; ++bo)
            b.set_sigma(a, bo, x, y, sig[k++]);
  }
  if (j.contains("trials")) {
    const auto tr = j.at("trials").get<std::vector<double>>();
    if (tr.size() != static_cast<size_t>(s.alice_settings()) * s.bob_settings())
      throw std::invalid_argument("behavior trials size mismatch");
    k = 0;
    for (int x = 0; x < s.alice_settings(); ++x)
      for (int y = 0; y < s.bob_settings(); ++y) b.set_trials(x, y, tr[k++]);
  }
  b.validate();
  return b;
}

}  // namespace bellcert::scenarios
