#include "bellcert/expsim.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "bellcert/rng.hpp"

namespace bellcert::expsim {

namespace {

// Poisson sampler: inversion below 10, Hormann's PTRS transformed rejection
// above. Exact for all rates that fit the double mantissa.
int64_t poisson(rng::Philox& gen, double lambda) {
  if (lambda < 0.0 || !std::isfinite(lambda)) throw std::invalid_argument("poisson rate invalid");
  if (lambda == 0.0) return 0;
  if (lambda < 10.0) {
    const double limit = std::exp(-lambda);
    int64_t k = 0;
    double prod = gen.uniform();
    while (prod > limit) {
      prod *= gen.uniform();
      ++k;
    }
    return k;
  }
  const double b = 0.931 + 2.53 * std::sqrt(lambda);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_lambda = std::log(lambda);
  for (;;) {
    const double u = gen.uniform() - 0.5;
    const double v = gen.uniform();
    const double us = 0.5 - std::abs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<int64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const double k = kf;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * log_lambda - lambda - std::lgamma(k + 1.0))
      return static_cast<int64_t>(kf);
  }
}

}  // namespace

void NoiseModel::validate() const {
  if (!(visibility >= 0.0 && visibility <= 1.0))
    throw std::invalid_argument("visibility must lie in [0, 1]");
  if (!(detector_efficiency >= 0.0 && detector_efficiency <= 1.0))
    throw std::invalid_argument("detector efficiency must lie in [0, 1]");
  if (!(accidental_prob >= 0.0 && accidental_prob <= 0.01))
    throw std::invalid_argument("accidental probability must lie in [0, 0.01]");
}

CountsRecord simulate_counts(const scenarios::QuantumStrategy& s, const NoiseModel& noise,
                             double pairs_per_setting, uint64_t seed) {
  noise.validate();
  if (!(pairs_per_setting > 0.0)) throw std::invalid_argument("pairs_per_setting must be positive");

  const scenarios::Behavior p = scenarios::noisy_behavior(s, noise.visibility);
  const scenarios::Scenario& sc = p.scenario();
  const double detected_rate =
      noise.detector_efficiency * noise.detector_efficiency * pairs_per_setting;

  CountsRecord rec;
  rec.scenario = sc;
  rec.expected_pairs = pairs_per_setting;
  rec.seed = seed;
  rec.counts.resize(static_cast<size_t>(sc.alice_settings()) * sc.bob_settings());
  for (int x = 0; x < sc.alice_settings(); ++x)
    for (int y = 0; y < sc.bob_settings(); ++y) {
      const uint64_t stream = static_cast<uint64_t>(x) * sc.bob_settings() + y;
      rng::Philox gen(seed, stream);
      const int na = sc.alice_outcomes[static_cast<size_t>(x)];
      const int nb = sc.bob_outcomes[static_cast<size_t>(y)];
      auto& table = rec.counts[stream];
      table.assign(static_cast<size_t>(na) * nb, 0);
      // A Poisson total split multinomially equals independent Poisson cells.
      int64_t total = 0;
      for (int a = 0; a < na; ++a)
        for (int b = 0; b < nb; ++b) {
          const int64_t n = poisson(gen, detected_rate * p.p(a, b, x, y));
          table[static_cast<size_t>(a) * nb + b] = n;
          total += n;
        }
      if (noise.accidental_prob > 0.0) {
        const double acc_rate =
            noise.accidental_prob * static_cast<double>(total) / (static_cast<double>(na) * nb);
        for (auto& cell : table) cell += poisson(gen, acc_rate);
      }
    }
  return rec;
}

scenarios::Behavior estimate_behavior(const CountsRecord& c) {
  const scenarios::Scenario& sc = c.scenario;
  sc.validate();
  scenarios::Behavior est(sc);
  for (int x = 0; x < sc.alice_settings(); ++x)
    for (int y = 0; y < sc.bob_settings(); ++y) {
      const size_t idx = static_cast<size_t>(x) * sc.bob_settings() + y;
      if (idx >= c.counts.size()) throw std::invalid_argument("counts table missing a setting");
      const int na = sc.alice_outcomes[static_cast<size_t>(x)];
      const int nb = sc.bob_outcomes[static_cast<size_t>(y)];
      const auto& table = c.counts[idx];
      if (table.size() != static_cast<size_t>(na) * nb)
        throw std::invalid_argument("counts table has the wrong shape");
      int64_t total = 0;
      for (const int64_t n : table) {
        if (n < 0) throw std::invalid_argument("counts must be non-negative");
        total += n;
      }
      if (total <= 0) throw std::invalid_argument("setting has no coincidences");
      const double tn = static_cast<double>(total);
      for (int a = 0; a < na; ++a)
        for (int b = 0; b < nb; ++b) {
          const double ph = static_cast<double>(table[static_cast<size_t>(a) * nb + b]) / tn;
          est.set_p(a, b, x, y, ph);
          est.set_sigma(a, b, x, y, std::sqrt(ph * (1.0 - ph) / tn));
        }
      est.set_trials(x, y, tn);
    }
  est.validate();
  return est;
}

SignificanceReport significance(double value, double sigma, double bound) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  SignificanceReport r;
  r.value = value;
  r.sigma = sigma;
  r.bound = bound;
  r.z = (value - bound) / sigma;
  r.p = 0.5 * std::erfc(r.z / std::numbers::sqrt2);
  return r;
}

ChshReport chsh_violation(const scenarios::Behavior& p) {
  const scenarios::Scenario want{{2, 2}, {2, 2}};
  if (!(p.scenario() == want))
    throw std::invalid_argument("CHSH needs two binary settings on each side");
  auto correlator = [&](int x, int y) {
    double e = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) e += ((a + b) % 2 == 0 ? 1.0 : -1.0) * p.p(a, b, x, y);
    return e;
  };
  ChshReport r;
  r.s_value = correlator(0, 0) + correlator(0, 1) + correlator(1, 0) - correlator(1, 1);
  r.violation = r.s_value - 2.0;
  r.epsilon = (2.0 * std::numbers::sqrt2 - 2.0) - r.violation;
  return r;
}

double fidelity_lower_bound(double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be non-negative");
  return std::max(0.0, 1.0 - 2.2 * epsilon);
}

double mixed_binary_bound(double fidelity) {
  if (!(fidelity >= 0.0 && fidelity <= 1.0))
    throw std::invalid_argument("fidelity must lie in [0, 1]");
  const auto kb = scenarios::functional_catalog("I").known_bounds;
  return fidelity * *kb.binary_quantum + (1.0 - fidelity) * *kb.quantum_max;
}

std::string counts_to_csv(const CountsRecord& c) {
  std::ostringstream out;
  out << "x,y,a,b,count\n";
  for (int x = 0; x < c.scenario.alice_settings(); ++x)
    for (int y = 0; y < c.scenario.bob_settings(); ++y) {
      const size_t idx = static_cast<size_t>(x) * c.scenario.bob_settings() + y;
      const int nb = c.scenario.bob_outcomes[static_cast<size_t>(y)];
      for (int a = 0; a < c.scenario.alice_outcomes[static_cast<size_t>(x)]; ++a)
        for (int b = 0; b < nb; ++b)
          out << x << ',' << y << ',' << a << ',' << b << ','
              << c.counts[idx][static_cast<size_t>(a) * nb + b] << '\n';
    }
  return out.str();
}

Json counts_to_json(const CountsRecord& c) {
  Json j;
  j["scenario"] = scenarios::scenario_to_json(c.scenario);
  j["expected_pairs"] = c.expected_pairs;
  j["seed"] = c.seed;
  j["counts"] = Json::array();
  for (const auto& table : c.counts) j["counts"].push_back(table);
  return j;
}

CountsRecord counts_from_json(const Json& j) {
  CountsRecord c;
  c.scenario = scenarios::scenario_from_json(j.at("scenario"));
  c.expected_pairs = j.at("expected_pairs").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.counts = j.at("counts").get<std::vector<std::vector<int64_t>>>();
  const size_t want = static_cast<size_t>(c.scenario.alice_settings()) * c.scenario.bob_settings();
  if (c.counts.size() != want) throw std::invalid_argument("counts list has the wrong length");
  return c;
}

Json significance_to_json(const SignificanceReport& r) {
  return Json{{"value", r.value}, {"sigma", r.sigma}, {"bound", r.bound}, {"z", r.z}, {"p", r.p}};
}

}  // namespace bellcert::expsim
