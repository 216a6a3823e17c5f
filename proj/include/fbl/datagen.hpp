#pragma once

// Seeded generators for the synthetic experiments and the rule bases they
// are drawn from.

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "fbl/dataset.hpp"
#include "fbl/error.hpp"
#include "fbl/fuzzy.hpp"
#include "fbl/param.hpp"
#include "fbl/probability.hpp"
#include "fbl/sampler.hpp"

namespace fbl {

namespace detail {

inline LinguisticVariable free_variable(std::string name, double lo, double hi, std::vector<std::string> labels) {
  LinguisticVariable v{std::move(name), {lo, hi}, std::move(labels), {}, false};
  v.mfs.resize(v.labels.size());
  const double hw = v.labels.size() > 1 ? (hi - lo) / static_cast<double>(v.labels.size() - 1) : (hi - lo) / 2.0;
  bind_variable(v, std::vector<double>(v.labels.size(), hw));
  return v;
}

inline Rule make_rule(std::string name, std::vector<Antecedent> ants, Connective conn, std::size_t consequent) {
  return Rule{std::move(name), std::move(ants), conn, consequent, true};
}

}  // namespace detail

// Downtime from location risk and maintenance quality:
//   R1: loc_risk HI  or  maintenance POOR -> downtime HI
//   R2: loc_risk MED or  maintenance AVG  -> downtime MED
//   R3: loc_risk LO  and maintenance GOOD -> downtime LO
// With `spurious`, two contrary rules are appended:
//   R4: loc_risk LO -> downtime HI
//   R5: maintenance POOR -> downtime LO
// `output_hi` = 1 gives the classification variant on [0, 1].
inline RuleBase downtime_rule_base(bool spurious = false, double output_hi = 100.0) {
  using detail::make_rule;
  RuleBase b;
  b.inputs = {detail::free_variable("loc_risk", 0, 10, {"LO", "MED", "HI"}),
              detail::free_variable("maintenance", 0, 10, {"POOR", "AVG", "GOOD"})};
  b.output = detail::free_variable(output_hi == 1.0 ? "class" : "downtime", 0, output_hi, {"LO", "MED", "HI"});
  b.rules = {make_rule("R1", {{0, 2}, {1, 0}}, Connective::Or, 2), make_rule("R2", {{0, 1}, {1, 1}}, Connective::Or, 1),
             make_rule("R3", {{0, 0}, {1, 2}}, Connective::And, 0)};
  if (spurious) {
    b.rules.push_back(make_rule("R4", {{0, 0}}, Connective::And, 2));
    b.rules.push_back(make_rule("R5", {{1, 0}}, Connective::And, 0));
  }
  return b;
}

// Tomato colour -> ripeness. The full base maps GREEN/YELLOW/RED to
// UNRIPE/HALF_RIPE/RIPE; the sparse base drops YELLOW and HALF_RIPE.
inline RuleBase tomato_rule_base(bool sparse = false) {
  using detail::make_rule;
  RuleBase b;
  if (sparse) {
    b.inputs = {detail::free_variable("colour", 0, 10, {"GREEN", "RED"})};
    b.output = detail::free_variable("ripeness", 0, 10, {"UNRIPE", "RIPE"});
    b.rules = {make_rule("Ra", {{0, 0}}, Connective::And, 0), make_rule("Rc", {{0, 1}}, Connective::And, 1)};
  } else {
    b.inputs = {detail::free_variable("colour", 0, 10, {"GREEN", "YELLOW", "RED"})};
    b.output = detail::free_variable("ripeness", 0, 10, {"UNRIPE", "HALF_RIPE", "RIPE"});
    b.rules = {make_rule("Ra", {{0, 0}}, Connective::And, 0), make_rule("Rb", {{0, 1}}, Connective::And, 1),
               make_rule("Rc", {{0, 2}}, Connective::And, 2)};
  }
  return b;
}

enum class PresetId { CaseI, CaseII, CaseIIIa, CaseIIIb, CaseIV, Tomato, TomatoSparse, Classification, ScalingBench };

struct CasePreset {
  PresetId id = PresetId::CaseI;
  std::size_t n_points = 15;
  double noise_sd = 0.0;
  std::uint64_t seed = 42;

  void validate() const {
    detail::require(n_points > 0, "preset: n_points must be > 0");
    detail::require(noise_sd >= 0.0, "preset: noise_sd must be >= 0");
  }
};

inline const std::vector<std::pair<std::string, PresetId>>& preset_names() {
  static const std::vector<std::pair<std::string, PresetId>> names{
      {"case1", PresetId::CaseI},         {"case2", PresetId::CaseII},
      {"case3a", PresetId::CaseIIIa},     {"case3b", PresetId::CaseIIIb},
      {"case4", PresetId::CaseIV},        {"tomato", PresetId::Tomato},
      {"tomato_sparse", PresetId::TomatoSparse}, {"classification", PresetId::Classification},
      {"scaling_bench", PresetId::ScalingBench}};
  return names;
}

inline PresetId parse_preset(const std::string& s) {
  for (const auto& [name, id] : preset_names()) {
    if (name == s) return id;
  }
  std::string known;
  for (const auto& [name, id] : preset_names()) known += (known.empty() ? "" : ", ") + name;
  throw Error("unknown preset '" + s + "' (known: " + known + ")");
}

inline std::string preset_name(PresetId id) {
  for (const auto& [name, p] : preset_names()) {
    if (p == id) return name;
  }
  return "?";
}

inline double tomato_noise_sd() { return 0.25; }

inline CasePreset default_preset(PresetId id, std::uint64_t seed = 42) {
  switch (id) {
    case PresetId::CaseI:
    case PresetId::ScalingBench:
      return {id, 15, 0.0, seed};
    case PresetId::CaseII:
    case PresetId::Classification:
      return {id, 100, 0.0, seed};
    case PresetId::CaseIIIa:
    case PresetId::CaseIIIb:
    case PresetId::CaseIV:
      return {id, 100, 1.0, seed};
    case PresetId::Tomato:
    case PresetId::TomatoSparse:
      return {id, 100, tomato_noise_sd(), seed};
  }
  return {id, 15, 0.0, seed};
}

// Rule base the data are drawn from (true structure, unbound).
inline RuleBase generating_rule_base(PresetId id) {
  switch (id) {
    case PresetId::Classification:
      return downtime_rule_base(false, 1.0);
    case PresetId::Tomato:
    case PresetId::TomatoSparse:
      return tomato_rule_base(false);
    default:
      return downtime_rule_base(false);
  }
}

// Half-widths of the generating rule base. Tomato sets touch without
// overlapping (half-width = a quarter of the span).
inline ParamVector true_params(PresetId id) {
  switch (id) {
    case PresetId::Classification:
      return {{5, 5, 5, 5, 5, 5, 0.5, 0.5, 0.5}, std::nullopt, std::nullopt};
    case PresetId::Tomato:
    case PresetId::TomatoSparse:
      return {{2.5, 2.5, 2.5, 2.5, 2.5, 2.5}, std::nullopt, std::nullopt};
    default:
      return {{5, 5, 5, 5, 5, 5, 50, 50, 50}, std::nullopt, std::nullopt};
  }
}

struct GeneratedData {
  CasePreset preset;
  Dataset data;
  RuleBase truth_base;  // bound to the true parameters
  ParamVector truth;
  std::vector<double> noiseless;  // fuzzy output before noise / thresholding
};

inline Rng data_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), 0xda7au};
  return Rng(seq);
}

// Inputs uniform over each input universe; y = g(x; truth) + N(0, noise_sd^2).
// Classification labels are 1 iff the noiseless output exceeds 0.5.
inline GeneratedData generate(const CasePreset& preset) {
  preset.validate();
  GeneratedData out;
  out.preset = preset;
  out.truth = true_params(preset.id);
  if (preset.noise_sd > 0.0 && preset.id != PresetId::Classification) out.truth.sigma = preset.noise_sd;
  const auto base = generating_rule_base(preset.id);
  out.truth_base = bind_params(base, ParamVector{out.truth.phi, std::nullopt, std::nullopt});

  Rng rng = data_rng(preset.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto& d = out.data;
  for (const auto& v : base.inputs) d.input_names.push_back(v.name);
  d.response_name = base.output.name;
  d.X = Matrix(preset.n_points, base.inputs.size());
  for (std::size_t r = 0; r < preset.n_points; ++r) {
    for (std::size_t c = 0; c < base.inputs.size(); ++c) {
      const auto& u = base.inputs[c].universe;
      d.X(r, c) = std::uniform_real_distribution<double>(u.lo, u.hi)(rng);
    }
  }
  out.noiseless = infer_batch(out.truth_base, d.X);
  d.y.resize(preset.n_points);
  for (std::size_t r = 0; r < preset.n_points; ++r) {
    if (preset.id == PresetId::Classification) {
      d.y[r] = out.noiseless[r] > 0.5 ? 1.0 : 0.0;
    } else {
      d.y[r] = out.noiseless[r] + (preset.noise_sd > 0.0 ? preset.noise_sd * noise(rng) : 0.0);
    }
  }
  return out;
}

inline Json truth_to_json(const GeneratedData& g) {
  Json j;
  j["preset"] = preset_name(g.preset.id);
  j["seed"] = g.preset.seed;
  j["n_points"] = g.preset.n_points;
  j["noise_sd"] = g.preset.noise_sd;
  j["phi"] = g.truth.phi;
  if (g.truth.sigma) j["sigma"] = *g.truth.sigma;
  j["rule_base"] = rule_base_to_json(generating_rule_base(g.preset.id));
  return j;
}

// Fuzzy model for a preset. Case I/II assume sigma = 0.001, Case III(a) and
// IV the true noise level, Case III(b) estimates sigma ~ Uniform(0.01, 10),
// Case IV adds two spurious rules with Bernoulli(0.5) inclusion flags, and
// the sparse tomato base rejects parameter sets that leave data unfired.
inline FblModel preset_model(PresetId id, Dataset data) {
  FblModel m;
  m.data = std::move(data);
  switch (id) {
    case PresetId::CaseI:
    case PresetId::CaseII:
    case PresetId::ScalingBench:
      m.rule_base = downtime_rule_base();
      m.prior.sigma = SigmaPrior::fixed(0.001);
      break;
    case PresetId::CaseIIIa:
      m.rule_base = downtime_rule_base();
      m.prior.sigma = SigmaPrior::fixed(1.0);
      break;
    case PresetId::CaseIIIb:
      m.rule_base = downtime_rule_base();
      m.prior.sigma = SigmaPrior::uniform(0.01, 10.0);
      break;
    case PresetId::CaseIV:
      m.rule_base = downtime_rule_base(true);
      m.prior.sigma = SigmaPrior::fixed(1.0);
      m.select_rules = true;
      break;
    case PresetId::Tomato:
      m.rule_base = tomato_rule_base(false);
      m.prior.sigma = SigmaPrior::fixed(tomato_noise_sd());
      break;
    case PresetId::TomatoSparse:
      m.rule_base = tomato_rule_base(true);
      m.prior.sigma = SigmaPrior::fixed(tomato_noise_sd());
      m.likelihood.no_fire = NoFirePolicy::Reject;
      break;
    case PresetId::Classification:
      m.rule_base = downtime_rule_base(false, 1.0);
      m.likelihood.kind = LikelihoodSpec::Kind::BernoulliClassification;
      break;
  }
  m.prior.phi_cmax = default_phi_cmax(m.rule_base);
  m.validate();
  return m;
}

// Adds estimation-only coordinates that the fuzzy function never reads.
// Every update pays a full model evaluation, as a real parameter does;
// checking the dummy support first would make the flat dummies (whose
// adapted steps overshoot their range) nearly free.
struct DummyParamTarget {
  const FblModel* model = nullptr;
  std::size_t extra = 0;

  std::vector<ParamSpec> layout() const {
    auto l = model->layout();
    for (std::size_t i = 0; i < extra; ++i) l.push_back({"dummy" + std::to_string(i + 1), ParamKind::Continuous, 0, 10, 10});
    return l;
  }
  double log_density(std::span<const double> x) const {
    const auto n = model->dimension();
    const double lp = model->log_density(x.subspan(0, n));
    for (std::size_t i = n; i < x.size(); ++i) {
      if (!(x[i] > 0.0 && x[i] <= 10.0)) return kNegInf;
    }
    return lp - static_cast<double>(extra) * std::log(10.0);
  }
  std::vector<double> draw_initial(Rng& rng) const {
    auto x = model->draw_initial(rng);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (std::size_t i = 0; i < extra; ++i) x.push_back(10.0 - u(rng));
    return x;
  }
};

// Case I model whose rule base carries `extra_rules` dummy rules over
// dummy inputs with fixed, overlapping membership functions. Dummy columns
// sit at 5, where every dummy set is active, so each added rule fires and
// the rule base really grows (the fitted function changes with it).
inline FblModel with_dummy_rules(const FblModel& base, std::size_t extra_rules) {
  FblModel m = base;
  const std::size_t per_var = 3;
  const std::size_t n_vars = (extra_rules + per_var - 1) / per_var;
  const std::size_t first = m.rule_base.inputs.size();
  for (std::size_t v = 0; v < n_vars; ++v) {
    LinguisticVariable d{"dummy" + std::to_string(v + 1), {0, 10}, {"A", "B", "C"}, {{0, 4, 8}, {1, 5, 9}, {2, 6, 10}}, true};
    m.rule_base.inputs.push_back(d);
    m.data.input_names.push_back(d.name);
  }
  for (std::size_t k = 0; k < extra_rules; ++k) {
    m.rule_base.rules.push_back(detail::make_rule("D" + std::to_string(k + 1),
                                                  {{first + k / per_var, k % per_var}}, Connective::And, k % 3));
  }
  Matrix X(m.data.size(), m.rule_base.inputs.size(), 5.0);
  for (std::size_t r = 0; r < m.data.size(); ++r) {
    for (std::size_t c = 0; c < base.data.dims(); ++c) X(r, c) = base.data.X(r, c);
  }
  m.data.X = std::move(X);
  m.validate();
  return m;
}

struct TimingRow {
  std::string varied;  // "parameters" or "rules"
  std::size_t parameters = 0;
  std::size_t rules = 0;
  double seconds = 0.0;  // mean over repeats
};

template <SamplingTarget M>
double time_run(const M& target, const SamplerConfig& cfg, std::size_t repeats) {
  double total = 0.0;
  for (std::size_t r = 0; r < repeats; ++r) {
    SamplerConfig c = cfg;
    c.seed = cfg.seed + r;
    const auto t0 = std::chrono::steady_clock::now();
    auto cs = run_chains(c, target);
    const auto t1 = std::chrono::steady_clock::now();
    total += std::chrono::duration<double>(t1 - t0).count();
  }
  return total / static_cast<double>(repeats);
}

// Wall-clock cost of single-chain sampling on Case I data as estimation
// parameters (>= 9) or rules (>= 3) are added.
inline std::vector<TimingRow> scaling_bench(const std::vector<std::size_t>& param_counts,
                                            const std::vector<std::size_t>& rule_counts,
                                            std::size_t iterations = 5000, std::size_t repeats = 3,
                                            std::uint64_t seed = 42) {
  detail::require(iterations >= 2 && repeats >= 1, "scaling_bench: iterations >= 2 and repeats >= 1");
  const auto gen = generate(default_preset(PresetId::ScalingBench, seed));
  const auto model = preset_model(PresetId::ScalingBench, gen.data);
  SamplerConfig cfg;
  cfg.n_iterations = iterations;
  cfg.burn_in = iterations / 5;
  cfg.n_chains = 1;
  cfg.seed = seed;
  cfg.init = InitMethod::Prior;  // time the sweeps, not the start search
  std::vector<TimingRow> out;
  for (auto p : param_counts) {
    detail::require(p >= model.dimension(), "scaling_bench: parameter count below " + std::to_string(model.dimension()));
    DummyParamTarget t{&model, p - model.dimension()};
    out.push_back({"parameters", p, model.rule_base.rules.size(), time_run(t, cfg, repeats)});
  }
  for (auto r : rule_counts) {
    detail::require(r >= model.rule_base.rules.size(), "scaling_bench: rule count below " +
                                                           std::to_string(model.rule_base.rules.size()));
    const auto m = with_dummy_rules(model, r - model.rule_base.rules.size());
    out.push_back({"rules", m.dimension(), r, time_run(m, cfg, repeats)});
  }
  return out;
}

}  // namespace fbl
