#pragma once

// Experiment configuration: one JSON file naming a preset or a rule base
// plus data, with prior, likelihood and sampler settings.
//
// {
//   "preset": "case1",                 // optional; supplies data + defaults
//   "rule_base": "rb.json",            // optional; overrides the preset's base
//   "data": "data.csv",                // optional; overrides generated data
//   "response": "downtime",            // optional response column
//   "prior": {"sigma": {"kind": "fixed", "value": 0.001},
//             "phi_cmax": [...], "p_include": 0.5},
//   "likelihood": {"kind": "gaussian", "clamp_eps": 1e-6, "no_fire": "midpoint"},
//   "select_rules": false,
//   "sampler": {"iterations": 10000, "burn_in": 2000, "chains": 3},
//   "seed": 42,
//   "glm": ["GLM1", "GLM4"]
// }
//
// Relative paths resolve against the config file's directory.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fbl/datagen.hpp"
#include "fbl/error.hpp"
#include "fbl/fuzzy_json.hpp"
#include "fbl/probability.hpp"
#include "fbl/sampler.hpp"

namespace fbl {

inline Json sigma_prior_to_json(const SigmaPrior& p) {
  switch (p.kind) {
    case SigmaPrior::Kind::Fixed:
      return {{"kind", "fixed"}, {"value", p.value}};
    case SigmaPrior::Kind::Uniform:
      return {{"kind", "uniform"}, {"lo", p.lo}, {"hi", p.hi}};
    case SigmaPrior::Kind::HalfCauchy:
      return {{"kind", "half_cauchy"}, {"scale", p.scale}};
  }
  return {};
}

inline SigmaPrior sigma_prior_from_json(const Json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "fixed") return SigmaPrior::fixed(j.at("value").get<double>());
  if (kind == "uniform") return SigmaPrior::uniform(j.value("lo", 0.01), j.value("hi", 10.0));
  if (kind == "half_cauchy") return SigmaPrior::half_cauchy(j.value("scale", 10.0));
  throw Error("sigma prior: unknown kind '" + kind + "' (fixed, uniform, half_cauchy)");
}

inline Json likelihood_to_json(const LikelihoodSpec& l) {
  return {{"kind", l.kind == LikelihoodSpec::Kind::GaussianRegression ? "gaussian" : "bernoulli"},
          {"clamp_eps", l.clamp_eps},
          {"no_fire", l.no_fire == NoFirePolicy::Midpoint ? "midpoint" : "reject"}};
}

inline LikelihoodSpec likelihood_from_json(const Json& j, LikelihoodSpec l = {}) {
  if (j.contains("kind")) {
    const auto k = j.at("kind").get<std::string>();
    detail::require(k == "gaussian" || k == "bernoulli", "likelihood: kind must be gaussian or bernoulli");
    l.kind = k == "gaussian" ? LikelihoodSpec::Kind::GaussianRegression : LikelihoodSpec::Kind::BernoulliClassification;
  }
  l.clamp_eps = j.value("clamp_eps", l.clamp_eps);
  if (j.contains("no_fire")) {
    const auto p = j.at("no_fire").get<std::string>();
    detail::require(p == "midpoint" || p == "reject", "likelihood: no_fire must be midpoint or reject");
    l.no_fire = p == "midpoint" ? NoFirePolicy::Midpoint : NoFirePolicy::Reject;
  }
  return l;
}

// Model description without data (the data travel as CSV).
inline Json model_to_json(const FblModel& m) {
  return {{"rule_base", rule_base_to_json(m.rule_base)},
          {"prior", {{"sigma", sigma_prior_to_json(m.prior.sigma)},
                     {"phi_cmax", m.prior.phi_cmax},
                     {"p_include", m.prior.p_include}}},
          {"likelihood", likelihood_to_json(m.likelihood)},
          {"select_rules", m.select_rules}};
}

inline void apply_prior_json(const Json& j, FblModel& m) {
  if (j.contains("sigma")) m.prior.sigma = sigma_prior_from_json(j.at("sigma"));
  if (j.contains("phi_cmax")) m.prior.phi_cmax = j.at("phi_cmax").get<std::vector<double>>();
  m.prior.p_include = j.value("p_include", m.prior.p_include);
}

inline FblModel model_from_json(const Json& j, Dataset data) {
  FblModel m;
  m.rule_base = rule_base_from_json(j.at("rule_base"));
  m.prior.phi_cmax = default_phi_cmax(m.rule_base);
  if (j.contains("prior")) apply_prior_json(j.at("prior"), m);
  if (j.contains("likelihood")) m.likelihood = likelihood_from_json(j.at("likelihood"));
  m.select_rules = j.value("select_rules", false);
  m.data = std::move(data);
  m.validate();
  return m;
}

struct ExperimentConfig {
  std::optional<PresetId> preset;
  std::optional<std::string> rule_base_path;
  std::optional<std::string> data_path;
  std::optional<std::string> response;
  Json prior = Json::object();
  Json likelihood = Json::object();
  std::optional<bool> select_rules;
  std::optional<bool> estimate_sigma;
  SamplerConfig sampler;
  std::vector<std::string> glm;
};

inline ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return (path.is_absolute() || base_dir.empty() ? path : base_dir / path).string();
  };
  if (j.contains("preset")) c.preset = parse_preset(j.at("preset").get<std::string>());
  if (j.contains("rule_base")) c.rule_base_path = resolve(j.at("rule_base").get<std::string>());
  if (j.contains("data")) c.data_path = resolve(j.at("data").get<std::string>());
  if (j.contains("response")) c.response = j.at("response").get<std::string>();
  if (j.contains("prior")) c.prior = j.at("prior");
  if (j.contains("likelihood")) c.likelihood = j.at("likelihood");
  if (j.contains("select_rules")) c.select_rules = j.at("select_rules").get<bool>();
  if (j.contains("estimate_sigma")) c.estimate_sigma = j.at("estimate_sigma").get<bool>();
  if (j.contains("sampler")) c.sampler = sampler_config_from_json(j.at("sampler"));
  if (j.contains("seed")) c.sampler.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("glm")) c.glm = j.at("glm").get<std::vector<std::string>>();
  return c;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  return experiment_from_json(read_json_file(path), std::filesystem::path(path).parent_path());
}

// Data named by the config, else the preset's generated data at the
// sampler seed.
inline Dataset experiment_data(const ExperimentConfig& c) {
  if (c.data_path) return load_csv(*c.data_path, c.response);
  detail::require(c.preset.has_value(), "experiment: needs a preset or a data file");
  return generate(default_preset(*c.preset, c.sampler.seed)).data;
}

inline FblModel build_model(const ExperimentConfig& c) {
  auto data = experiment_data(c);
  FblModel m;
  if (c.preset) {
    m = preset_model(*c.preset, std::move(data));
  } else {
    detail::require(c.rule_base_path.has_value(), "experiment: needs a preset or a rule_base file");
    m.rule_base = load_rule_base(*c.rule_base_path);
    m.prior.phi_cmax = default_phi_cmax(m.rule_base);
    m.data = std::move(data);
  }
  if (c.rule_base_path && c.preset) {
    m.rule_base = load_rule_base(*c.rule_base_path);
    m.prior.phi_cmax = default_phi_cmax(m.rule_base);
  }
  apply_prior_json(c.prior, m);
  m.likelihood = likelihood_from_json(c.likelihood, m.likelihood);
  if (c.select_rules) m.select_rules = *c.select_rules;
  if (c.estimate_sigma) {
    if (*c.estimate_sigma && !m.prior.sigma.estimated()) m.prior.sigma = SigmaPrior::uniform(0.01, 10.0);
    if (!*c.estimate_sigma && m.prior.sigma.estimated()) m.prior.sigma = SigmaPrior::fixed(1.0);
  }
  m.validate();
  return m;
}

}  // namespace fbl
