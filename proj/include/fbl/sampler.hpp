#pragma once

// Metropolis-within-Gibbs over a flat parameter vector: one Gaussian
// random-walk Metropolis step per continuous coordinate, one complement-flip
// Metropolis step per binary coordinate, coordinates visited in a fixed
// order each sweep. Multiple chains run on independent RNG streams.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "fbl/dataset.hpp"
#include "fbl/error.hpp"
#include "fbl/fuzzy.hpp"
#include "fbl/fuzzy_json.hpp"
#include "fbl/optimize.hpp"
#include "fbl/param.hpp"

namespace fbl {

enum class InitMethod { Prior, Mode };

struct SamplerConfig {
  std::size_t n_iterations = 10000;
  std::size_t burn_in = 2000;
  std::size_t n_chains = 3;
  std::uint64_t seed = 42;
  // Initial random-walk step as a fraction of each parameter's scale.
  double step_fraction = 0.025;
  // Tune steps toward target_accept during burn-in; frozen afterwards.
  bool adapt = true;
  double target_accept = 0.35;
  bool random_scan = false;
  // Prior: each chain starts at a prior draw. Mode: the prior draw is
  // pushed uphill by Nelder-Mead over the continuous coordinates, then
  // basin hopping replaces 2-3 random coordinates with fresh prior values (or
  // flips an inclusion flag) and re-polishes, keeping improvements, until init_patience hops in a row
  // fail or init_hops is reached. Nothing here is recorded in the chain.
  InitMethod init = InitMethod::Mode;
  std::size_t init_hops = 100;
  std::size_t init_patience = 30;
  std::size_t init_restarts = 6;
  std::size_t init_max_iter = 3000;
  bool parallel = true;
  std::size_t max_init_tries = 1000;

  void validate() const {
    detail::require(n_iterations > 0, "sampler: n_iterations must be > 0");
    detail::require(burn_in < n_iterations, "sampler: burn_in must be < n_iterations");
    detail::require(n_chains >= 1, "sampler: n_chains must be >= 1");
    detail::require(step_fraction > 0.0 && step_fraction < 1.0, "sampler: step_fraction must be in (0, 1)");
    detail::require(target_accept > 0.0 && target_accept < 1.0, "sampler: target_accept must be in (0, 1)");
    detail::require(init_restarts >= 1 && init_max_iter >= 1, "sampler: init_restarts and init_max_iter must be >= 1");
  }
};

struct Move {
  double value = 0.0;
  double log_density = 0.0;
  bool accepted = false;
  double accept_prob = 0.0;
};

namespace detail {

inline bool metropolis_accept(double delta, Rng& rng) {
  if (std::isnan(delta)) return false;
  if (delta >= 0.0) return true;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return std::log(unit(rng)) < delta;
}

inline double accept_probability(double delta) {
  if (std::isnan(delta)) return 0.0;
  return delta >= 0.0 ? 1.0 : std::exp(delta);
}

}  // namespace detail

// Random-walk Metropolis update of coordinate i against the full conditional,
// which is the joint density with every other coordinate held fixed.
template <SamplingTarget M>
Move draw_sample_continuous(std::size_t i, std::span<const double> state, double current_log_density,
                            const M& model, Rng& rng, double step) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> proposal(state.begin(), state.end());
  proposal[i] = state[i] + step * normal(rng);
  const double lp = model.log_density(proposal);
  const double delta = lp - current_log_density;
  if (detail::metropolis_accept(delta, rng)) return {proposal[i], lp, true, detail::accept_probability(delta)};
  return {state[i], current_log_density, false, detail::accept_probability(delta)};
}

// Proposes the complement of binary coordinate k.
template <SamplingTarget M>
Move draw_sample_binary(std::size_t k, std::span<const double> state, double current_log_density, const M& model,
                        Rng& rng) {
  std::vector<double> proposal(state.begin(), state.end());
  proposal[k] = state[k] != 0.0 ? 0.0 : 1.0;
  const double lp = model.log_density(proposal);
  const double delta = lp - current_log_density;
  if (detail::metropolis_accept(delta, rng)) return {proposal[k], lp, true, detail::accept_probability(delta)};
  return {state[k], current_log_density, false, detail::accept_probability(delta)};
}

// Single-chain Metropolis-within-Gibbs kernel with per-coordinate step sizes.
template <SamplingTarget M>
class GibbsSampler {
 public:
  GibbsSampler(const M& model, const SamplerConfig& cfg, std::vector<double> init)
      : model_(&model), cfg_(cfg), layout_(model.layout()), state_(std::move(init)) {
    detail::require(state_.size() == layout_.size(), "sampler: initial state has wrong length");
    log_density_ = model_->log_density(state_);
    detail::require(log_density_ > kNegInf, "sampler: initial state is outside the support");
    steps_.resize(layout_.size());
    for (std::size_t i = 0; i < layout_.size(); ++i) steps_[i] = cfg_.step_fraction * layout_[i].scale;
    accepts_.assign(layout_.size(), 0);
    proposals_.assign(layout_.size(), 0);
    order_.resize(layout_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  // One pass over every coordinate. With `adapting`, continuous steps move
  // toward the target acceptance rate (Robbins-Monro on the log step).
  void sweep(Rng& rng, bool adapting) {
    if (cfg_.random_scan) std::shuffle(order_.begin(), order_.end(), rng);
    const double gain = adapting ? 1.0 / std::sqrt(1.0 + static_cast<double>(adapt_sweeps_)) : 0.0;
    for (std::size_t i : order_) {
      const bool binary = layout_[i].kind == ParamKind::Binary;
      const Move mv = binary ? draw_sample_binary(i, state_, log_density_, *model_, rng)
                             : draw_sample_continuous(i, state_, log_density_, *model_, rng, steps_[i]);
      state_[i] = mv.value;
      log_density_ = mv.log_density;
      if (count_) {
        ++proposals_[i];
        if (mv.accepted) ++accepts_[i];
      }
      if (adapting && !binary) {
        const double s = layout_[i].scale;
        steps_[i] = std::clamp(steps_[i] * std::exp(gain * (mv.accept_prob - cfg_.target_accept)), 1e-12 * s, s);
      }
    }
    if (adapting) ++adapt_sweeps_;
  }

  void set_counting(bool on) { count_ = on; }

  const std::vector<double>& state() const { return state_; }
  double log_density() const { return log_density_; }
  const std::vector<double>& steps() const { return steps_; }
  const std::vector<std::size_t>& accepts() const { return accepts_; }
  const std::vector<std::size_t>& proposals() const { return proposals_; }

 private:
  const M* model_;
  SamplerConfig cfg_;
  std::vector<ParamSpec> layout_;
  std::vector<double> state_;
  double log_density_ = 0.0;
  std::vector<double> steps_;
  std::vector<std::size_t> accepts_;
  std::vector<std::size_t> proposals_;
  std::vector<std::size_t> order_;
  std::size_t adapt_sweeps_ = 0;
  bool count_ = true;
};

// One fixed-order sweep with fixed steps; returns the new state.
template <SamplingTarget M>
std::vector<double> gibbs_sweep(std::vector<double> state, const M& model, Rng& rng, std::span<const double> steps) {
  const auto layout = model.layout();
  detail::require(state.size() == layout.size() && steps.size() == layout.size(),
                  "gibbs_sweep: state/steps length != parameter count");
  double lp = model.log_density(state);
  detail::require(lp > kNegInf, "gibbs_sweep: state is outside the support");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const Move mv = layout[i].kind == ParamKind::Binary ? draw_sample_binary(i, state, lp, model, rng)
                                                        : draw_sample_continuous(i, state, lp, model, rng, steps[i]);
    state[i] = mv.value;
    lp = mv.log_density;
  }
  return state;
}

struct ChainSet {
  std::vector<std::string> names;
  std::vector<ParamKind> kinds;
  std::vector<Matrix> samples;  // per chain, [iteration x parameter]
  // Post-burn-in acceptance bookkeeping, per chain and parameter.
  std::vector<std::vector<std::size_t>> accept_counts;
  std::vector<std::vector<std::size_t>> proposal_counts;
  std::vector<std::vector<double>> final_steps;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  SamplerConfig config;

  std::size_t n_chains() const { return samples.size(); }
  std::size_t n_params() const { return names.size(); }
  std::size_t n_iterations() const { return samples.empty() ? 0 : samples.front().rows; }
  std::size_t retained() const { return n_iterations() - burn_in; }

  std::size_t index_of(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    detail::require(it != names.end(), "no parameter named '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
  }

  std::vector<double> draws(std::size_t chain, std::size_t param, bool post_burn_in = true) const {
    const auto& m = samples.at(chain);
    std::vector<double> out;
    out.reserve(m.rows);
    for (std::size_t r = post_burn_in ? burn_in : 0; r < m.rows; ++r) out.push_back(m(r, param));
    return out;
  }

  // Post-burn-in draws of one parameter across all chains, chain by chain.
  std::vector<double> pooled(std::size_t param) const {
    std::vector<double> out;
    for (std::size_t c = 0; c < n_chains(); ++c) {
      auto d = draws(c, param);
      out.insert(out.end(), d.begin(), d.end());
    }
    return out;
  }

  // Post-burn-in states across all chains, one row per retained iteration.
  Matrix pooled_states() const {
    Matrix out(0, n_params());
    for (const auto& m : samples) {
      for (std::size_t r = burn_in; r < m.rows; ++r) out.append_row(m.row(r));
    }
    return out;
  }

  double acceptance_rate(std::size_t chain, std::size_t param) const {
    const auto n = proposal_counts.at(chain).at(param);
    return n ? static_cast<double>(accept_counts[chain][param]) / static_cast<double>(n) : 0.0;
  }
};

// Independent stream for chain `chain`.
inline Rng chain_rng(std::uint64_t seed, std::size_t chain) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain), 0x9e3779b9u};
  return Rng(seq);
}

template <SamplingTarget M>
std::vector<double> initial_state(const M& model, Rng& rng, std::size_t max_tries) {
  for (std::size_t t = 0; t < max_tries; ++t) {
    auto x = model.draw_initial(rng);
    if (model.log_density(x) > kNegInf) return x;
  }
  throw Error("sampler: no initial state with finite log density after " + std::to_string(max_tries) + " draws");
}

namespace detail {

template <SamplingTarget M>
std::vector<double> chain_start(const SamplerConfig& cfg, const M& model, Rng& rng) {
  auto x0 = initial_state(model, rng, cfg.max_init_tries);
  if (cfg.init == InitMethod::Prior) return x0;
  const auto layout = model.layout();
  std::vector<std::size_t> free, flags;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    (layout[i].kind == ParamKind::Continuous ? free : flags).push_back(i);
  }
  auto best = find_mode(model, std::move(x0), cfg.init_restarts, cfg.init_max_iter);
  std::size_t misses = 0;
  for (std::size_t h = 0; h < cfg.init_hops && misses < cfg.init_patience && !(free.empty() && flags.empty()); ++h) {
    auto y = best.x;
    // Half the hops flip one inclusion flag instead; a flag can be stuck
    // once the continuous coordinates have adapted to it.
    if (!flags.empty() && (free.empty() || rng() % 2 == 0)) {
      const auto f = flags[rng() % flags.size()];
      y[f] = 1.0 - y[f];
    } else {
      const auto fresh = model.draw_initial(rng);
      std::shuffle(free.begin(), free.end(), rng);
      const std::size_t k = std::min<std::size_t>(free.size(), 2 + rng() % 2);
      for (std::size_t c = 0; c < k; ++c) y[free[c]] = fresh[free[c]];
    }
    if (!(model.log_density(y) > kNegInf)) {
      ++misses;
      continue;
    }
    auto r = find_mode(model, std::move(y), 2, 1000);
    if (r.log_density > best.log_density + 1e-6) {
      best = std::move(r);
      misses = 0;
    } else {
      ++misses;
    }
  }
  return best.x;
}

template <SamplingTarget M>
void run_one_chain(const SamplerConfig& cfg, const M& model, const std::optional<std::vector<double>>& init,
                   std::size_t chain, ChainSet& out) {
  Rng rng = chain_rng(cfg.seed, chain);
  GibbsSampler<M> sampler(model, cfg, init ? *init : chain_start(cfg, model, rng));
  Matrix m(cfg.n_iterations, out.n_params());
  for (std::size_t it = 0; it < cfg.n_iterations; ++it) {
    const bool burning = it < cfg.burn_in;
    sampler.set_counting(!burning || cfg.burn_in == 0);
    sampler.sweep(rng, burning && cfg.adapt);
    std::copy(sampler.state().begin(), sampler.state().end(), m.row(it).begin());
  }
  out.samples[chain] = std::move(m);
  out.accept_counts[chain] = sampler.accepts();
  out.proposal_counts[chain] = sampler.proposals();
  out.final_steps[chain] = sampler.steps();
}

}  // namespace detail

template <SamplingTarget M>
ChainSet run_chains(const SamplerConfig& cfg, const M& model,
                    const std::optional<std::vector<double>>& init = std::nullopt) {
  cfg.validate();
  const auto layout = model.layout();
  ChainSet out;
  for (const auto& p : layout) {
    out.names.push_back(p.name);
    out.kinds.push_back(p.kind);
  }
  out.burn_in = cfg.burn_in;
  out.seed = cfg.seed;
  out.config = cfg;
  out.samples.resize(cfg.n_chains);
  out.accept_counts.resize(cfg.n_chains);
  out.proposal_counts.resize(cfg.n_chains);
  out.final_steps.resize(cfg.n_chains);
  if (init) {
    detail::require(init->size() == layout.size(), "run_chains: init has wrong length");
    detail::require(model.log_density(*init) > kNegInf, "run_chains: init is outside the support");
  }

  if (!cfg.parallel || cfg.n_chains == 1) {
    for (std::size_t c = 0; c < cfg.n_chains; ++c) detail::run_one_chain(cfg, model, init, c, out);
    return out;
  }
  std::vector<std::exception_ptr> errors(cfg.n_chains);
  {
    std::vector<std::jthread> threads;
    for (std::size_t c = 0; c < cfg.n_chains; ++c) {
      threads.emplace_back([&, c] {
        try {
          detail::run_one_chain(cfg, model, init, c, out);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

// On disk: chain_<k>.csv (header = parameter names, one row per iteration)
// plus manifest.json with seed, config and acceptance rates.
inline Json sampler_config_to_json(const SamplerConfig& c) {
  return {{"iterations", c.n_iterations}, {"burn_in", c.burn_in},         {"chains", c.n_chains},
          {"seed", c.seed},               {"step_fraction", c.step_fraction}, {"adapt", c.adapt},
          {"target_accept", c.target_accept}, {"random_scan", c.random_scan},
          {"init", c.init == InitMethod::Mode ? "mode" : "prior"}, {"init_hops", c.init_hops},
          {"init_patience", c.init_patience}, {"init_restarts", c.init_restarts}, {"init_max_iter", c.init_max_iter}};
}

inline SamplerConfig sampler_config_from_json(const Json& j, SamplerConfig c = {}) {
  c.n_iterations = j.value("iterations", c.n_iterations);
  c.burn_in = j.value("burn_in", c.burn_in);
  c.n_chains = j.value("chains", c.n_chains);
  c.seed = j.value("seed", c.seed);
  c.step_fraction = j.value("step_fraction", c.step_fraction);
  c.adapt = j.value("adapt", c.adapt);
  c.target_accept = j.value("target_accept", c.target_accept);
  c.random_scan = j.value("random_scan", c.random_scan);
  if (j.contains("init")) {
    const auto v = j.at("init").get<std::string>();
    detail::require(v == "mode" || v == "prior", "sampler config: init must be \"mode\" or \"prior\"");
    c.init = v == "mode" ? InitMethod::Mode : InitMethod::Prior;
  }
  c.init_hops = j.value("init_hops", c.init_hops);
  c.init_patience = j.value("init_patience", c.init_patience);
  c.init_restarts = j.value("init_restarts", c.init_restarts);
  c.init_max_iter = j.value("init_max_iter", c.init_max_iter);
  return c;
}

inline Json chain_manifest(const ChainSet& cs) {
  Json j;
  j["seed"] = cs.seed;
  j["burn_in"] = cs.burn_in;
  j["iterations"] = cs.n_iterations();
  j["chains"] = cs.n_chains();
  j["config"] = sampler_config_to_json(cs.config);
  j["parameters"] = cs.names;
  Json kinds = Json::array();
  for (auto k : cs.kinds) kinds.push_back(k == ParamKind::Binary ? "binary" : "continuous");
  j["kinds"] = kinds;
  Json acc = Json::array();
  for (std::size_t c = 0; c < cs.n_chains(); ++c) {
    Json row = Json::object();
    for (std::size_t p = 0; p < cs.n_params(); ++p) row[cs.names[p]] = cs.acceptance_rate(c, p);
    acc.push_back(row);
  }
  j["acceptance_rates"] = acc;
  j["final_steps"] = cs.final_steps;
  j["chain_files"] = Json::array();
  for (std::size_t c = 0; c < cs.n_chains(); ++c) j["chain_files"].push_back("chain_" + std::to_string(c + 1) + ".csv");
  return j;
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  detail::require(out.good(), "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  detail::require(out.good(), "failed writing '" + path + "'");
}

inline void write_chains(const std::string& dir, const ChainSet& cs) {
  std::filesystem::create_directories(dir);
  for (std::size_t c = 0; c < cs.n_chains(); ++c) {
    write_csv_table(dir + "/chain_" + std::to_string(c + 1) + ".csv", cs.names, cs.samples[c]);
  }
  write_json_file(dir + "/manifest.json", chain_manifest(cs));
}

inline ChainSet read_chains(const std::string& dir) {
  const auto manifest = read_json_file(dir + "/manifest.json");
  ChainSet cs;
  cs.seed = manifest.at("seed").get<std::uint64_t>();
  cs.burn_in = manifest.at("burn_in").get<std::size_t>();
  cs.config = sampler_config_from_json(manifest.at("config"));
  cs.names = manifest.at("parameters").get<std::vector<std::string>>();
  for (const auto& k : manifest.at("kinds")) cs.kinds.push_back(k == "binary" ? ParamKind::Binary : ParamKind::Continuous);
  for (const auto& f : manifest.at("chain_files")) {
    auto t = read_csv_table(dir + "/" + f.get<std::string>());
    detail::require(t.header == cs.names, "chain file '" + f.get<std::string>() + "' header does not match manifest");
    cs.samples.push_back(std::move(t.values));
  }
  const auto n = cs.samples.size();
  cs.accept_counts.assign(n, std::vector<std::size_t>(cs.names.size(), 0));
  cs.proposal_counts.assign(n, std::vector<std::size_t>(cs.names.size(), 0));
  cs.final_steps = manifest.at("final_steps").get<std::vector<std::vector<double>>>();
  for (std::size_t c = 0; c + 1 < n; ++c) {
    detail::require(cs.samples[c].rows == cs.samples[c + 1].rows, "chains have different lengths");
  }
  return cs;
}

}  // namespace fbl
