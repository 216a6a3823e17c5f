#pragma once

// Posterior-predictive evaluation, point classification, MSE and the
// simulation-based bias study.

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fbl/datagen.hpp"
#include "fbl/diagnostics.hpp"
#include "fbl/error.hpp"
#include "fbl/fuzzy.hpp"
#include "fbl/glm.hpp"
#include "fbl/probability.hpp"
#include "fbl/sampler.hpp"

namespace fbl {

inline double mse(std::span<const double> y_pred, std::span<const double> y) {
  detail::require(y_pred.size() == y.size(), "mse: length mismatch (" + std::to_string(y_pred.size()) + " vs " +
                                                 std::to_string(y.size()) + ")");
  detail::require(!y.empty(), "mse: empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y_pred[i] - y[i];
    ss += e * e;
  }
  return ss / static_cast<double>(y.size());
}

// Column means of a [draws x rows] matrix.
inline std::vector<double> column_means(const Matrix& m) {
  std::vector<double> out(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += m(r, c);
  }
  for (auto& v : out) v /= static_cast<double>(m.rows);
  return out;
}

inline Rng predictive_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), 0x9d1cu};
  return Rng(seq);
}

// One row per retained draw (chains in order), one column per row of X_new.
// Regression draws get N(0, sigma^2) noise; classification draws are the
// fuzzy probability itself.
inline Matrix posterior_predictive(const ChainSet& chains, const FblModel& model, const Matrix& X_new,
                                   std::uint64_t seed = 0) {
  detail::require(chains.n_params() == model.dimension(), "posterior_predictive: chains have " +
                                                              std::to_string(chains.n_params()) +
                                                              " parameters, model expects " +
                                                              std::to_string(model.dimension()));
  detail::require(X_new.cols == model.rule_base.inputs.size(), "posterior_predictive: X_new has " +
                                                                   std::to_string(X_new.cols) + " columns, model has " +
                                                                   std::to_string(model.rule_base.inputs.size()) +
                                                                   " inputs");
  detail::require(chains.retained() > 0, "posterior_predictive: no post-burn-in draws");
  const auto states = chains.pooled_states();
  Rng rng = predictive_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(states.rows, X_new.rows);
  for (std::size_t d = 0; d < states.rows; ++d) {
    const auto theta = model.unflatten(states.row(d));
    const auto bound = bind_params(model.rule_base, theta);
    const double sigma = model.sigma_of(theta);
    for (std::size_t r = 0; r < X_new.rows; ++r) {
      const double g = infer(bound, X_new.row(r), model.defuzz);
      out(d, r) = model.classification() ? g : g + sigma * normal(rng);
    }
  }
  return out;
}

inline Matrix posterior_predictive(const ChainSet& chains, const GlmModel& glm, const Matrix& X_new,
                                   std::uint64_t seed = 0) {
  const auto k = glm.terms.size();
  detail::require(chains.n_params() == k + (glm.sigma.estimated() ? 1 : 0),
                  "posterior_predictive: chains do not match " + glm.name);
  detail::require(chains.retained() > 0, "posterior_predictive: no post-burn-in draws");
  const auto states = chains.pooled_states();
  const auto D = design_matrix(glm, X_new);
  Rng rng = predictive_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(states.rows, X_new.rows);
  for (std::size_t d = 0; d < states.rows; ++d) {
    const auto s = states.row(d);
    const double sigma = glm.sigma.estimated() ? s[k] : glm.sigma.value;
    for (std::size_t r = 0; r < X_new.rows; ++r) {
      double mu = 0.0;
      for (std::size_t t = 0; t < k; ++t) mu += s[t] * D(r, t);
      out(d, r) = mu + sigma * normal(rng);
    }
  }
  return out;
}

// Posterior-mean parameters; inclusion flags are rounded (mean >= 0.5).
inline ParamVector posterior_mean_params(const ChainSet& chains, const FblModel& model) {
  detail::require(chains.n_params() == model.dimension(), "posterior mean: chains do not match the model");
  std::vector<double> x(chains.n_params());
  for (std::size_t p = 0; p < x.size(); ++p) {
    x[p] = mean(chains.pooled(p));
    if (chains.kinds[p] == ParamKind::Binary) x[p] = x[p] >= 0.5 ? 1.0 : 0.0;
  }
  return model.unflatten(x);
}

// Label 1 where g(x; posterior mean) > threshold; a tie gives 0.
inline std::vector<int> classify(const ChainSet& chains, const FblModel& model, const Matrix& X_new,
                                 double threshold = 0.5) {
  detail::require(model.classification(), "classify: model is not a classification model");
  const auto bound = bind_params(model.rule_base, posterior_mean_params(chains, model));
  std::vector<int> out;
  for (std::size_t r = 0; r < X_new.rows; ++r) out.push_back(infer(bound, X_new.row(r), model.defuzz) > threshold);
  return out;
}

struct ChiSquaredResult {
  std::size_t bins = 10;
  std::vector<std::size_t> counts;
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  double alpha = 0.01;
  bool reject = false;
};

// Pearson test of Uniform(0, 1) with equal-width bins; 1.0 lands in the top bin.
inline ChiSquaredResult chi_squared_uniformity(std::span<const double> values, std::size_t bins = 10,
                                               double alpha = 0.01) {
  detail::require(bins >= 2, "chi-squared: need at least 2 bins");
  detail::require(!values.empty(), "chi-squared: no values");
  ChiSquaredResult r;
  r.bins = bins;
  r.alpha = alpha;
  r.counts.assign(bins, 0);
  for (double v : values) {
    detail::require(v >= 0.0 && v <= 1.0, "chi-squared: values must lie in [0, 1]");
    r.counts[std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)))]++;
  }
  const double expected = static_cast<double>(values.size()) / static_cast<double>(bins);
  for (auto c : r.counts) r.statistic += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  r.df = static_cast<double>(bins - 1);
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.df), r.statistic));
  r.reject = r.p_value < alpha;
  return r;
}

// Fraction of draws below the true value, ties counted as half.
inline double prob_below(std::span<const double> draws, double truth) {
  detail::require(!draws.empty(), "prob_below: no draws");
  double n = 0.0;
  for (double d : draws) n += d < truth ? 1.0 : (d == truth ? 0.5 : 0.0);
  return n / static_cast<double>(draws.size());
}

struct BiasStudyConfig {
  std::size_t n_replicates = 30;
  PresetId preset = PresetId::CaseI;
  // Replicate data noise. Matches the fixed likelihood sigma so the
  // posterior is calibrated.
  double noise_sd = 0.001;
  std::uint64_t seed = 1000;
  SamplerConfig sampler;
  std::size_t bins = 10;
  double alpha = 0.01;
};

struct BiasStudyResult {
  std::vector<std::string> names;
  Matrix probabilities;  // [replicate x parameter]
  ChiSquaredResult test;
};

// Replicate r draws its data with seed + r and samples with seed + r.
inline BiasStudyResult bias_study(const BiasStudyConfig& cfg) {
  detail::require(cfg.n_replicates > 0, "bias_study: n_replicates must be > 0");
  BiasStudyResult out;
  for (std::size_t r = 0; r < cfg.n_replicates; ++r) {
    auto preset = default_preset(cfg.preset, cfg.seed + r);
    preset.noise_sd = cfg.noise_sd;
    const auto gen = generate(preset);
    const auto model = preset_model(cfg.preset, gen.data);
    SamplerConfig sc = cfg.sampler;
    sc.seed = cfg.seed + r;
    const auto chains = run_chains(sc, model);
    const auto truth = gen.truth.phi;
    if (r == 0) {
      out.names.assign(chains.names.begin(), chains.names.begin() + static_cast<std::ptrdiff_t>(truth.size()));
      out.probabilities = Matrix(0, truth.size());
    }
    std::vector<double> row;
    for (std::size_t p = 0; p < truth.size(); ++p) row.push_back(prob_below(chains.pooled(p), truth[p]));
    out.probabilities.append_row(row);
  }
  out.test = chi_squared_uniformity(out.probabilities.data, cfg.bins, cfg.alpha);
  return out;
}

inline Json bias_study_to_json(const BiasStudyResult& b) {
  Json j;
  j["names"] = b.names;
  Json rows = Json::array();
  for (std::size_t r = 0; r < b.probabilities.rows; ++r) {
    const auto row = b.probabilities.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["probabilities"] = rows;
  j["chi_squared"] = {{"bins", b.test.bins},       {"counts", b.test.counts}, {"statistic", b.test.statistic},
                      {"df", b.test.df},           {"p_value", b.test.p_value}, {"alpha", b.test.alpha},
                      {"reject", b.test.reject}};
  return j;
}

}  // namespace fbl
