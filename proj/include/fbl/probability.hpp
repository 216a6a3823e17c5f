#pragma once

// Priors, likelihoods and the unnormalized posterior of a fuzzy model.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbl/dataset.hpp"
#include "fbl/error.hpp"
#include "fbl/fuzzy.hpp"
#include "fbl/param.hpp"

namespace fbl {

struct SigmaPrior {
  enum class Kind { Fixed, Uniform, HalfCauchy };
  Kind kind = Kind::Fixed;
  double value = 1.0;  // Fixed
  double lo = 0.01;    // Uniform
  double hi = 10.0;
  double scale = 10.0;  // HalfCauchy

  static SigmaPrior fixed(double v) { return {Kind::Fixed, v}; }
  static SigmaPrior uniform(double lo, double hi) { return {Kind::Uniform, 1.0, lo, hi}; }
  static SigmaPrior half_cauchy(double scale) { return {Kind::HalfCauchy, 1.0, 0.01, 10.0, scale}; }

  bool estimated() const { return kind != Kind::Fixed; }
};

// Half-Cauchy: Cauchy(0, scale) left-truncated at zero.
inline double half_cauchy_log_pdf(double x, double scale) {
  if (!(x > 0.0)) return kNegInf;
  const double z = x / scale;
  return std::log(2.0 / (std::numbers::pi * scale * (1.0 + z * z)));
}

inline double normal_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sd) - 0.5 * z * z;
}

inline double sigma_log_prior(double sigma, const SigmaPrior& p) {
  switch (p.kind) {
    case SigmaPrior::Kind::Fixed:
      return 0.0;
    case SigmaPrior::Kind::Uniform:
      return sigma >= p.lo && sigma <= p.hi ? -std::log(p.hi - p.lo) : kNegInf;
    case SigmaPrior::Kind::HalfCauchy:
      return half_cauchy_log_pdf(sigma, p.scale);
  }
  return kNegInf;
}

struct PriorSpec {
  // Upper bound of Uniform(0, C_max), one entry per half-width.
  std::vector<double> phi_cmax;
  SigmaPrior sigma;
  double p_include = 0.5;

  void validate() const {
    for (double c : phi_cmax) detail::require(c > 0.0, "prior: C_max must be > 0");
    detail::require(p_include > 0.0 && p_include < 1.0, "prior: inclusion probability must be in (0, 1)");
    if (sigma.kind == SigmaPrior::Kind::Uniform) {
      detail::require(sigma.lo > 0.0 && sigma.lo < sigma.hi, "prior: sigma Uniform bounds must satisfy 0 < lo < hi");
    }
    if (sigma.kind == SigmaPrior::Kind::HalfCauchy) detail::require(sigma.scale > 0.0, "prior: half-Cauchy scale > 0");
    if (sigma.kind == SigmaPrior::Kind::Fixed) detail::require(sigma.value > 0.0, "prior: fixed sigma must be > 0");
  }
};

// C_max per half-width defaults to the span of the owning variable.
inline std::vector<double> default_phi_cmax(const RuleBase& base) {
  std::vector<double> out;
  auto add = [&](const LinguisticVariable& v) {
    for (std::size_t j = 0; j < v.free_param_count(); ++j) out.push_back(v.universe.span());
  };
  for (const auto& v : base.inputs) add(v);
  add(base.output);
  return out;
}

inline double log_prior(const ParamVector& theta, const PriorSpec& prior) {
  detail::require(theta.phi.size() == prior.phi_cmax.size(), "log_prior: phi length does not match prior");
  detail::require(theta.sigma.has_value() == prior.sigma.estimated(),
                  "log_prior: sigma presence does not match the sigma prior");
  double lp = 0.0;
  for (std::size_t i = 0; i < theta.phi.size(); ++i) {
    const double c = prior.phi_cmax[i];
    if (!(theta.phi[i] > 0.0 && theta.phi[i] <= c)) return kNegInf;
    lp -= std::log(c);
  }
  if (theta.sigma) {
    lp += sigma_log_prior(*theta.sigma, prior.sigma);
    if (lp == kNegInf) return kNegInf;
  }
  if (theta.beta) {
    const double in = std::log(prior.p_include);
    const double out = std::log1p(-prior.p_include);
    for (bool b : *theta.beta) lp += b ? in : out;
  }
  return lp;
}

enum class NoFirePolicy {
  Midpoint,  // infer's midpoint fallback is used as the prediction
  Reject,    // a parameter set leaving any observation unfired has zero likelihood
};

struct LikelihoodSpec {
  enum class Kind { GaussianRegression, BernoulliClassification };
  Kind kind = Kind::GaussianRegression;
  double clamp_eps = 1e-6;
  NoFirePolicy no_fire = NoFirePolicy::Midpoint;

  void validate() const {
    detail::require(clamp_eps > 0.0 && clamp_eps < 0.5, "likelihood: clamp_eps must be in (0, 0.5)");
  }
};

// Sum of iid N(prediction, sigma^2) log densities.
inline double gaussian_log_likelihood(std::span<const double> pred, std::span<const double> y, double sigma) {
  detail::require(sigma > 0.0, "gaussian log-likelihood: sigma must be > 0");
  detail::require(pred.size() == y.size(), "gaussian log-likelihood: length mismatch");
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - pred[i];
    ss += r * r;
  }
  const double n = static_cast<double>(y.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma * sigma) - ss / (2.0 * sigma * sigma);
}

inline double bernoulli_log_likelihood(std::span<const double> psi, std::span<const double> y01, double clamp_eps) {
  detail::require(psi.size() == y01.size(), "bernoulli log-likelihood: length mismatch");
  double ll = 0.0;
  for (std::size_t i = 0; i < y01.size(); ++i) {
    detail::require(y01[i] == 0.0 || y01[i] == 1.0, "bernoulli log-likelihood: labels must be 0 or 1");
    const double p = std::clamp(psi[i], clamp_eps, 1.0 - clamp_eps);
    ll += y01[i] == 1.0 ? std::log(p) : std::log1p(-p);
  }
  return ll;
}

namespace detail {

// Predictions of the bound rule base; nullopt if Reject applies.
inline std::optional<std::vector<double>> predictions(const RuleBase& bound, const Matrix& X, NoFirePolicy policy,
                                                      const DefuzzOptions& opts) {
  require(X.rows == 0 || X.cols == bound.inputs.size(), "likelihood: X columns != input count");
  std::vector<double> out(X.rows);
  for (std::size_t r = 0; r < X.rows; ++r) {
    const auto res = infer_detail(bound, X.row(r), opts);
    if (!res.fired && policy == NoFirePolicy::Reject) return std::nullopt;
    out[r] = res.value;
  }
  return out;
}

}  // namespace detail

inline double log_likelihood_gaussian(const ParamVector& theta, const RuleBase& base, const Matrix& X,
                                      std::span<const double> y, double sigma,
                                      NoFirePolicy policy = NoFirePolicy::Midpoint, const DefuzzOptions& opts = {}) {
  detail::require(sigma > 0.0, "gaussian log-likelihood: sigma must be > 0");
  detail::require(X.rows == y.size(), "gaussian log-likelihood: X rows != y length");
  const auto bound = bind_params(base, theta);
  const auto pred = detail::predictions(bound, X, policy, opts);
  if (!pred) return kNegInf;
  return gaussian_log_likelihood(*pred, y, sigma);
}

inline double log_likelihood_bernoulli(const ParamVector& theta, const RuleBase& base, const Matrix& X,
                                       std::span<const double> y01, double clamp_eps = 1e-6,
                                       NoFirePolicy policy = NoFirePolicy::Midpoint, const DefuzzOptions& opts = {}) {
  detail::require(base.output.universe.lo == 0.0 && base.output.universe.hi == 1.0,
                  "bernoulli log-likelihood: output universe must be [0, 1]");
  detail::require(X.rows == y01.size(), "bernoulli log-likelihood: X rows != label count");
  for (double v : y01) detail::require(v == 0.0 || v == 1.0, "bernoulli log-likelihood: labels must be 0 or 1");
  const auto bound = bind_params(base, theta);
  const auto pred = detail::predictions(bound, X, policy, opts);
  if (!pred) return kNegInf;
  return bernoulli_log_likelihood(*pred, y01, clamp_eps);
}

// A fuzzy rule base bound to data, prior and likelihood. Flat parameter
// layout: half-widths, then sigma (when estimated), then one inclusion flag
// per rule (when selecting rules).
struct FblModel {
  RuleBase rule_base;
  PriorSpec prior;
  LikelihoodSpec likelihood;
  Dataset data;
  bool select_rules = false;
  DefuzzOptions defuzz;

  bool estimate_sigma() const { return prior.sigma.estimated(); }
  bool classification() const { return likelihood.kind == LikelihoodSpec::Kind::BernoulliClassification; }

  void validate() const {
    fbl::validate(rule_base);
    prior.validate();
    likelihood.validate();
    detail::require(prior.phi_cmax.size() == rule_base.free_param_count(),
                    "model: prior has " + std::to_string(prior.phi_cmax.size()) + " C_max entries, rule base has " +
                        std::to_string(rule_base.free_param_count()) + " free parameters");
    detail::require(data.X.rows == data.y.size(), "model: X rows != y length");
    detail::require(data.size() == 0 || data.dims() == rule_base.inputs.size(),
                    "model: data has " + std::to_string(data.dims()) + " input columns, rule base has " +
                        std::to_string(rule_base.inputs.size()) + " inputs");
    if (classification()) {
      detail::require(!estimate_sigma(), "model: classification has no sigma");
      detail::require(rule_base.output.universe.lo == 0.0 && rule_base.output.universe.hi == 1.0,
                      "model: classification needs output universe [0, 1]");
      for (double v : data.y) detail::require(v == 0.0 || v == 1.0, "model: classification labels must be 0 or 1");
    }
  }

  std::size_t phi_count() const { return rule_base.free_param_count(); }

  std::vector<std::string> phi_names() const {
    std::vector<std::string> out;
    auto add = [&](const LinguisticVariable& v) {
      if (v.fixed) return;
      for (const auto& l : v.labels) out.push_back(v.name + "." + l);
    };
    for (const auto& v : rule_base.inputs) add(v);
    add(rule_base.output);
    return out;
  }

  std::vector<ParamSpec> layout() const {
    std::vector<ParamSpec> out;
    const auto names = phi_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
      out.push_back({names[i], ParamKind::Continuous, 0.0, prior.phi_cmax[i], prior.phi_cmax[i]});
    }
    if (estimate_sigma()) {
      const auto& s = prior.sigma;
      if (s.kind == SigmaPrior::Kind::Uniform) {
        out.push_back({"sigma", ParamKind::Continuous, s.lo, s.hi, s.hi - s.lo});
      } else {
        out.push_back({"sigma", ParamKind::Continuous, 0.0, std::numeric_limits<double>::infinity(), 2.0 * s.scale});
      }
    }
    if (select_rules) {
      for (const auto& r : rule_base.rules) out.push_back({"beta." + r.name, ParamKind::Binary, 0.0, 1.0, 1.0});
    }
    return out;
  }

  std::size_t dimension() const {
    return phi_count() + (estimate_sigma() ? 1 : 0) + (select_rules ? rule_base.rules.size() : 0);
  }

  ParamVector unflatten(std::span<const double> x) const {
    detail::require(x.size() == dimension(), "model: flat state has wrong length");
    ParamVector theta;
    const auto n = phi_count();
    theta.phi.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
    std::size_t i = n;
    if (estimate_sigma()) theta.sigma = x[i++];
    if (select_rules) {
      std::vector<bool> beta;
      for (std::size_t k = 0; k < rule_base.rules.size(); ++k) beta.push_back(x[i++] != 0.0);
      theta.beta = std::move(beta);
    }
    return theta;
  }

  std::vector<double> flatten(const ParamVector& theta) const {
    std::vector<double> x = theta.phi;
    if (theta.sigma) x.push_back(*theta.sigma);
    if (theta.beta) {
      for (bool b : *theta.beta) x.push_back(b ? 1.0 : 0.0);
    }
    detail::require(x.size() == dimension(), "model: parameter vector does not match layout");
    return x;
  }

  double sigma_of(const ParamVector& theta) const { return theta.sigma ? *theta.sigma : prior.sigma.value; }

  double log_likelihood(const ParamVector& theta) const {
    if (theta.beta && std::none_of(theta.beta->begin(), theta.beta->end(), [](bool b) { return b; })) {
      return kNegInf;  // nothing left to infer with
    }
    if (classification()) {
      return log_likelihood_bernoulli(theta, rule_base, data.X, data.y, likelihood.clamp_eps, likelihood.no_fire,
                                      defuzz);
    }
    return log_likelihood_gaussian(theta, rule_base, data.X, data.y, sigma_of(theta), likelihood.no_fire, defuzz);
  }

  double log_density(std::span<const double> x) const;

  std::vector<double> draw_initial(Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> x;
    for (double c : prior.phi_cmax) x.push_back(c * (1.0 - unit(rng)));  // (0, C_max]
    if (estimate_sigma()) {
      const auto& s = prior.sigma;
      if (s.kind == SigmaPrior::Kind::Uniform) {
        x.push_back(s.lo + (s.hi - s.lo) * unit(rng));
      } else {
        std::cauchy_distribution<double> cauchy(0.0, s.scale);
        x.push_back(std::abs(cauchy(rng)));
      }
    }
    if (select_rules) x.insert(x.end(), rule_base.rules.size(), 1.0);
    return x;
  }
};

// Prior plus likelihood; the likelihood is skipped outside prior support.
inline double log_posterior(const ParamVector& theta, const FblModel& model) {
  const double lp = log_prior(theta, model.prior);
  if (lp == kNegInf) return kNegInf;
  return lp + model.log_likelihood(theta);
}

inline double FblModel::log_density(std::span<const double> x) const { return log_posterior(unflatten(x), *this); }

}  // namespace fbl
