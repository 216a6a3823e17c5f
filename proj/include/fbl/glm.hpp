#pragma once

// Gaussian GLM baselines with identity link, fitted by the same sampler.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "fbl/dataset.hpp"
#include "fbl/error.hpp"
#include "fbl/param.hpp"
#include "fbl/probability.hpp"
#include "fbl/sampler.hpp"

namespace fbl {

struct Factor {
  std::size_t variable = 0;
  int power = 1;
};

// Product of factors; an empty term is the intercept.
struct GlmTerm {
  std::vector<Factor> factors;

  bool intercept() const { return factors.empty(); }

  double evaluate(std::span<const double> x) const {
    double v = 1.0;
    for (const auto& f : factors) v *= std::pow(x[f.variable], f.power);
    return v;
  }

  std::string label() const {
    if (factors.empty()) return "1";
    std::string s;
    for (const auto& f : factors) {
      if (!s.empty()) s += "*";
      s += "x" + std::to_string(f.variable + 1);
      if (f.power != 1) s += "^" + std::to_string(f.power);
    }
    return s;
  }

  std::size_t max_variable() const {
    std::size_t m = 0;
    for (const auto& f : factors) m = std::max(m, f.variable + 1);
    return m;
  }
};

struct GlmModel {
  std::string name;
  std::vector<GlmTerm> terms;
  double alpha_sd = 20.0;  // alpha_i ~ N(0, alpha_sd^2)
  SigmaPrior sigma = SigmaPrior::half_cauchy(10.0);

  std::size_t required_inputs() const {
    std::size_t m = 0;
    for (const auto& t : terms) m = std::max(m, t.max_variable());
    return m;
  }
};

namespace detail {

inline GlmTerm term(std::initializer_list<Factor> f) { return GlmTerm{std::vector<Factor>(f)}; }

}  // namespace detail

// GLM1-GLM4 use two covariates with an intercept; GLM5-GLM7 are the
// intercept-free sums over `n_inputs` covariates with all pairwise (and for
// GLM7, triple) products of distinct covariates.
inline GlmModel glm_preset(const std::string& id, std::size_t n_inputs = 3) {
  using detail::term;
  GlmModel g;
  g.name = id;
  if (id == "GLM1") {
    g.terms = {term({}), term({{0, 1}}), term({{1, 1}})};
  } else if (id == "GLM2") {
    g.terms = {term({}), term({{0, 1}, {1, 1}})};
  } else if (id == "GLM3") {
    g.terms = {term({}), term({{0, 2}}), term({{1, 2}}), term({{0, 1}, {1, 1}})};
  } else if (id == "GLM4") {
    g.terms = {term({}), term({{0, 1}}), term({{1, 1}}), term({{0, 2}}), term({{1, 2}}), term({{0, 1}, {1, 1}})};
  } else if (id == "GLM5" || id == "GLM6" || id == "GLM7") {
    for (std::size_t i = 0; i < n_inputs; ++i) g.terms.push_back(term({{i, 1}}));
    if (id != "GLM5") {
      for (std::size_t i = 0; i < n_inputs; ++i)
        for (std::size_t j = i + 1; j < n_inputs; ++j) g.terms.push_back(term({{i, 1}, {j, 1}}));
    }
    if (id == "GLM7") {
      for (std::size_t i = 0; i < n_inputs; ++i)
        for (std::size_t j = i + 1; j < n_inputs; ++j)
          for (std::size_t k = j + 1; k < n_inputs; ++k) g.terms.push_back(term({{i, 1}, {j, 1}, {k, 1}}));
    }
  } else {
    throw Error("unknown GLM '" + id + "' (expected GLM1..GLM7)");
  }
  return g;
}

// Row r, column t holds term t evaluated at X row r.
inline Matrix design_matrix(const GlmModel& glm, const Matrix& X) {
  detail::require(X.rows == 0 || X.cols >= glm.required_inputs(),
                  glm.name + ": needs " + std::to_string(glm.required_inputs()) + " input columns");
  Matrix D(X.rows, glm.terms.size());
  for (std::size_t r = 0; r < X.rows; ++r) {
    for (std::size_t t = 0; t < glm.terms.size(); ++t) D(r, t) = glm.terms[t].evaluate(X.row(r));
  }
  return D;
}

inline std::vector<double> glm_predict(const GlmModel& glm, std::span<const double> alpha, const Matrix& X) {
  detail::require(alpha.size() == glm.terms.size(), glm.name + ": expected " + std::to_string(glm.terms.size()) +
                                                         " coefficients, got " + std::to_string(alpha.size()));
  const auto D = design_matrix(glm, X);
  std::vector<double> out(X.rows, 0.0);
  for (std::size_t r = 0; r < X.rows; ++r) {
    for (std::size_t t = 0; t < alpha.size(); ++t) out[r] += alpha[t] * D(r, t);
  }
  return out;
}

// Sampling target: coefficients, then sigma when it is estimated.
struct GlmTarget {
  GlmModel glm;
  Dataset data;
  Matrix design;

  GlmTarget(GlmModel g, Dataset d) : glm(std::move(g)), data(std::move(d)), design(design_matrix(glm, data.X)) {}

  std::size_t n_coefficients() const { return glm.terms.size(); }

  std::vector<ParamSpec> layout() const {
    std::vector<ParamSpec> out;
    for (std::size_t t = 0; t < glm.terms.size(); ++t) {
      out.push_back({"alpha" + std::to_string(t) + "[" + glm.terms[t].label() + "]", ParamKind::Continuous,
                     -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                     4.0 * glm.alpha_sd});
    }
    if (glm.sigma.estimated()) {
      const auto& s = glm.sigma;
      if (s.kind == SigmaPrior::Kind::Uniform) {
        out.push_back({"sigma", ParamKind::Continuous, s.lo, s.hi, s.hi - s.lo});
      } else {
        out.push_back({"sigma", ParamKind::Continuous, 0.0, std::numeric_limits<double>::infinity(), 2.0 * s.scale});
      }
    }
    return out;
  }

  double sigma_of(std::span<const double> x) const {
    return glm.sigma.estimated() ? x[glm.terms.size()] : glm.sigma.value;
  }

  double log_prior_of(std::span<const double> x) const {
    const auto k = glm.terms.size();
    double lp = 0.0;
    for (std::size_t t = 0; t < k; ++t) lp += normal_log_pdf(x[t], 0.0, glm.alpha_sd);
    if (glm.sigma.estimated()) lp += sigma_log_prior(x[k], glm.sigma);
    return lp;
  }

  double log_likelihood_of(std::span<const double> x) const {
    const auto k = glm.terms.size();
    const double sigma = sigma_of(x);
    if (!(sigma > 0.0)) return kNegInf;
    double ss = 0.0;
    for (std::size_t r = 0; r < design.rows; ++r) {
      double mu = 0.0;
      for (std::size_t t = 0; t < k; ++t) mu += x[t] * design(r, t);
      const double e = data.y[r] - mu;
      ss += e * e;
    }
    const double n = static_cast<double>(design.rows);
    return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma * sigma) - ss / (2.0 * sigma * sigma);
  }

  double log_density(std::span<const double> x) const {
    const double lp = log_prior_of(x);
    if (lp == kNegInf) return kNegInf;
    return lp + log_likelihood_of(x);
  }

  std::vector<double> draw_initial(Rng& rng) const {
    std::normal_distribution<double> normal(0.0, glm.alpha_sd);
    std::vector<double> x;
    for (std::size_t t = 0; t < glm.terms.size(); ++t) x.push_back(normal(rng));
    if (glm.sigma.estimated()) {
      const auto& s = glm.sigma;
      if (s.kind == SigmaPrior::Kind::Uniform) {
        x.push_back(std::uniform_real_distribution<double>(s.lo, s.hi)(rng));
      } else {
        x.push_back(std::abs(std::cauchy_distribution<double>(0.0, s.scale)(rng)));
      }
    }
    return x;
  }
};

inline ChainSet fit_glm(const GlmModel& glm, const Dataset& data, const SamplerConfig& cfg) {
  detail::require(data.size() > 0, glm.name + ": no data");
  GlmTarget target(glm, data);
  return run_chains(cfg, target);
}

}  // namespace fbl
