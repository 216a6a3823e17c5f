#pragma once

// Posterior summaries and convergence diagnostics over raw sample arrays.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fbl/error.hpp"
#include "fbl/fuzzy_json.hpp"
#include "fbl/sampler.hpp"

namespace fbl {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

inline double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double sample_variance(std::span<const double> x) {
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

// Shortest window over the sorted samples holding ceil(mass * N) points;
// ties go to the leftmost window.
inline Interval hdi(std::span<const double> samples, double mass = 0.95) {
  detail::require(samples.size() >= 2, "hdi: need at least 2 samples");
  detail::require(mass > 0.0 && mass < 1.0, "hdi: mass must be in (0, 1)");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const auto n = s.size();
  auto k = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  std::size_t best = 0;
  double width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + k <= n; ++i) {
    const double w = s[i + k - 1] - s[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return {s[best], s[best + k - 1]};
}

// Classical potential scale reduction factor (no chain splitting).
// Identical constant chains give 1; constant chains that disagree give +inf.
inline double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  detail::require(chains.size() >= 2, "gelman_rubin: need at least 2 chains");
  const auto n = chains.front().size();
  detail::require(n >= 10, "gelman_rubin: chains must have at least 10 draws");
  for (const auto& c : chains) detail::require(c.size() == n, "gelman_rubin: chains must have equal length");
  const auto m = static_cast<double>(chains.size());
  const auto nd = static_cast<double>(n);
  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : chains) {
    means.push_back(mean(c));
    w += sample_variance(c);
  }
  w /= m;
  const double grand = mean(means);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= nd / (m - 1.0);
  if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (nd - 1.0) / nd * w + b / nd;
  return std::sqrt(var_plus / w);
}

// Normalized autocovariance rho_0..rho_max_lag (biased 1/N estimator).
inline std::vector<double> autocorrelation(std::span<const double> chain, std::size_t max_lag) {
  detail::require(max_lag < chain.size(), "autocorrelation: max_lag must be < chain length");
  const double m = mean(chain);
  const auto n = chain.size();
  double c0 = 0.0;
  for (double v : chain) c0 += (v - m) * (v - m);
  detail::require(c0 > 0.0, "autocorrelation: chain has zero variance");
  std::vector<double> rho(max_lag + 1);
  for (std::size_t t = 0; t <= max_lag; ++t) {
    double c = 0.0;
    for (std::size_t i = 0; i + t < n; ++i) c += (chain[i] - m) * (chain[i + t] - m);
    rho[t] = c / c0;
  }
  return rho;
}

namespace detail {

inline double autocorr_at(std::span<const double> chain, double m, double c0, std::size_t t) {
  double c = 0.0;
  for (std::size_t i = 0; i + t < chain.size(); ++i) c += (chain[i] - m) * (chain[i + t] - m);
  return c / c0;
}

// Integrated autocorrelation time from Geyer's initial positive sequence:
// pairs rho_{2k} + rho_{2k+1} are summed while positive.
inline double integrated_time(std::span<const double> chain) {
  const double m = mean(chain);
  double c0 = 0.0;
  for (double v : chain) c0 += (v - m) * (v - m);
  require(c0 > 0.0, "ess: chain has zero variance");
  const auto n = chain.size();
  double sum = 0.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = (k == 0 ? 1.0 : autocorr_at(chain, m, c0, 2 * k)) + autocorr_at(chain, m, c0, 2 * k + 1);
    if (!(pair > 0.0)) break;
    sum += pair;
  }
  return -1.0 + 2.0 * sum;
}

// Residuals of a least-squares line through (i, x_i).
inline std::vector<double> detrend(std::span<const double> x) {
  const auto n = x.size();
  const double tm = (static_cast<double>(n) - 1.0) / 2.0;
  const double m = mean(x);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (static_cast<double>(i) - tm) * (x[i] - m);
    sxx += (static_cast<double>(i) - tm) * (static_cast<double>(i) - tm);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = x[i] - m - slope * (static_cast<double>(i) - tm);
  return r;
}

}  // namespace detail

// N / tau, capped at N * log10(N) for strongly antithetic chains.
inline double ess(std::span<const double> chain) {
  detail::require(chain.size() >= 10, "ess: chain must have at least 10 draws");
  const auto n = static_cast<double>(chain.size());
  const double tau = detail::integrated_time(chain);
  const double cap = n * std::log10(n);
  if (!(tau > 0.0)) return cap;
  return std::min(n / tau, cap);
}

struct GewekeResult {
  std::vector<double> z;
  std::vector<std::size_t> starts;  // first-window start index per z-score
  std::vector<bool> zero_variance;  // z forced to 0
};

// Compares the means of successive early windows (length first * N) with
// the final last * N draws. Under the stationarity null every window shares
// the whole chain's spectral density at zero, var * tau, so each mean gets
// standard error sqrt(var * tau / n_window).
inline GewekeResult geweke(std::span<const double> chain, double first = 0.1, double last = 0.5,
                           std::size_t n_segments = 20) {
  detail::require(first > 0.0 && last > 0.0, "geweke: fractions must be positive");
  detail::require(first + last <= 1.0, "geweke: first and last segments overlap");
  detail::require(n_segments >= 1, "geweke: need at least one segment");
  const auto n = chain.size();
  const auto len_first = static_cast<std::size_t>(std::floor(first * static_cast<double>(n)));
  const auto len_last = static_cast<std::size_t>(std::floor(last * static_cast<double>(n)));
  detail::require(len_first >= 2 && len_last >= 2, "geweke: chain too short for the requested segments");
  const std::size_t last_start = n - len_last;
  detail::require(len_first <= last_start, "geweke: first and last segments overlap");

  const double var = sample_variance(chain);
  // tau comes from the linearly detrended chain: a drift would otherwise
  // inflate its own standard error and hide.
  double s0 = var;
  if (var > 0.0 && n >= 10) {
    const auto resid = detail::detrend(chain);
    const bool line = sample_variance(resid) <= 1e-24 * var;  // exactly linear: all drift
    s0 = var * (line ? 1e-3 : std::max(detail::integrated_time(resid), 1e-3));
  }
  auto mean_var = [&](std::span<const double> seg) -> std::pair<double, double> {
    return {mean(seg), s0 / static_cast<double>(seg.size())};
  };
  const auto tail = mean_var(chain.subspan(last_start));

  GewekeResult out;
  const std::size_t room = last_start - len_first;
  for (std::size_t k = 0; k < n_segments; ++k) {
    const std::size_t start =
        n_segments == 1 ? 0 : static_cast<std::size_t>(std::llround(static_cast<double>(room * k) / static_cast<double>(n_segments - 1)));
    const auto head = mean_var(chain.subspan(start, len_first));
    const double se2 = head.second + tail.second;
    out.starts.push_back(start);
    if (se2 == 0.0) {
      out.z.push_back(0.0);
      out.zero_variance.push_back(true);
    } else {
      out.z.push_back((head.first - tail.first) / std::sqrt(se2));
      out.zero_variance.push_back(false);
    }
  }
  return out;
}

struct ParameterSummary {
  std::string name;
  bool binary = false;
  double mean = 0.0;  // pooled over post-burn-in draws; inclusion frequency for binary
  Interval hdi;       // pooled
  std::vector<double> chain_means;
  std::vector<Interval> chain_hdi;
  std::vector<std::optional<double>> chain_ess;  // nullopt for zero-variance chains
  std::optional<double> ess;                     // sum over chains
  std::optional<double> gelman_rubin;            // nullopt with a single chain
  std::vector<std::vector<double>> geweke_z;     // per chain
  std::vector<std::size_t> geweke_zero_variance;  // per chain: number of forced-zero scores
};

struct PosteriorSummary {
  double mass = 0.95;
  std::size_t retained_per_chain = 0;
  std::vector<ParameterSummary> parameters;

  const ParameterSummary& at(const std::string& name) const {
    for (const auto& p : parameters) {
      if (p.name == name) return p;
    }
    throw Error("summary has no parameter '" + name + "'");
  }
};

inline PosteriorSummary summarize(const ChainSet& cs, double mass = 0.95) {
  detail::require(cs.n_chains() >= 1, "summarize: no chains");
  detail::require(cs.burn_in < cs.n_iterations(), "summarize: burn-in covers the whole chain");
  const auto kept = cs.retained();
  detail::require(kept >= 2, "summarize: need at least 2 retained draws per chain");
  PosteriorSummary out;
  out.mass = mass;
  out.retained_per_chain = kept;
  for (std::size_t p = 0; p < cs.n_params(); ++p) {
    ParameterSummary s;
    s.name = cs.names[p];
    s.binary = cs.kinds[p] == ParamKind::Binary;
    std::vector<std::vector<double>> chains;
    for (std::size_t c = 0; c < cs.n_chains(); ++c) chains.push_back(cs.draws(c, p));
    const auto pooled = cs.pooled(p);
    s.mean = fbl::mean(pooled);
    s.hdi = hdi(pooled, mass);
    double ess_total = 0.0;
    bool ess_ok = true;
    for (const auto& ch : chains) {
      s.chain_means.push_back(fbl::mean(ch));
      s.chain_hdi.push_back(hdi(ch, mass));
      const bool flat = std::all_of(ch.begin(), ch.end(), [&](double v) { return v == ch.front(); });
      if (flat || ch.size() < 10) {
        s.chain_ess.push_back(std::nullopt);
        ess_ok = false;
      } else {
        const double e = fbl::ess(ch);
        s.chain_ess.push_back(e);
        ess_total += e;
      }
      if (ch.size() >= 20) {
        const auto g = geweke(ch);
        s.geweke_z.push_back(g.z);
        s.geweke_zero_variance.push_back(
            static_cast<std::size_t>(std::count(g.zero_variance.begin(), g.zero_variance.end(), true)));
      } else {
        s.geweke_z.emplace_back();
        s.geweke_zero_variance.push_back(0);
      }
    }
    if (ess_ok) s.ess = ess_total;
    if (chains.size() >= 2 && kept >= 10) s.gelman_rubin = gelman_rubin(chains);
    out.parameters.push_back(std::move(s));
  }
  return out;
}

namespace detail {

inline Json optional_json(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

}  // namespace detail

inline Json summary_to_json(const PosteriorSummary& s) {
  Json j;
  j["hdi_mass"] = s.mass;
  j["retained_per_chain"] = s.retained_per_chain;
  j["parameters"] = Json::array();
  for (const auto& p : s.parameters) {
    Json pj{{"name", p.name},
            {"kind", p.binary ? "binary" : "continuous"},
            {"mean", p.mean},
            {"hdi_lo", p.hdi.lo},
            {"hdi_hi", p.hdi.hi},
            {"ess", detail::optional_json(p.ess)},
            {"gelman_rubin", p.gelman_rubin ? (std::isfinite(*p.gelman_rubin) ? Json(*p.gelman_rubin) : Json("inf"))
                                            : Json("n/a")},
            {"chain_means", p.chain_means},
            {"geweke_z", p.geweke_z},
            {"geweke_zero_variance", p.geweke_zero_variance}};
    if (p.binary) pj["inclusion_frequency"] = p.mean;
    Json ch = Json::array();
    for (std::size_t c = 0; c < p.chain_hdi.size(); ++c) {
      ch.push_back({{"hdi_lo", p.chain_hdi[c].lo}, {"hdi_hi", p.chain_hdi[c].hi}, {"ess", detail::optional_json(p.chain_ess[c])}});
    }
    pj["chains"] = ch;
    j["parameters"].push_back(pj);
  }
  return j;
}

}  // namespace fbl
