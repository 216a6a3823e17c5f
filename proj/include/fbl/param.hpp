#pragma once

#include <concepts>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fbl {

using Rng = std::mt19937_64;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class ParamKind { Continuous, Binary };

// One coordinate of a flat sampler state. Binary coordinates hold 0.0 / 1.0.
struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::Continuous;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  // Width the random-walk step is measured against (the prior range for
  // bounded priors, a nominal spread otherwise).
  double scale = 1.0;
};

// What the sampler needs from a model: a flat parameter layout, an
// unnormalized log density (-inf outside support) and an initializer.
template <class M>
concept SamplingTarget = requires(const M& m, std::span<const double> x, Rng& rng) {
  { m.layout() } -> std::convertible_to<std::vector<ParamSpec>>;
  { m.log_density(x) } -> std::convertible_to<double>;
  { m.draw_initial(rng) } -> std::convertible_to<std::vector<double>>;
};

}  // namespace fbl
