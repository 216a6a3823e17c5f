#pragma once

// Mamdani fuzzy inference with triangular membership functions.
//
// Pipeline: fuzzify crisp inputs, fire each included rule (min for AND,
// max for OR), clip the consequent at the firing strength, aggregate the
// clipped consequents by pointwise max and return the centroid of the
// aggregate over the output universe.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbl/error.hpp"

namespace fbl {

struct Universe {
  double lo = 0.0;
  double hi = 1.0;

  double span() const { return hi - lo; }
  double midpoint() const { return 0.5 * (lo + hi); }
  bool contains(double u) const { return u >= lo && u <= hi; }
};

// Left base a, apex b, right base c. a == b or b == c gives a one-sided ramp.
struct TriangularMF {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  bool valid() const { return a <= b && b <= c; }
};

inline double membership(double u, const TriangularMF& mf) {
  if (u < mf.a || u > mf.c) return 0.0;
  if (u == mf.b) return 1.0;
  if (u < mf.b) return (u - mf.a) / (mf.b - mf.a);
  return (mf.c - u) / (mf.c - mf.b);
}

struct LinguisticVariable {
  std::string name;
  Universe universe;
  std::vector<std::string> labels;
  std::vector<TriangularMF> mfs;
  // Fixed variables keep their mfs; free ones get one half-width per label.
  bool fixed = false;

  std::size_t free_param_count() const { return fixed ? 0 : labels.size(); }

  std::optional<std::size_t> label_index(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels.begin());
  }

  // Apex of label j: labels are spread evenly over the universe.
  double anchor(std::size_t j) const {
    if (labels.size() == 1) return universe.midpoint();
    return universe.lo + static_cast<double>(j) * universe.span() /
                             static_cast<double>(labels.size() - 1);
  }
};

enum class Connective { And, Or };

struct Antecedent {
  std::size_t variable = 0;
  std::size_t label = 0;
};

struct Rule {
  std::string name;
  std::vector<Antecedent> antecedents;
  Connective connective = Connective::And;
  std::size_t consequent = 0;  // label index of the output variable
  bool included = true;
};

struct RuleBase {
  std::vector<LinguisticVariable> inputs;
  LinguisticVariable output;
  std::vector<Rule> rules;

  std::size_t free_param_count() const {
    std::size_t n = output.free_param_count();
    for (const auto& v : inputs) n += v.free_param_count();
    return n;
  }

  std::size_t included_rule_count() const {
    return static_cast<std::size_t>(
        std::count_if(rules.begin(), rules.end(), [](const Rule& r) { return r.included; }));
  }
};

// Sampler state of a fuzzy model: half-widths, optional noise scale and
// optional rule inclusion flags.
struct ParamVector {
  std::vector<double> phi;
  std::optional<double> sigma;
  std::optional<std::vector<bool>> beta;
};

inline void validate(const LinguisticVariable& v) {
  detail::require(v.universe.lo < v.universe.hi, "variable '" + v.name + "': universe lo must be < hi");
  detail::require(!v.labels.empty(), "variable '" + v.name + "': needs at least one label");
  detail::require(v.mfs.size() == v.labels.size(), "variable '" + v.name + "': mf count != label count");
  for (std::size_t j = 0; j < v.mfs.size(); ++j) {
    const auto& mf = v.mfs[j];
    detail::require(mf.valid(), "variable '" + v.name + "': mf '" + v.labels[j] + "' must satisfy a <= b <= c");
    detail::require(v.universe.contains(mf.b),
                    "variable '" + v.name + "': apex of '" + v.labels[j] + "' outside universe");
  }
}

inline void validate(const RuleBase& base) {
  for (const auto& v : base.inputs) validate(v);
  validate(base.output);
  for (const auto& r : base.rules) {
    detail::require(!r.antecedents.empty(), "rule '" + r.name + "' has no antecedents");
    for (const auto& a : r.antecedents) {
      detail::require(a.variable < base.inputs.size(), "rule '" + r.name + "': input index out of range");
      detail::require(a.label < base.inputs[a.variable].labels.size(),
                      "rule '" + r.name + "': label index out of range");
    }
    detail::require(r.consequent < base.output.labels.size(), "rule '" + r.name + "': consequent out of range");
  }
}

namespace detail {

inline void bind_variable(LinguisticVariable& v, std::span<const double> phi) {
  for (std::size_t j = 0; j < v.labels.size(); ++j) {
    const double apex = v.anchor(j);
    v.mfs[j] = TriangularMF{apex - phi[j], apex, apex + phi[j]};
  }
}

}  // namespace detail

// Rebuilds every free membership function from its half-width. Layout of
// phi: inputs in order, then the output, labels in declaration order.
inline RuleBase bind_params(const RuleBase& base, const ParamVector& theta) {
  const std::size_t expected = base.free_param_count();
  detail::require(theta.phi.size() == expected,
                  "bind_params: expected " + std::to_string(expected) + " half-widths, got " +
                      std::to_string(theta.phi.size()));
  if (theta.beta) {
    detail::require(theta.beta->size() == base.rules.size(), "bind_params: beta length != rule count");
  }
  RuleBase out = base;
  std::span<const double> phi(theta.phi);
  std::size_t offset = 0;
  auto bind = [&](LinguisticVariable& v) {
    const std::size_t n = v.free_param_count();
    if (n == 0) return;
    detail::bind_variable(v, phi.subspan(offset, n));
    offset += n;
  };
  for (auto& v : out.inputs) bind(v);
  bind(out.output);
  if (theta.beta) {
    for (std::size_t k = 0; k < out.rules.size(); ++k) out.rules[k].included = (*theta.beta)[k];
  }
  return out;
}

enum class DefuzzMethod {
  Exact,  // closed-form integral of the piecewise-linear aggregate
  Grid,   // sum(u * mu(u)) / sum(mu(u)) over evenly spaced points
};

struct DefuzzOptions {
  DefuzzMethod method = DefuzzMethod::Exact;
  std::size_t grid_points = 1001;
};

// A consequent triangle clipped at a firing height.
struct ClippedSet {
  TriangularMF mf;
  double height = 0.0;
};

inline double aggregate_membership(double u, std::span<const ClippedSet> sets) {
  double m = 0.0;
  for (const auto& s : sets) m = std::max(m, std::min(s.height, membership(u, s.mf)));
  return m;
}

namespace detail {

struct Line {
  double slope;
  double intercept;
};

inline void append_lines(const ClippedSet& s, std::vector<Line>& lines) {
  const auto& f = s.mf;
  if (f.b > f.a) lines.push_back({1.0 / (f.b - f.a), -f.a / (f.b - f.a)});
  if (f.c > f.b) lines.push_back({-1.0 / (f.c - f.b), f.c / (f.c - f.b)});
  lines.push_back({0.0, s.height});
}

}  // namespace detail

struct CentroidResult {
  double centroid = 0.0;
  double area = 0.0;
};

// Exact centroid of max_j min(h_j, T_j(u)) over the universe. The aggregate
// is piecewise linear with kinks only at triangle corners, clip points and
// crossings between pieces of different sets, so integrating linear pieces
// between sorted breakpoints is exact up to rounding.
inline CentroidResult exact_centroid(std::span<const ClippedSet> sets, Universe universe) {
  std::vector<double> cuts{universe.lo, universe.hi};
  std::vector<std::vector<detail::Line>> lines(sets.size());
  for (std::size_t j = 0; j < sets.size(); ++j) {
    const auto& s = sets[j];
    const auto& f = s.mf;
    cuts.insert(cuts.end(), {f.a, f.b, f.c, f.a + s.height * (f.b - f.a), f.c - s.height * (f.c - f.b)});
    detail::append_lines(s, lines[j]);
  }
  for (std::size_t j = 0; j < sets.size(); ++j) {
    for (std::size_t k = j + 1; k < sets.size(); ++k) {
      for (const auto& p : lines[j]) {
        for (const auto& q : lines[k]) {
          const double ds = p.slope - q.slope;
          if (ds == 0.0) continue;
          cuts.push_back((q.intercept - p.intercept) / ds);
        }
      }
    }
  }
  std::vector<double> pts;
  pts.reserve(cuts.size());
  for (double x : cuts) {
    if (std::isfinite(x) && x >= universe.lo && x <= universe.hi) pts.push_back(x);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  double area = 0.0;
  double moment = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double x0 = pts[i];
    const double x1 = pts[i + 1];
    const double w = x1 - x0;
    // Sample strictly inside the piece so jump discontinuities at its ends
    // (degenerate triangle edges) do not leak in.
    const double m1 = aggregate_membership(x0 + w / 3.0, sets);
    const double m2 = aggregate_membership(x0 + 2.0 * w / 3.0, sets);
    const double y0 = 2.0 * m1 - m2;
    const double y1 = 2.0 * m2 - m1;
    area += 0.5 * w * (y0 + y1);
    moment += w * (x0 * (2.0 * y0 + y1) + x1 * (y0 + 2.0 * y1)) / 6.0;
  }
  if (!(area > 0.0)) return {universe.midpoint(), 0.0};
  return {std::clamp(moment / area, universe.lo, universe.hi), area};
}

inline CentroidResult grid_centroid(std::span<const ClippedSet> sets, Universe universe, std::size_t points) {
  detail::require(points >= 2, "grid defuzzification needs at least 2 points");
  double num = 0.0;
  double den = 0.0;
  const double step = universe.span() / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double u = universe.lo + static_cast<double>(i) * step;
    const double m = aggregate_membership(u, sets);
    num += u * m;
    den += m;
  }
  if (!(den > 0.0)) return {universe.midpoint(), 0.0};
  return {num / den, den * step};
}

struct InferResult {
  double value = 0.0;
  // False when no included rule fired (or the aggregate had zero area) and
  // the output-universe midpoint was returned instead.
  bool fired = false;
};

inline double firing_strength(const Rule& rule, const RuleBase& base, std::span<const double> x) {
  double w = rule.connective == Connective::And ? 1.0 : 0.0;
  for (const auto& a : rule.antecedents) {
    const double m = membership(x[a.variable], base.inputs[a.variable].mfs[a.label]);
    w = rule.connective == Connective::And ? std::min(w, m) : std::max(w, m);
  }
  return w;
}

inline InferResult infer_detail(const RuleBase& base, std::span<const double> x, const DefuzzOptions& opts = {}) {
  detail::require(x.size() == base.inputs.size(),
                  "infer: expected " + std::to_string(base.inputs.size()) + " inputs, got " +
                      std::to_string(x.size()));
  detail::require(base.included_rule_count() > 0, "infer: rule base has no included rules");

  // Rules sharing a consequent merge: max_k min(w_k, T) == min(max_k w_k, T).
  std::vector<double> height(base.output.labels.size(), 0.0);
  for (const auto& rule : base.rules) {
    if (!rule.included) continue;
    height[rule.consequent] = std::max(height[rule.consequent], firing_strength(rule, base, x));
  }
  std::vector<ClippedSet> sets;
  sets.reserve(height.size());
  for (std::size_t j = 0; j < height.size(); ++j) {
    if (height[j] > 0.0) sets.push_back({base.output.mfs[j], height[j]});
  }
  if (sets.empty()) return {base.output.universe.midpoint(), false};

  const auto r = opts.method == DefuzzMethod::Exact ? exact_centroid(sets, base.output.universe)
                                                    : grid_centroid(sets, base.output.universe, opts.grid_points);
  return {r.centroid, r.area > 0.0};
}

inline double infer(const RuleBase& base, std::span<const double> x, const DefuzzOptions& opts = {}) {
  return infer_detail(base, x, opts).value;
}

// Row-major matrix of doubles; rows are observations.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = (*this)(r, c);
    return out;
  }

  void append_row(std::span<const double> values) {
    if (rows == 0 && cols == 0) cols = values.size();
    detail::require(values.size() == cols, "Matrix::append_row: width mismatch");
    data.insert(data.end(), values.begin(), values.end());
    ++rows;
  }

  bool operator==(const Matrix&) const = default;
};

inline std::vector<double> infer_batch(const RuleBase& base, const Matrix& X, const DefuzzOptions& opts = {}) {
  std::vector<double> out;
  out.reserve(X.rows);
  if (X.rows == 0) return out;
  detail::require(X.cols == base.inputs.size(), "infer_batch: column count != input count");
  for (std::size_t r = 0; r < X.rows; ++r) out.push_back(infer(base, X.row(r), opts));
  return out;
}

}  // namespace fbl
