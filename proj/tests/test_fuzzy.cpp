#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fbl/datagen.hpp"
#include "fbl/fuzzy.hpp"
#include "fbl/fuzzy_json.hpp"
#include "oracles.hpp"

using namespace fbl;

namespace {

const std::vector<double> kTruth{5, 5, 5, 5, 5, 5, 50, 50, 50};

RuleBase truth_base() { return bind_params(downtime_rule_base(), {kTruth, std::nullopt, std::nullopt}); }

// Independent evaluation of a bound rule base at x via the dense-grid oracle.
double oracle_infer(const RuleBase& b, std::span<const double> x) {
  std::vector<double> h(b.output.labels.size(), 0.0);
  for (const auto& r : b.rules) {
    if (!r.included) continue;
    double w = r.connective == Connective::And ? 1.0 : 0.0;
    for (const auto& a : r.antecedents) {
      const auto& m = b.inputs[a.variable].mfs[a.label];
      const double mu = oracle::tri(x[a.variable], m.a, m.b, m.c);
      w = r.connective == Connective::And ? std::min(w, mu) : std::max(w, mu);
    }
    h[r.consequent] = std::max(h[r.consequent], w);
  }
  std::vector<oracle::Clip> sets;
  for (std::size_t j = 0; j < h.size(); ++j) {
    if (h[j] > 0.0) sets.push_back({b.output.mfs[j].a, b.output.mfs[j].b, b.output.mfs[j].c, h[j]});
  }
  return oracle::centroid(sets, b.output.universe.lo, b.output.universe.hi);
}

}  // namespace

TEST(Membership, ApexIsOne) {
  EXPECT_EQ(membership(5.0, {0, 5, 10}), 1.0);
  EXPECT_EQ(membership(0.0, {0, 0, 10}), 1.0);
  EXPECT_EQ(membership(10.0, {0, 10, 10}), 1.0);
}

TEST(Membership, LinearRamp) { EXPECT_DOUBLE_EQ(membership(2.5, {0, 5, 10}), 0.5); }

TEST(Membership, OutsideSupport) {
  EXPECT_EQ(membership(12.0, {0, 5, 10}), 0.0);
  EXPECT_EQ(membership(-0.1, {0, 5, 10}), 0.0);
}

TEST(Membership, BoundedAndContinuous) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int i = 0; i < 2000; ++i) {
    double p[3] = {u(rng), u(rng), u(rng)};
    std::sort(p, p + 3);
    const TriangularMF mf{p[0], p[1], p[2]};
    const double x = u(rng);
    const double m = membership(x, mf);
    ASSERT_GE(m, 0.0);
    ASSERT_LE(m, 1.0);
    const double slope = 1.0 / std::min(p[1] - p[0], p[2] - p[1]);
    ASSERT_LE(std::abs(membership(x + 1e-7, mf) - m), 1e-7 * slope + 1e-12);
  }
}

TEST(BindParams, NineTriangles) {
  const auto base = downtime_rule_base();
  std::vector<double> phi{1, 2, 3, 4, 5, 6, 10, 20, 30};
  const auto b = bind_params(base, {phi, std::nullopt, std::nullopt});
  std::size_t k = 0;
  for (const auto* v : {&b.inputs[0], &b.inputs[1], &b.output}) {
    ASSERT_EQ(v->mfs.size(), 3u);
    for (std::size_t j = 0; j < 3; ++j, ++k) {
      EXPECT_DOUBLE_EQ(v->mfs[j].c - v->mfs[j].b, phi[k]);
      EXPECT_DOUBLE_EQ(v->mfs[j].b - v->mfs[j].a, phi[k]);
    }
  }
}

TEST(BindParams, WrongLengthThrows) {
  EXPECT_THROW(bind_params(downtime_rule_base(), {std::vector<double>(8, 5.0), std::nullopt, std::nullopt}), Error);
}

TEST(BindParams, MedianLabelHalfWidthFive) {
  const auto b = truth_base();
  const auto& med = b.inputs[0].mfs[1];
  EXPECT_DOUBLE_EQ(med.a, 0.0);
  EXPECT_DOUBLE_EQ(med.b, 5.0);
  EXPECT_DOUBLE_EQ(med.c, 10.0);
}

TEST(Infer, CaseAAndB) {
  // Frozen from a 2,000,001-point trapezoid evaluation of the same system.
  const auto b = truth_base();
  EXPECT_NEAR(infer(b, std::vector<double>{1.1, 8.8}), 34.83989501311444, 1e-4);
  EXPECT_NEAR(infer(b, std::vector<double>{7.7, 1.1}), 59.97584954050695, 1e-4);
  EXPECT_NEAR(infer(b, std::vector<double>{1.1, 8.8}), 34.0, 1.0);
  EXPECT_NEAR(infer(b, std::vector<double>{7.7, 1.1}), 59.0, 1.0);
  EXPECT_NEAR(infer(b, std::vector<double>{2.0, 3.0}), 53.76811594203259, 1e-4);
  EXPECT_NEAR(infer(b, std::vector<double>{9.5, 9.5}), 73.8235294117773, 1e-4);
  const auto p = bind_params(downtime_rule_base(), {{4, 6, 5, 3, 5, 7, 40, 55, 60}, std::nullopt, std::nullopt});
  EXPECT_NEAR(infer(p, std::vector<double>{3.3, 6.1}), 49.819055379724425, 1e-4);
}

TEST(Infer, SymmetricConsequentGivesApex) {
  RuleBase b;
  b.inputs = {{"x", {0, 10}, {"A"}, {{0, 5, 10}}, true}};
  b.output = {"y", {0, 100}, {"M"}, {{0, 50, 100}}, true};
  b.rules = {{"R", {{0, 0}}, Connective::And, 0, true}};
  EXPECT_NEAR(infer(b, std::vector<double>{5.0}), 50.0, 1e-12);
}

TEST(Infer, NothingFiresGivesMidpoint) {
  auto b = bind_params(tomato_rule_base(true), {{2, 2, 2, 2}, std::nullopt, std::nullopt});
  const auto r = infer_detail(b, std::vector<double>{5.0});
  EXPECT_FALSE(r.fired);
  EXPECT_EQ(r.value, 5.0);
}

TEST(Infer, MatchesDenseGridOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> in(0, 10), hw(0.5, 10), ohw(5, 100);
  const auto base = downtime_rule_base();
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> phi{hw(rng), hw(rng), hw(rng), hw(rng), hw(rng), hw(rng), ohw(rng), ohw(rng), ohw(rng)};
    const auto b = bind_params(base, {phi, std::nullopt, std::nullopt});
    const std::vector<double> x{in(rng), in(rng)};
    const auto r = infer_detail(b, x);
    if (!r.fired) continue;
    ++checked;
    ASSERT_NEAR(r.value, oracle_infer(b, x), 1e-6 * 100.0) << "instance " << i;
  }
  EXPECT_GE(checked, 90);
}

TEST(Infer, GridOptionCloseToExact) {
  const auto b = truth_base();
  DefuzzOptions grid{DefuzzMethod::Grid, 1001};
  for (double x0 : {0.5, 3.0, 6.5, 9.0}) {
    for (double x1 : {0.5, 4.0, 8.8}) {
      const std::vector<double> x{x0, x1};
      EXPECT_NEAR(infer(b, x, grid), infer(b, x), 0.05);
    }
  }
}

TEST(Infer, OutputInsideUniverseAndDeterministic) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> in(-2, 12), hw(0.1, 10), ohw(1, 100);
  for (int i = 0; i < 300; ++i) {
    const auto b = bind_params(downtime_rule_base(), {{hw(rng), hw(rng), hw(rng), hw(rng), hw(rng), hw(rng), ohw(rng),
                                                       ohw(rng), ohw(rng)},
                                                      std::nullopt,
                                                      std::nullopt});
    const std::vector<double> x{in(rng), in(rng)};
    const double v = infer(b, x);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 100.0);
    ASSERT_EQ(v, infer(b, x));
  }
}

TEST(Infer, ExcludedRuleEqualsDeletedRule) {
  const auto full = bind_params(downtime_rule_base(true), {kTruth, std::nullopt, std::vector<bool>{1, 1, 1, 0, 1}});
  auto deleted = full;
  deleted.rules.erase(deleted.rules.begin() + 3);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> in(0, 10);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x{in(rng), in(rng)};
    ASSERT_EQ(infer(full, x), infer(deleted, x));
  }
}

// Better maintenance never raises downtime while loc_risk.HI is silent
// (loc_risk <= 5). Above that, R1 fires through its OR on loc_risk alone
// and the max-aggregated output rises again; the grid oracle agrees.
TEST(Infer, MonotoneInMaintenanceWhileLocRiskHiSilent) {
  const auto b = truth_base();
  for (int i = 0; i <= 10; ++i) {
    double prev = 1e300;
    for (int j = 0; j <= 10; ++j) {
      const std::vector<double> x{static_cast<double>(i), static_cast<double>(j)};
      const double v = infer(b, x);
      ASSERT_NEAR(v, oracle_infer(b, x), 1e-4);
      if (i <= 5) {
        ASSERT_LE(v, prev + 1e-9) << "loc_risk " << i << " maintenance " << j;
      }
      prev = v;
    }
  }
  EXPECT_GT(infer(b, std::vector<double>{6.0, 6.0}), infer(b, std::vector<double>{6.0, 5.0}));
}

TEST(Infer, WrongInputCountThrows) { EXPECT_THROW(infer(truth_base(), std::vector<double>{1.0}), Error); }

TEST(InferBatch, EmptyAndIdenticalRows) {
  const auto b = truth_base();
  EXPECT_TRUE(infer_batch(b, Matrix(0, 2)).empty());
  Matrix X(2, 2);
  X(0, 0) = X(1, 0) = 3.3;
  X(0, 1) = X(1, 1) = 4.4;
  const auto y = infer_batch(b, X);
  ASSERT_EQ(y.size(), 2u);
  EXPECT_EQ(y[0], y[1]);
}

TEST(InferBatch, CaseAAndB) {
  Matrix X(2, 2);
  X(0, 0) = 1.1, X(0, 1) = 8.8, X(1, 0) = 7.7, X(1, 1) = 1.1;
  const auto y = infer_batch(truth_base(), X);
  EXPECT_NEAR(y[0], 34.84, 0.01);
  EXPECT_NEAR(y[1], 59.98, 0.01);
}

TEST(ExactCentroid, DegenerateEdgesAndClipping) {
  // Right-angled triangle (0,0,10) clipped at 0.5: trapezoid-plus-triangle shape.
  std::vector<ClippedSet> s{{{0, 0, 10}, 0.5}};
  const auto r = exact_centroid(s, {0, 10});
  EXPECT_NEAR(r.centroid, oracle::centroid({{0, 0, 10, 0.5}}, 0, 10), 1e-6 * 10);
  EXPECT_NEAR(r.area, 0.5 * 5 + 0.5 * 5 * 0.5, 1e-12);
}

TEST(RuleBaseJson, RoundTrip) {
  const auto b = downtime_rule_base(true);
  const auto back = rule_base_from_json(rule_base_to_json(b));
  ASSERT_EQ(back.rules.size(), b.rules.size());
  EXPECT_EQ(back.free_param_count(), 9u);
  EXPECT_EQ(rule_base_to_json(back), rule_base_to_json(b));
  for (std::size_t k = 0; k < b.rules.size(); ++k) {
    EXPECT_EQ(back.rules[k].consequent, b.rules[k].consequent);
    EXPECT_EQ(back.rules[k].connective, b.rules[k].connective);
  }
}

TEST(RuleBaseJson, UnknownLabelRejected) {
  auto j = rule_base_to_json(downtime_rule_base());
  j["rules"][0]["antecedents"][0]["label"] = "NOPE";
  EXPECT_THROW(rule_base_from_json(j), Error);
}
