#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "fbl/datagen.hpp"
#include "fbl/diagnostics.hpp"
#include "fbl/sampler.hpp"

using namespace fbl;

namespace {

// N(mu, sd^2) in one coordinate.
struct Quadratic {
  double mu = 3.0, sd = 2.0;
  std::vector<ParamSpec> layout() const { return {{"x", ParamKind::Continuous, -1e9, 1e9, 4.0}}; }
  double log_density(std::span<const double> x) const {
    const double z = (x[0] - mu) / sd;
    return -0.5 * z * z;
  }
  std::vector<double> draw_initial(Rng&) const { return {0.0}; }
};

// Uniform on [0, 10].
struct Flat {
  std::vector<ParamSpec> layout() const { return {{"x", ParamKind::Continuous, 0, 10, 10}}; }
  double log_density(std::span<const double> x) const { return x[0] >= 0 && x[0] <= 10 ? 0.0 : kNegInf; }
  std::vector<double> draw_initial(Rng&) const { return {5.0}; }
};

// Support is the single point 1.0.
struct Spike {
  std::vector<ParamSpec> layout() const { return {{"x", ParamKind::Continuous, 0, 2, 1}}; }
  double log_density(std::span<const double> x) const { return x[0] == 1.0 ? 0.0 : kNegInf; }
  std::vector<double> draw_initial(Rng&) const { return {1.0}; }
};

// One inclusion flag; switching it on costs `penalty` nats.
struct Flag {
  double penalty = 0.0;
  std::vector<ParamSpec> layout() const { return {{"beta", ParamKind::Binary, 0, 1, 1}}; }
  double log_density(std::span<const double> x) const { return x[0] != 0.0 ? -penalty : 0.0; }
  std::vector<double> draw_initial(Rng&) const { return {1.0}; }
};

SamplerConfig small(std::size_t iters, std::size_t burn, std::size_t chains = 1) {
  SamplerConfig c;
  c.n_iterations = iters;
  c.burn_in = burn;
  c.n_chains = chains;
  return c;
}

}  // namespace

TEST(DrawContinuous, FlatTargetAcceptsInsideSupport) {
  Rng rng(1);
  std::vector<double> s{5.0};
  Flat f;
  int inside = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto mv = draw_sample_continuous(0, s, 0.0, f, rng, 2.0);
    if (mv.accepted) {
      ++inside;
      ASSERT_EQ(mv.accept_prob, 1.0);
      s[0] = mv.value;
    } else {
      ASSERT_EQ(mv.accept_prob, 0.0);  // only out-of-support proposals fail
    }
  }
  EXPECT_GT(inside, 8000);
}

TEST(DrawContinuous, OutsideSupportAlwaysRejected) {
  Rng rng(2);
  Flat f;
  const std::vector<double> s{9.999};
  for (int i = 0; i < 1000; ++i) {
    const auto mv = draw_sample_continuous(0, s, 0.0, f, rng, 1e6);
    if (std::abs(mv.value - s[0]) > 1e-3) FAIL() << "moved to " << mv.value;
  }
}

TEST(DrawContinuous, ZeroStepAlwaysAccepted) {
  Rng rng(3);
  Quadratic q;
  const std::vector<double> s{7.0};
  for (int i = 0; i < 100; ++i) EXPECT_TRUE(draw_sample_continuous(0, s, q.log_density(s), q, rng, 0.0).accepted);
}

TEST(GibbsSweep, AllRejectedLeavesState) {
  Rng rng(4);
  Spike t;
  const std::vector<double> steps{0.5};
  const std::vector<double> s{1.0};
  EXPECT_EQ(gibbs_sweep(s, t, rng, steps), s);
}

TEST(GibbsSweep, QuadraticTargetMoments) {
  SamplerConfig c = small(52000, 2000);
  c.init = InitMethod::Prior;
  const auto cs = run_chains(c, Quadratic{});
  const auto d = cs.pooled(0);
  EXPECT_NEAR(mean(d), 3.0, 0.02 * 3.0);
  EXPECT_NEAR(sample_variance(d), 4.0, 0.02 * 4.0);
}

TEST(DrawBinary, FlatFlagIsHalf) {
  SamplerConfig c = small(10000, 0);
  const auto cs = run_chains(c, Flag{0.0});
  EXPECT_NEAR(mean(cs.pooled(0)), 0.5, 0.02);
}

TEST(DrawBinary, CostlyFlagRarelyOn) {
  SamplerConfig c = small(10000, 0);
  const auto cs = run_chains(c, Flag{20.0});
  // Stationary on-probability is exp(-20) / (1 + exp(-20)).
  EXPECT_LT(mean(cs.pooled(0)), 0.01);
}

TEST(RunChains, Shape) {
  SamplerConfig c = small(10, 0, 2);
  const auto cs = run_chains(c, Quadratic{});
  ASSERT_EQ(cs.n_chains(), 2u);
  for (const auto& m : cs.samples) {
    EXPECT_EQ(m.rows, 10u);
    EXPECT_EQ(m.cols, 1u);
  }
}

TEST(RunChains, DeterministicAcrossRunsAndThreading) {
  const auto gen = generate(default_preset(PresetId::CaseIIIb));
  const auto m = preset_model(PresetId::CaseIIIb, gen.data);
  SamplerConfig c = small(300, 100, 2);
  c.init_hops = 5;
  const auto a = run_chains(c, m);
  const auto b = run_chains(c, m);
  c.parallel = false;
  const auto s = run_chains(c, m);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(a.samples[k], b.samples[k]);
    EXPECT_EQ(a.samples[k], s.samples[k]);
  }
  c.seed = 43;
  EXPECT_FALSE(run_chains(c, m).samples[0] == a.samples[0]);
}

TEST(RunChains, NoUnsupportedStates) {
  const auto gen = generate(default_preset(PresetId::TomatoSparse));
  const auto m = preset_model(PresetId::TomatoSparse, gen.data);
  SamplerConfig c = small(500, 100, 2);
  c.init = InitMethod::Prior;
  const auto cs = run_chains(c, m);
  for (const auto& mat : cs.samples) {
    for (std::size_t r = 0; r < mat.rows; ++r) ASSERT_GT(m.log_density(mat.row(r)), kNegInf);
  }
}

TEST(RunChains, FrozenStepsWithoutAdaptation) {
  SamplerConfig c = small(200, 50);
  c.adapt = false;
  const auto cs = run_chains(c, Quadratic{});
  EXPECT_DOUBLE_EQ(cs.final_steps[0][0], c.step_fraction * 4.0);
  c.adapt = true;
  EXPECT_NE(run_chains(c, Quadratic{}).final_steps[0][0], c.step_fraction * 4.0);
}

TEST(RunChains, CaseIAcceptanceRates) {
  const auto gen = generate(default_preset(PresetId::CaseI));
  const auto m = preset_model(PresetId::CaseI, gen.data);
  const auto cs = run_chains(small(12000, 2000), m);
  for (std::size_t p = 0; p < cs.n_params(); ++p) {
    EXPECT_GE(cs.acceptance_rate(0, p), 0.1) << cs.names[p];
    EXPECT_LE(cs.acceptance_rate(0, p), 0.7) << cs.names[p];
  }
}

TEST(RunChains, StationaryFromTruth) {
  const auto gen = generate(default_preset(PresetId::CaseI));
  const auto m = preset_model(PresetId::CaseI, gen.data);
  const std::vector<double> truth{5, 5, 5, 5, 5, 5, 50, 50, 50};
  const std::vector<double> width{0.006, 0.005, 0.002, 0.002, 0.005, 0.002, 0.141, 0.012, 0.091};
  const auto cs = run_chains(small(4000, 1000), m, truth);
  for (std::size_t p = 0; p < truth.size(); ++p) EXPECT_NEAR(mean(cs.pooled(p)), truth[p], 10 * width[p]) << cs.names[p];
}

TEST(RunChains, InitOutsideSupportThrows) {
  Flat f;
  EXPECT_THROW(run_chains(small(10, 0), f, std::vector<double>{11.0}), Error);
  EXPECT_THROW(run_chains(small(10, 0), f, std::vector<double>{1.0, 2.0}), Error);
}

TEST(SamplerConfig, Validation) {
  EXPECT_THROW(small(10, 10).validate(), Error);
  EXPECT_THROW(small(10, 0, 0).validate(), Error);
  auto c = small(10, 0);
  c.step_fraction = 0.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(SamplerConfig, JsonRoundTrip) {
  SamplerConfig c = small(1234, 56, 4);
  c.seed = 99;
  c.init = InitMethod::Prior;
  c.random_scan = true;
  const auto back = sampler_config_from_json(sampler_config_to_json(c));
  EXPECT_EQ(sampler_config_to_json(back), sampler_config_to_json(c));
  EXPECT_THROW(sampler_config_from_json({{"init", "best"}}), Error);
}

TEST(Chains, WriteReadRoundTrip) {
  const auto cs = run_chains(small(50, 10, 2), Quadratic{});
  const auto dir = std::filesystem::temp_directory_path() / "fbl_chain_roundtrip";
  std::filesystem::remove_all(dir);
  write_chains(dir.string(), cs);
  const auto back = read_chains(dir.string());
  EXPECT_EQ(back.names, cs.names);
  EXPECT_EQ(back.burn_in, cs.burn_in);
  EXPECT_EQ(back.seed, cs.seed);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(back.samples[k], cs.samples[k]);  // round-trip formatting
  std::filesystem::remove_all(dir);
}

TEST(FindMode, QuadraticOptimum) {
  const auto r = find_mode(Quadratic{}, {-10.0});
  EXPECT_NEAR(r.x[0], 3.0, 1e-4);
  EXPECT_NEAR(r.log_density, 0.0, 1e-8);
}

TEST(FindMode, CaseIFromTruthStaysAtTruth) {
  const auto gen = generate(default_preset(PresetId::CaseI));
  const auto m = preset_model(PresetId::CaseI, gen.data);
  const std::vector<double> truth{5, 5, 5, 5, 5, 5, 50, 50, 50};
  const auto r = find_mode(m, truth);
  EXPECT_GE(r.log_density, m.log_density(truth));
  for (std::size_t p = 0; p < truth.size(); ++p) EXPECT_NEAR(r.x[p], truth[p], 0.01 * truth[p]);
}
