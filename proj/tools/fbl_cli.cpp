// fbl: generate data, fit fuzzy rule bases by MCMC, diagnose, predict,
// compare against GLMs, and run the scaling / bias studies.
//
// Exit status: 0 ok, 1 usage error, 2 runtime failure. A failing command
// leaves only <out>/.failed behind.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fbl/fbl.hpp"

namespace fs = std::filesystem;
using namespace fbl;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> preset_list() {
  std::vector<std::string> out;
  for (const auto& [name, id] : preset_names()) out.push_back(name);
  return out;
}

// Options shared by every command that builds a model.
struct ModelOptions {
  std::optional<std::string> preset, config, data, rule_base;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chains, iters, burn_in;
  bool select_rules = false, estimate_sigma = false;

  void add(CLI::App* app) {
    app->add_option("--preset", preset, "case preset")->check(CLI::IsMember(preset_list()));
    app->add_option("--config", config, "experiment JSON")->check(CLI::ExistingFile);
    app->add_option("--data", data, "dataset CSV (response = last column)")->check(CLI::ExistingFile);
    app->add_option("--rule-base", rule_base, "rule base JSON")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "seed for data generation and sampling");
    app->add_option("--chains", chains)->check(CLI::PositiveNumber);
    app->add_option("--iters", iters)->check(CLI::PositiveNumber);
    app->add_option("--burn-in", burn_in);
    app->add_flag("--select-rules", select_rules, "sample rule inclusion flags");
    app->add_flag("--estimate-sigma", estimate_sigma, "sample sigma ~ Uniform(0.01, 10)");
  }

  // Config file first, then flags on top.
  ExperimentConfig resolve() const {
    ExperimentConfig c = config ? load_experiment(*config) : ExperimentConfig{};
    if (preset) c.preset = parse_preset(*preset);
    if (data) c.data_path = *data;
    if (rule_base) c.rule_base_path = *rule_base;
    if (seed) c.sampler.seed = *seed;
    if (chains) c.sampler.n_chains = *chains;
    if (iters) c.sampler.n_iterations = *iters;
    if (burn_in) c.sampler.burn_in = *burn_in;
    if (select_rules) c.select_rules = true;
    if (estimate_sigma) c.estimate_sigma = true;
    if (!c.preset && !c.data_path) throw UsageError("need --preset, --data or a --config naming one");
    if (!c.preset && !c.rule_base_path) throw UsageError("--data without a preset needs --rule-base");
    return c;
  }
};

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  detail::require(out.good(), "cannot write '" + p.string() + "'");
  out << s;
}

Json experiment_to_json(const ExperimentConfig& c) {
  Json j;
  if (c.preset) j["preset"] = preset_name(*c.preset);
  j["sampler"] = sampler_config_to_json(c.sampler);
  j["seed"] = c.sampler.seed;
  return j;
}

// Fit directory: model.json + data.csv + chains + manifest + summary.
struct FitDir {
  FblModel model;
  ChainSet chains;
};

FitDir read_fit(const std::string& dir) {
  detail::require(fs::is_directory(dir), "fit directory '" + dir + "' does not exist");
  const auto data = load_csv(dir + "/data.csv");
  return {model_from_json(read_json_file(dir + "/model.json"), data), read_chains(dir)};
}

int cmd_generate(const std::string& preset, std::uint64_t seed, std::optional<std::size_t> n,
                 std::optional<double> noise, const fs::path& out) {
  auto p = default_preset(parse_preset(preset), seed);
  if (n) p.n_points = *n;
  if (noise) p.noise_sd = *noise;
  const auto g = generate(p);
  fs::create_directories(out);
  write_csv((out / "data.csv").string(), g.data);
  write_json_file((out / "truth.json").string(), truth_to_json(g));
  std::cout << "wrote " << g.data.size() << " rows to " << (out / "data.csv").string() << '\n';
  return 0;
}

int cmd_fit(const ModelOptions& opt, const fs::path& out) {
  const auto cfg = opt.resolve();
  const auto model = build_model(cfg);
  const auto chains = run_chains(cfg.sampler, model);
  const auto summary = summarize(chains);

  fs::create_directories(out);
  write_chains(out.string(), chains);
  auto sj = summary_to_json(summary);
  sj["n_parameters"] = chains.n_params();
  write_json_file((out / "summary.json").string(), sj);
  write_json_file((out / "model.json").string(), model_to_json(model));
  write_json_file((out / "experiment.json").string(), experiment_to_json(cfg));
  write_csv((out / "data.csv").string(), model.data);

  std::cout << "parameter,mean,hdi_lo,hdi_hi,ess,gelman_rubin\n";
  for (const auto& p : summary.parameters) {
    std::cout << p.name << ',' << format_double(p.mean) << ',' << format_double(p.hdi.lo) << ','
              << format_double(p.hdi.hi) << ',' << (p.ess ? format_double(*p.ess) : "n/a") << ','
              << (p.gelman_rubin ? format_double(*p.gelman_rubin) : "n/a") << '\n';
  }
  return 0;
}

int cmd_predict(const std::string& fit_dir, const std::string& inputs, std::uint64_t seed, const fs::path& out) {
  const auto fit = read_fit(fit_dir);
  const auto t = read_csv_table(inputs);
  detail::require(t.values.rows > 0, "'" + inputs + "' has no input rows");
  const auto n_in = fit.model.rule_base.inputs.size();
  detail::require(t.values.cols == n_in, "'" + inputs + "' has " + std::to_string(t.values.cols) +
                                             " columns, the model has " + std::to_string(n_in) + " inputs");
  const auto draws = posterior_predictive(fit.chains, fit.model, t.values, seed);

  std::vector<std::string> cols;
  for (std::size_t r = 0; r < t.values.rows; ++r) cols.push_back("point_" + std::to_string(r + 1));
  auto header = t.header;
  header.insert(header.end(), {"mean", "hdi_lo", "hdi_hi"});
  Matrix points(0, header.size());
  for (std::size_t r = 0; r < t.values.rows; ++r) {
    const auto col = draws.column(r);
    const auto h = hdi(col);
    std::vector<double> row(t.values.row(r).begin(), t.values.row(r).end());
    row.insert(row.end(), {mean(col), h.lo, h.hi});
    points.append_row(row);
  }

  fs::create_directories(out);
  write_csv_table((out / "predictive_draws.csv").string(), cols, draws);
  write_csv_table((out / "predictions.csv").string(), header, points);
  for (std::size_t r = 0; r < points.rows; ++r) {
    std::cout << cols[r] << " mean " << format_double(points(r, n_in)) << '\n';
  }
  return 0;
}

int cmd_compare_glm(const ModelOptions& opt, std::vector<std::string> glm_ids, const std::optional<std::string>& fbl_fit,
                    const fs::path& out) {
  const auto cfg = opt.resolve();
  const auto data = experiment_data(cfg);
  if (glm_ids.empty()) glm_ids = cfg.glm;
  if (glm_ids.empty()) glm_ids = {"GLM1", "GLM2", "GLM3", "GLM4"};

  Json rows = Json::array();
  std::vector<GlmModel> glms;
  for (const auto& id : glm_ids) glms.push_back(glm_preset(id, data.dims()));  // unknown ids fail before sampling
  for (const auto& glm : glms) {
    const auto chains = fit_glm(glm, data, cfg.sampler);
    const auto pred = column_means(posterior_predictive(chains, glm, data.X, cfg.sampler.seed));
    rows.push_back({{"model", glm.name}, {"terms", glm.terms.size()}, {"mse", mse(pred, data.y)}});
  }
  if (fbl_fit) {
    const auto fit = read_fit(*fbl_fit);
    const auto pred = column_means(posterior_predictive(fit.chains, fit.model, data.X, cfg.sampler.seed));
    rows.push_back({{"model", "FBL"}, {"terms", fit.chains.n_params()}, {"mse", mse(pred, data.y)}});
  }

  fs::create_directories(out);
  write_json_file((out / "mse.json").string(), Json{{"n_points", data.size()}, {"rows", rows}});
  std::cout << "model,terms,mse\n";
  for (const auto& r : rows) {
    std::cout << r["model"].get<std::string>() << ',' << r["terms"].get<std::size_t>() << ','
              << format_double(r["mse"].get<double>()) << '\n';
  }
  return 0;
}

// One directory per parameter: trace, density histogram, autocorrelation,
// Geweke scores.
int cmd_diagnose(const std::string& fit_dir, std::size_t max_lag, std::size_t bins, const fs::path& out) {
  const auto cs = read_fit(fit_dir).chains;
  const auto kept = cs.retained();
  detail::require(kept >= 20, "diagnose: need at least 20 post-burn-in draws per chain");
  const auto lag = std::min(max_lag, kept - 1);

  std::vector<std::string> chain_cols;
  for (std::size_t c = 0; c < cs.n_chains(); ++c) chain_cols.push_back("chain_" + std::to_string(c + 1));

  fs::create_directories(out);
  for (std::size_t p = 0; p < cs.n_params(); ++p) {
    const fs::path dir = out / cs.names[p];
    fs::create_directories(dir);

    auto header = std::vector<std::string>{"iteration"};
    header.insert(header.end(), chain_cols.begin(), chain_cols.end());
    Matrix trace(cs.n_iterations(), cs.n_chains() + 1);
    for (std::size_t it = 0; it < cs.n_iterations(); ++it) {
      trace(it, 0) = static_cast<double>(it);
      for (std::size_t c = 0; c < cs.n_chains(); ++c) trace(it, c + 1) = cs.samples[c](it, p);
    }
    write_csv_table((dir / "trace.csv").string(), header, trace);

    const auto pooled = cs.pooled(p);
    const auto [lo_it, hi_it] = std::minmax_element(pooled.begin(), pooled.end());
    const double lo = *lo_it, width = (*hi_it - lo) / static_cast<double>(bins);
    Matrix dens(bins, 3);
    for (std::size_t b = 0; b < bins; ++b) {
      dens(b, 0) = lo + width * static_cast<double>(b);
      dens(b, 1) = lo + width * static_cast<double>(b + 1);
    }
    for (double v : pooled) {
      const auto b = width > 0 ? std::min(bins - 1, static_cast<std::size_t>((v - lo) / width)) : 0;
      dens(b, 2) += 1.0;
    }
    for (std::size_t b = 0; b < bins; ++b) {
      dens(b, 2) /= static_cast<double>(pooled.size()) * (width > 0 ? width : 1.0);
    }
    write_csv_table((dir / "density.csv").string(), {"bin_lo", "bin_hi", "density"}, dens);

    header = {"lag"};
    header.insert(header.end(), chain_cols.begin(), chain_cols.end());
    Matrix acf(lag + 1, cs.n_chains() + 1);
    for (std::size_t k = 0; k <= lag; ++k) acf(k, 0) = static_cast<double>(k);
    for (std::size_t c = 0; c < cs.n_chains(); ++c) {
      const auto d = cs.draws(c, p);
      if (std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); })) {
        acf(0, c + 1) = 1.0;  // flat chain: report rho_0 only
        continue;
      }
      const auto a = autocorrelation(d, lag);
      for (std::size_t k = 0; k <= lag; ++k) acf(k, c + 1) = a[k];
    }
    write_csv_table((dir / "autocorrelation.csv").string(), header, acf);

    Matrix gw(0, 4);
    for (std::size_t c = 0; c < cs.n_chains(); ++c) {
      const auto g = geweke(cs.draws(c, p));
      for (std::size_t w = 0; w < g.z.size(); ++w) {
        gw.append_row(std::vector<double>{static_cast<double>(c + 1), static_cast<double>(g.starts[w] + cs.burn_in),
                                          g.z[w], g.zero_variance[w] ? 1.0 : 0.0});
      }
    }
    write_csv_table((dir / "geweke.csv").string(), {"chain", "start", "z", "zero_variance"}, gw);
  }
  std::cout << "wrote diagnostics for " << cs.n_params() << " parameters to " << out.string() << '\n';
  return 0;
}

int cmd_bench(const std::vector<std::size_t>& params, const std::vector<std::size_t>& rules, std::size_t iters,
              std::size_t repeats, std::uint64_t seed, const fs::path& out) {
  const auto rows = scaling_bench(params, rules, iters, repeats, seed);
  std::ostringstream csv;
  csv << "varied,parameters,rules,seconds\n";
  for (const auto& r : rows) csv << r.varied << ',' << r.parameters << ',' << r.rules << ',' << format_double(r.seconds) << '\n';
  fs::create_directories(out);
  write_text(out / "timing.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

int cmd_bias(BiasStudyConfig cfg, const fs::path& out) {
  const auto r = bias_study(cfg);
  fs::create_directories(out);
  write_json_file((out / "bias.json").string(), bias_study_to_json(r));
  std::cout << "chi-squared " << format_double(r.test.statistic) << " df " << r.test.df << " p "
            << format_double(r.test.p_value) << (r.test.reject ? " reject" : " no reject") << '\n';
  return 0;
}

void mark_failed(const std::optional<fs::path>& out, const std::string& what) {
  if (!out) return;
  std::error_code ec;
  fs::create_directories(*out, ec);
  std::ofstream(*out / ".failed") << what << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian fitting of Mamdani fuzzy rule bases"};
  app.require_subcommand(1);
  std::string out;

  auto* gen = app.add_subcommand("generate", "write a preset dataset and its true parameters");
  std::string gen_preset;
  std::uint64_t gen_seed = 42;
  std::optional<std::size_t> gen_n;
  std::optional<double> gen_noise;
  gen->add_option("--preset", gen_preset)->required()->check(CLI::IsMember(preset_list()));
  gen->add_option("--seed", gen_seed);
  gen->add_option("--n", gen_n, "number of points")->check(CLI::PositiveNumber);
  gen->add_option("--noise", gen_noise, "noise standard deviation")->check(CLI::NonNegativeNumber);
  gen->add_option("-o,--out", out)->required();

  auto* fit = app.add_subcommand("fit", "sample the posterior of a fuzzy rule base");
  ModelOptions fit_opt;
  fit_opt.add(fit);
  fit->add_option("-o,--out", out)->required();

  auto* pred = app.add_subcommand("predict", "posterior-predictive draws at new inputs");
  std::string pred_fit, pred_inputs;
  std::uint64_t pred_seed = 0;
  pred->add_option("--fit", pred_fit, "fit directory")->required();
  pred->add_option("--inputs", pred_inputs, "CSV of input rows")->required();
  pred->add_option("--seed", pred_seed);
  pred->add_option("-o,--out", out)->required();

  auto* cmp = app.add_subcommand("compare-glm", "in-sample MSE of Bayesian GLMs (and optionally a fit)");
  ModelOptions cmp_opt;
  cmp_opt.add(cmp);
  std::vector<std::string> glm_ids;
  std::optional<std::string> fbl_fit;
  cmp->add_option("--glm", glm_ids, "GLM1..GLM7")->delimiter(',');
  cmp->add_option("--fbl-fit", fbl_fit, "fit directory to add as an FBL row");
  cmp->add_option("-o,--out", out)->required();

  auto* diag = app.add_subcommand("diagnose", "per-parameter diagnostic tables for a fit");
  std::string diag_fit;
  std::size_t max_lag = 100, bins = 50;
  diag->add_option("--fit", diag_fit, "fit directory")->required();
  diag->add_option("--max-lag", max_lag)->check(CLI::PositiveNumber);
  diag->add_option("--bins", bins)->check(CLI::PositiveNumber);
  diag->add_option("-o,--out", out)->required();

  auto* bench = app.add_subcommand("bench", "sampling time against parameter and rule counts");
  std::vector<std::size_t> b_params{9, 12, 15, 18}, b_rules{5, 8, 11, 14};
  std::size_t b_iters = 5000, b_repeats = 3;
  std::uint64_t b_seed = 42;
  bench->add_option("--params", b_params)->delimiter(',');
  bench->add_option("--rules", b_rules)->delimiter(',');
  bench->add_option("--iters", b_iters)->check(CLI::PositiveNumber);
  bench->add_option("--repeats", b_repeats)->check(CLI::PositiveNumber);
  bench->add_option("--seed", b_seed);
  bench->add_option("-o,--out", out)->required();

  auto* bias = app.add_subcommand("bias", "replicate study of p(theta < theta_true)");
  BiasStudyConfig bias_cfg;
  bias_cfg.sampler.n_iterations = 4000;
  bias_cfg.sampler.burn_in = 1000;
  bias->add_option("--replicates", bias_cfg.n_replicates)->check(CLI::PositiveNumber);
  bias->add_option("--seed", bias_cfg.seed);
  bias->add_option("--chains", bias_cfg.sampler.n_chains)->check(CLI::PositiveNumber);
  bias->add_option("--iters", bias_cfg.sampler.n_iterations)->check(CLI::PositiveNumber);
  bias->add_option("--burn-in", bias_cfg.sampler.burn_in);
  bias->add_option("-o,--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const std::optional<fs::path> out_dir = out.empty() ? std::nullopt : std::optional<fs::path>(out);
  try {
    if (out_dir) fs::remove(*out_dir / ".failed");
    if (*gen) return cmd_generate(gen_preset, gen_seed, gen_n, gen_noise, out);
    if (*fit) return cmd_fit(fit_opt, out);
    if (*pred) return cmd_predict(pred_fit, pred_inputs, pred_seed, out);
    if (*cmp) return cmd_compare_glm(cmp_opt, glm_ids, fbl_fit, out);
    if (*diag) return cmd_diagnose(diag_fit, max_lag, bins, out);
    if (*bench) return cmd_bench(b_params, b_rules, b_iters, b_repeats, b_seed, out);
    if (*bias) return cmd_bias(bias_cfg, out);
  } catch (const UsageError& e) {
    std::cerr << "fbl: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fbl: " << e.what() << '\n';
    mark_failed(out_dir, e.what());
    return 2;
  }
  return 1;
}
