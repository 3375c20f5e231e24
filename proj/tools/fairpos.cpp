#include "fairpos/dgp.hpp"
#include "fairpos/error.hpp"
#include "fairpos/experiments.hpp"
#include "fairpos/io.hpp"
#include "fairpos/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

constexpr int kExitOk = 0;
constexpr int kExitGate = 1;
constexpr int kExitUsage = 2;

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v == 0) {
      throw fairpos::Error(fairpos::ErrorCode::BadConfig, "bad grid entry '" + item + "'");
    }
    grid.push_back(static_cast<std::size_t>(v));
  }
  if (grid.empty()) throw fairpos::Error(fairpos::ErrorCode::BadConfig, "empty --n grid");
  return grid;
}

fairpos::SimulationReport merge(std::string name, const std::vector<fairpos::SimulationReport>& parts) {
  fairpos::SimulationReport out;
  out.experiment = std::move(name);
  for (const auto& p : parts) {
    std::string prefix = p.config.count("dgp") ? p.config.at("dgp") : p.experiment;
    if (p.config.count("family")) prefix += "/" + p.config.at("family");
    if (p.config.count("k")) prefix += "/k=" + p.config.at("k");
    for (auto g : p.gates) {
      g.name = prefix + ":" + g.name;
      out.gates.push_back(std::move(g));
    }
    for (const auto& [k, v] : p.summary) out.summary[prefix + ":" + k] = v;
    for (const auto& n : p.notes) out.notes.push_back(prefix + ": " + n);
    out.descriptive = out.descriptive || p.descriptive;
  }
  return out;
}

fairpos::SimulationReport run_named(const std::string& name, const std::optional<std::string>& grid,
                                    std::optional<int> reps, std::optional<std::uint64_t> seed, int threads) {
  using namespace fairpos;
  if (name == "fairness") {
    return fairness_criterion_check();
  }
  if (name == "pathwise") {
    std::vector<SimulationReport> parts;
    std::vector<ShiftFamily> families = builtin_families({0.5, 0.9});
    families.push_back(ShiftFamily::identity());
    for (const auto& dgp : dgps::eif_suite()) {
      for (const auto& f : families) parts.push_back(pathwise_derivative_check(dgp, f, SmoothingKernel(100.0)));
    }
    return merge("pathwise", parts);
  }
  if (name == "identity-suite") {
    return identity_suite(seed.value_or(1));
  }
  if (name == "dr-rate") {
    RateOptions opt;
    if (grid) opt.n_grid = parse_grid(*grid);
    if (reps) opt.replications = *reps;
    if (seed) opt.seed = *seed;
    opt.threads = threads;
    return dr_rate_experiment(dgps::positivity_violation(), ShiftFamily::multiplicative(0.5), opt);
  }
  if (name == "coverage") {
    CoverageOptions opt;
    if (grid) {
      const auto g = parse_grid(*grid);
      if (g.size() != 1) throw Error(ErrorCode::BadConfig, "coverage takes a single --n");
      opt.n = g.front();
    }
    if (reps) opt.replications = *reps;
    if (seed) opt.seed = *seed;
    opt.threads = threads;
    return coverage_experiment(dgps::exchangeable_pair(), ShiftFamily::tsm(), opt);
  }
  if (name == "arm-sweep") {
    ArmSweepOptions opt;
    if (grid) {
      const auto g = parse_grid(*grid);
      if (g.size() != 1) throw Error(ErrorCode::BadConfig, "arm-sweep takes a single --n");
      opt.n = g.front();
    }
    if (reps) opt.replications = *reps;
    if (seed) opt.seed = *seed;
    opt.threads = threads;
    return arm_sweep_experiment(ShiftFamily::multiplicative(0.5), opt);
  }
  throw Error(ErrorCode::UnknownExperiment, "unknown experiment '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairpos: fair causal parameters for multi-valued treatments"};
  app.require_subcommand(1);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Estimate psi_a for every label and family");
  std::string input, treatment, outcome, covariates_csv, out_dir, config_path;
  std::vector<std::string> family_args;
  std::optional<double> delta, k;
  std::optional<int> folds, threads_opt;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> benchmark;
  analyze->add_option("--input", input, "CSV file with a header row");
  analyze->add_option("--treatment", treatment, "Treatment column");
  analyze->add_option("--outcome", outcome, "Outcome column");
  analyze->add_option("--covariates", covariates_csv, "Comma-separated covariate columns");
  analyze->add_option("--family", family_args, "Family tag, optionally tag:delta (repeatable)");
  analyze->add_option("--delta", delta, "Default delta for families given without one");
  analyze->add_option("--k", k, "Smoothing kernel sharpness");
  analyze->add_option("--folds", folds, "Cross-fitting folds");
  analyze->add_option("--seed", seed, "Fold assignment seed");
  analyze->add_option("--benchmark", benchmark, "Label that every contrast is taken against");
  analyze->add_option("--config", config_path, "JSON config file (flags take precedence)");
  analyze->add_option("--threads", threads_opt, "Worker threads");
  analyze->add_option("--out", out_dir, "Output directory")->required();

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run a named verification experiment");
  std::string exp_name, exp_out;
  std::optional<std::string> exp_grid;
  std::optional<int> exp_reps;
  std::optional<std::uint64_t> exp_seed;
  int exp_threads = 1;
  experiment->add_option("--name", exp_name, "fairness | pathwise | dr-rate | coverage | identity-suite | arm-sweep")
      ->required();
  experiment->add_option("--n", exp_grid, "Sample size grid, comma-separated");
  experiment->add_option("--reps", exp_reps, "Replications per grid point");
  experiment->add_option("--seed", exp_seed, "Master seed");
  experiment->add_option("--threads", exp_threads, "Worker threads");
  experiment->add_option("--out", exp_out, "Output directory")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Write the synthetic 10-arm dataset and its true functionals");
  std::string synth_out;
  std::size_t synth_n = 3000;
  std::uint64_t synth_seed = 2024;
  synth->add_option("--out", synth_out, "CSV path")->required();
  synth->add_option("--n", synth_n, "Rows");
  synth->add_option("--seed", synth_seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*analyze) {
      fairpos::AnalysisRequest req;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw fairpos::Error(fairpos::ErrorCode::ParseError, "cannot open " + config_path);
        json j;
        try {
          in >> j;
        } catch (const json::exception& e) {
          throw fairpos::Error(fairpos::ErrorCode::ParseError, std::string("config file: ") + e.what());
        }
        fairpos::apply_config_json(j, req);
      }
      if (!input.empty()) req.input = input;
      if (!treatment.empty()) req.treatment = treatment;
      if (!outcome.empty()) req.outcome = outcome;
      if (!covariates_csv.empty()) {
        req.covariates.clear();
        std::stringstream ss(covariates_csv);
        std::string c;
        while (std::getline(ss, c, ',')) {
          if (!c.empty()) req.covariates.push_back(c);
        }
      }
      if (delta) req.config.delta = *delta;
      if (k) req.config.smoothing_k = *k;
      if (folds) req.config.folds = *folds;
      if (seed) req.config.seed = *seed;
      if (threads_opt) req.config.threads = *threads_opt;
      if (benchmark) req.benchmark = *benchmark;
      if (!family_args.empty()) {
        req.families.clear();
        for (const auto& f : family_args) req.families.push_back(fairpos::parse_family_spec(f, req.config.delta));
      }
      if (req.input.empty() || req.treatment.empty() || req.outcome.empty()) {
        throw fairpos::Error(fairpos::ErrorCode::BadConfig, "--input, --treatment and --outcome are required");
      }

      const fairpos::AnalysisResult result = fairpos::run_analysis(req);
      const fs::path out(out_dir);
      fairpos::write_atomic(out / "report.json", fairpos::to_json(result).dump(2) + "\n");
      fairpos::write_atomic(out / "report.txt", fairpos::render_table(result));
      for (const auto& fr : result.families) {
        fairpos::write_atomic(out / ("plot_" + fairpos::family_slug(fr.spec) + ".csv"),
                              fairpos::plot_csv(result, fr));
      }
      std::cout << fairpos::render_table(result);
      return kExitOk;
    }

    if (*experiment) {
      const auto start = std::chrono::steady_clock::now();
      const fairpos::SimulationReport report = run_named(exp_name, exp_grid, exp_reps, exp_seed, exp_threads);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      const fs::path out(exp_out);
      fairpos::write_atomic(out / (exp_name + ".json"), fairpos::to_json(report, ms).dump(2) + "\n");
      fairpos::write_atomic(out / (exp_name + ".txt"), fairpos::render_table(report));
      std::cout << fairpos::render_table(report);
      if (report.descriptive) return kExitOk;
      return report.pass() ? kExitOk : kExitGate;
    }

    if (*synth) {
      const fairpos::DiscreteDgp dgp = fairpos::dgps::provider_synthetic();
      const fairpos::SampledData s = fairpos::sample(dgp, synth_n, synth_seed);
      std::ostringstream csv;
      csv << "x1,x2,x3,provider,readmit\n";
      for (std::size_t i = 0; i < s.n(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        csv << shortest(s.covariates(r, 0)) << ',' << shortest(s.covariates(r, 1)) << ','
            << shortest(s.covariates(r, 2)) << ',' << dgp.labels[static_cast<std::size_t>(s.treatments[i])] << ','
            << shortest(s.outcomes[r]) << '\n';
      }
      fairpos::write_atomic(synth_out, csv.str());

      json truth = {{"dgp", dgp.name}, {"n", synth_n}, {"seed", synth_seed}, {"k", 100.0},
                    {"observed_mean", dgp.observed_mean()}, {"families", json::array()}};
      const fairpos::SmoothingKernel kernel(100.0);
      for (const auto& spec : fairpos::default_family_specs()) {
        const auto family = fairpos::ShiftFamily::make(spec.tag, spec.delta);
        json psi = json::object();
        for (int a = 0; a < dgp.arms(); ++a) {
          psi[dgp.labels[static_cast<std::size_t>(a)]] = fairpos::true_functional(dgp, family, kernel, a);
        }
        truth["families"].push_back({{"tag", fairpos::to_string(spec.tag)}, {"delta", spec.delta}, {"psi", psi}});
      }
      fs::path truth_path(synth_out);
      truth_path.replace_extension(".truth.json");
      fairpos::write_atomic(truth_path, truth.dump(2) + "\n");
      return kExitOk;
    }
  } catch (const fairpos::Error& e) {
    std::cerr << "error [" << fairpos::to_string(e.code()) << "]: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
