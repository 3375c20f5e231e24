#include "fairpos/dgp.hpp"
#include "fairpos/experiments.hpp"
#include "fairpos/interventions.hpp"
#include "fairpos/rng.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace fairpos;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string gate_summary(const SimulationReport& report) {
  std::string out;
  for (const auto& g : report.gates) {
    if (!out.empty()) out += ", ";
    out += g.name + "=" + num(g.value) + (g.pass ? "" : " (FAIL)");
  }
  return out;
}

// Rows mix exact zeros with positive draws; every column stays positive somewhere.
RowMatrix random_pi(Rng& rng, int n, int d, double zero_rate) {
  RowMatrix m(n, d);
  for (;;) {
    for (int i = 0; i < n; ++i) {
      double total = 0.0;
      for (int b = 0; b < d; ++b) {
        m(i, b) = rng.uniform() < zero_rate ? 0.0 : rng.uniform(0.001, 1.0);
        total += m(i, b);
      }
      if (total == 0.0) {
        m(i, static_cast<int>(rng.below(static_cast<std::uint64_t>(d)))) = 1.0;
        total = 1.0;
      }
      m.row(i) /= total;
    }
    if ((m.colwise().maxCoeff().array() > 0.0).all()) return m;
  }
}

Outcome construction_invariants() {
  Rng rng(derive_seed(1, 0xC1));
  const std::vector<double> deltas{0.0, 0.25, 0.5, 0.9};
  const auto families = builtin_families(deltas);
  double worst_sum = 0.0;
  long checks = 0, failures = 0, zero_rows = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 2 + static_cast<int>(rng.below(7));
    const PropensityMatrix pi(random_pi(rng, 60, d, 0.15), PropensitySource::oracle);
    for (double k : {10.0, 100.0, 1000.0}) {
      const SmoothingKernel kernel(k);
      for (const auto& family : families) {
        std::vector<InterventionalPropensities> per_target;
        for (int a = 0; a < d; ++a) per_target.push_back(interventional_propensity(pi, family, kernel, a));
        for (const auto& ip : per_target) {
          worst_sum = std::max(worst_sum, (ip.q.rowwise().sum().array() - 1.0).abs().maxCoeff());
          worst_sum = std::max(worst_sum, (ip.rho.rowwise().sum().array() - 1.0).abs().maxCoeff());
          for (Eigen::Index i = 0; i < pi.rows(); ++i) {
            if (pi.values().row(i).minCoeff() != 0.0) continue;
            ++zero_rows;
            if (ip.q.row(i) != pi.values().row(i)) ++failures;
          }
          ++checks;
          if (!check_q_weak_positivity(ip.q, pi).pass) ++failures;
        }
        ++checks;
        if (!check_property_1(per_target, pi).pass) ++failures;
        for (int a = 0; a < d; ++a) {
          for (int b = a + 1; b < d; ++b) {
            ++checks;
            if (!check_property_2(per_target[a], per_target[b]).pass) ++failures;
          }
        }
      }
    }
  }
  return {worst_sum <= 1e-10 && failures == 0,
          "max row-sum error " + num(worst_sum) + ", " + std::to_string(failures) + " of " +
              std::to_string(checks) + " property checks failed, " + std::to_string(zero_rows) +
              " zero-row comparisons"};
}

Outcome telescoping() {
  const auto report = telescoping_sweep(derive_seed(2, 0xC2), 1000);
  return {report.pass(), gate_summary(report)};
}

Outcome eif_correctness() {
  const auto report = identity_suite(1);
  return {report.pass(), gate_summary(report)};
}

Outcome double_robustness() {
  RateOptions options;
  options.threads = workers();
  const auto report = dr_rate_experiment(dgps::positivity_violation(), ShiftFamily::multiplicative(0.5), options);
  return {report.pass(), gate_summary(report)};
}

Outcome inference() {
  CoverageOptions options;
  options.threads = workers();
  const auto arms = coverage_experiment(dgps::intermediate_positivity(), ShiftFamily::multiplicative(0.5), options);
  const auto pair = coverage_experiment(dgps::exchangeable_pair(), ShiftFamily::tsm(), options);
  return {arms.pass() && pair.pass(),
          "intermediate positivity: " + gate_summary(arms) + "; exchangeable pair: " + gate_summary(pair)};
}

Outcome fairness() {
  FairnessOptions options;
  options.deltas = {0.0, 0.25, 0.5, 0.9};
  const auto report = fairness_criterion_check(options);
  return {report.pass(), gate_summary(report)};
}

Outcome necessity() {
  const auto report = necessity_check(dgps::no_overlap());
  return {report.pass(), gate_summary(report)};
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Outcome end_to_end(const std::string& cli, const std::string& data, const std::filesystem::path& work) {
  std::filesystem::create_directories(work);
  std::vector<std::string> texts;
  const std::vector<std::pair<std::string, int>> runs{{"run_a", 1}, {"run_b", 1}, {"run_threads", 4}};
  for (const auto& [name, threads] : runs) {
    const auto out = work / name;
    std::filesystem::remove_all(out);
    const std::string command = "\"" + cli + "\" analyze --input \"" + data +
                                "\" --treatment provider --outcome readmit --covariates x1,x2,x3 --seed 11"
                                " --threads " + std::to_string(threads) + " --out \"" + out.string() + "\" > \"" +
                                (work / (name + ".log")).string() + "\"";
    if (std::system(command.c_str()) != 0) return {false, "analyze failed: " + command};
    json report = json::parse(slurp(out / "report.json"));
    report.erase("runtime_ms");
    texts.push_back(report.dump());
  }
  const bool identical = texts[0] == texts[1] && texts[0] == texts[2];
  const json report = json::parse(texts[0]);
  bool shape = report.at("families").size() == 5;
  for (const auto& family : report.at("families")) {
    shape = shape && family.at("estimates").size() == 10 && family.at("contrasts").size() == 9;
  }
  return {identical && shape, std::string("reports ") + (identical ? "identical" : "differ") +
                                  " across runs and thread counts, " + std::to_string(report.at("families").size()) +
                                  " family sections" + (shape ? " with 10 estimates and 9 contrasts each" : "")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string cli, data, work = "acceptance_work";
  app.add_option("--cli", cli, "path to the fairpos executable")->required();
  app.add_option("--data", data, "synthetic 10-arm CSV")->required();
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "construction invariants", 5.0, construction_invariants},
      {2, "telescoping identity", 1.0, telescoping},
      {3, "EIF mean and pathwise derivative", 30.0, eif_correctness},
      {4, "double robustness rates", 600.0, double_robustness},
      {5, "confidence interval coverage", 300.0, inference},
      {6, "fairness criterion", 10.0, fairness},
      {7, "necessity signature", 1.0, necessity},
      {8, "end-to-end determinism", 60.0, [&] { return end_to_end(cli, data, work); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = seconds < c.budget_s;
    const bool pass = outcome.pass && in_budget;
    failed += pass ? 0 : 1;
    std::printf("criterion %d %s: %s [%.2f s, budget %.0f s%s] %s\n", c.id, c.name.c_str(), pass ? "PASS" : "FAIL",
                seconds, c.budget_s, in_budget ? "" : ", over budget", outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
