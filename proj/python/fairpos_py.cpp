#include "fairpos/dgp.hpp"
#include "fairpos/error.hpp"
#include "fairpos/estimator.hpp"
#include "fairpos/experiments.hpp"
#include "fairpos/interventions.hpp"
#include "fairpos/report.hpp"
#include "fairpos/rng.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace fairpos;

namespace {

ShiftFamily make_family(const std::string& tag, double delta) { return ShiftFamily::make(parse_family_tag(tag), delta); }

DiscreteDgp dgp_by_name(const std::string& name) {
  if (name == "positivity_violation") return dgps::positivity_violation();
  if (name == "intermediate_positivity") return dgps::intermediate_positivity();
  if (name == "two_atom") return dgps::two_atom();
  if (name == "four_arm_mixed") return dgps::four_arm_mixed();
  if (name == "no_overlap") return dgps::no_overlap();
  if (name == "exchangeable_pair") return dgps::exchangeable_pair();
  if (name == "provider_synthetic") return dgps::provider_synthetic();
  throw Error(ErrorCode::BadConfig, "unknown process '" + name + "'");
}

std::vector<std::string> dgp_names() {
  return {"positivity_violation", "intermediate_positivity", "two_atom", "four_arm_mixed",
          "no_overlap", "exchangeable_pair", "provider_synthetic"};
}

py::dict estimate_dict(const EstimateSet& e) {
  py::dict out;
  out["psi"] = e.psi_hat;
  out["se"] = e.se;
  out["ci"] = e.ci;
  out["sigma"] = e.sigma_hat;
  out["plug_in"] = e.plug_in;
  out["n"] = e.n;
  out["ci_level"] = e.ci_level;
  out["inconsistent_rows"] = e.inconsistent_rows;
  out["degenerate_variance"] = e.degenerate_variance;
  return out;
}

std::string analyze(const std::string& input, const std::string& treatment, const std::string& outcome,
                    const std::vector<std::string>& covariates, const std::vector<std::string>& families,
                    std::optional<std::string> benchmark, double k, int folds, std::uint64_t seed, int threads) {
  AnalysisRequest request;
  request.input = input;
  request.treatment = treatment;
  request.outcome = outcome;
  request.covariates = covariates;
  if (!families.empty()) {
    request.families.clear();
    for (const auto& f : families) request.families.push_back(parse_family_spec(f, 0.5));
  }
  request.benchmark = std::move(benchmark);
  request.config.smoothing_k = k;
  request.config.folds = folds;
  request.config.seed = seed;
  request.config.threads = threads;
  request.config.validate();
  AnalysisResult result;
  {
    py::gil_scoped_release release;
    result = run_analysis(request);
  }
  return to_json(result).dump();
}

}  // namespace

PYBIND11_MODULE(_fairpos, m) {
  m.doc() = "Fair provider profiling estimators";

  static py::exception<Error> error(m, "FairposError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.attr("SCHEMA_VERSION") = kSchemaVersion;
  m.attr("PRNG") = Rng::kAlgorithm;

  m.def("shift", [](const std::string& family, double delta, double x, int order) {
    return make_family(family, delta).eval(x, order);
  }, py::arg("family"), py::arg("delta"), py::arg("x"), py::arg("order") = 0);

  m.def("smoothing", [](double k, double x, int order) { return SmoothingKernel(k).eval(x, order); },
        py::arg("k"), py::arg("x"), py::arg("order") = 0);

  m.def("interventional_propensity",
        [](const RowMatrix& pi, const std::string& family, double delta, double k, int target) {
          const PropensityMatrix matrix(pi, PropensitySource::oracle);
          const auto ip = interventional_propensity(matrix, make_family(family, delta), SmoothingKernel(k), target);
          py::dict out;
          out["q"] = ip.q;
          out["rho"] = ip.rho;
          out["trim_score"] = ip.trim_score;
          return out;
        },
        py::arg("pi"), py::arg("family"), py::arg("delta") = 0.5, py::arg("k") = 100.0, py::arg("target"));

  m.def("one_step",
        [](const std::vector<int>& treatments, const std::vector<double>& outcomes, const RowMatrix& pi,
           const RowMatrix& mu, const std::string& family, double delta, double k, double ci_level, int threads) {
          return estimate_dict(one_step(treatments, outcomes, pi, mu, make_family(family, delta), SmoothingKernel(k),
                                        ci_level, threads));
        },
        py::arg("treatments"), py::arg("outcomes"), py::arg("pi"), py::arg("mu"), py::arg("family") = "tsm",
        py::arg("delta") = 0.5, py::arg("k") = 100.0, py::arg("ci_level") = 0.95, py::arg("threads") = 1);

  m.def("analyze_json", &analyze, py::arg("input"), py::arg("treatment"), py::arg("outcome"),
        py::arg("covariates"), py::arg("families") = std::vector<std::string>{},
        py::arg("benchmark") = std::nullopt, py::arg("k") = 100.0, py::arg("folds") = 2, py::arg("seed") = 0,
        py::arg("threads") = 1);

  m.def("processes", &dgp_names);

  m.def("true_functional",
        [](const std::string& process, const std::string& family, double delta, double k, int target) {
          return true_functional(dgp_by_name(process), make_family(family, delta), SmoothingKernel(k), target);
        },
        py::arg("process"), py::arg("family"), py::arg("delta") = 0.5, py::arg("k") = 100.0, py::arg("target"));

  m.def("eif_mean",
        [](const std::string& process, const std::string& family, double delta, double k, int target) {
          return enumerate_eif_mean(dgp_by_name(process), make_family(family, delta), SmoothingKernel(k), target);
        },
        py::arg("process"), py::arg("family"), py::arg("delta") = 0.5, py::arg("k") = 100.0, py::arg("target"));

  m.def("observed_mean", [](const std::string& process) { return dgp_by_name(process).observed_mean(); },
        py::arg("process"));

  m.def("fairness_check_json", [] { return to_json(fairness_criterion_check()).dump(); });
  m.def("necessity_check_json", [] { return to_json(necessity_check(dgps::no_overlap())).dump(); });
  m.def("telescoping_json", [](std::uint64_t seed, int draws) { return to_json(telescoping_sweep(seed, draws)).dump(); },
        py::arg("seed") = 1, py::arg("draws") = 1000);
}
