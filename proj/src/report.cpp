#include "fairpos/report.hpp"

#include "fairpos/error.hpp"
#include "fairpos/io.hpp"
#include "fairpos/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>

namespace fairpos {

using nlohmann::json;

namespace {

std::string sig6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string spec_label(const FamilySpec& spec) {
  std::string s(to_string(spec.tag));
  if (spec.tag != FamilyTag::tsm && spec.tag != FamilyTag::identity) s += ":" + sig6(spec.delta);
  return s;
}

// Renders rows with every column padded to its widest cell.
std::string aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (std::size_t j = 0; j < r.size(); ++j) width[j] = std::max(width[j], r[j].size());
  }
  std::ostringstream os;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j > 0) line += "  ";
      const std::string& cell = r[j];
      if (j == 0) {
        line += cell + std::string(width[j] - cell.size(), ' ');
      } else {
        line += std::string(width[j] - cell.size(), ' ') + cell;
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    os << line << '\n';
  }
  return os.str();
}

double mean(const Vector& v) {
  return v.size() == 0 ? 0.0 : pairwise_sum(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))) /
                                   static_cast<double>(v.size());
}

}  // namespace

FamilySpec parse_family_spec(const std::string& text, double default_delta) {
  FamilySpec spec;
  const auto colon = text.find(':');
  spec.tag = parse_family_tag(text.substr(0, colon));
  spec.delta = default_delta;
  if (colon != std::string::npos) {
    const std::string rest = text.substr(colon + 1);
    std::size_t used = 0;
    try {
      spec.delta = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rest.size()) throw Error(ErrorCode::BadConfig, "bad family delta in '" + text + "'");
  }
  if (spec.tag == FamilyTag::custom) throw Error(ErrorCode::BadConfig, "custom families are library-only");
  ShiftFamily::make(spec.tag, spec.delta);  // validates delta
  return spec;
}

std::vector<FamilySpec> default_family_specs() {
  return {{FamilyTag::tsm, 0.0},
          {FamilyTag::multiplicative, 0.9},
          {FamilyTag::multiplicative, 0.5},
          {FamilyTag::exp_tilt, 0.9},
          {FamilyTag::exp_tilt, 0.5}};
}

std::string family_slug(const FamilySpec& spec) {
  std::string s = spec_label(spec);
  std::replace(s.begin(), s.end(), ':', '_');
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

AnalysisResult run_analysis(const Dataset& data, const AnalysisRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  request.config.validate();
  if (request.families.empty()) throw Error(ErrorCode::BadConfig, "no families requested");

  AnalysisResult result;
  result.request = request;
  result.labels = data.labels();
  result.n = data.n();
  result.observed_mean = mean(data.outcomes());
  if (request.benchmark) {
    const auto idx = data.labels().index_of(*request.benchmark);
    if (!idx) throw Error(ErrorCode::BadLabel, "benchmark label '" + *request.benchmark + "' not in data");
    result.benchmark = *idx;
  }

  const NuisanceFits fits = crossfit_nuisances(data, request.config);
  result.diagnostics = fits.diagnostics;

  for (const auto& spec : request.families) {
    EstimationConfig cfg = request.config;
    cfg.family = spec.tag;
    cfg.delta = spec.delta;
    FamilyResult fr;
    fr.spec = spec;
    fr.estimates = one_step(data, fits, cfg);
    if (ShiftFamily::make(spec.tag, spec.delta).has_zero_curvature()) {
      fr.notes.push_back("f'' = 0: the bias and efficiency theory assumes non-zero curvature");
    }
    for (int b = 0; b < data.arms(); ++b) {
      if (b != result.benchmark) fr.contrasts.push_back(contrast(fr.estimates, result.benchmark, b));
    }
    result.families.push_back(std::move(fr));
  }
  result.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

AnalysisResult run_analysis(const AnalysisRequest& request) {
  const CsvTable table = read_csv(request.input);
  const RawRows raw = select_columns(table, request.treatment, request.outcome, request.covariates);
  return run_analysis(validate_dataset(raw), request);
}

json config_to_json(const AnalysisRequest& request) {
  const EstimationConfig& c = request.config;
  json families = json::array();
  for (const auto& f : request.families) families.push_back({{"tag", to_string(f.tag)}, {"delta", f.delta}});
  return {{"input", request.input},
          {"treatment", request.treatment},
          {"outcome", request.outcome},
          {"covariates", request.covariates},
          {"families", families},
          {"benchmark", request.benchmark ? json(*request.benchmark) : json(nullptr)},
          {"delta", c.delta},
          {"k", c.smoothing_k},
          {"folds", c.folds},
          {"seed", c.seed},
          {"ci_level", c.ci_level},
          {"propensity_floor", c.propensity_floor},
          {"l2_penalty", c.l2_penalty},
          {"max_iterations", c.max_iterations},
          {"gradient_tolerance", c.gradient_tolerance},
          {"outcome_method", to_string(c.outcome_method)}};
}

void apply_config_json(const json& j, AnalysisRequest& request) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "config file must hold a JSON object");
  EstimationConfig& c = request.config;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "input") request.input = value.get<std::string>();
      else if (key == "treatment") request.treatment = value.get<std::string>();
      else if (key == "outcome") request.outcome = value.get<std::string>();
      else if (key == "covariates") request.covariates = value.get<std::vector<std::string>>();
      else if (key == "benchmark") {
        if (value.is_null()) request.benchmark.reset();
        else request.benchmark = value.get<std::string>();
      } else if (key == "delta") c.delta = value.get<double>();
      else if (key == "k") c.smoothing_k = value.get<double>();
      else if (key == "folds") c.folds = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "ci_level") c.ci_level = value.get<double>();
      else if (key == "propensity_floor") c.propensity_floor = value.get<double>();
      else if (key == "l2_penalty") c.l2_penalty = value.get<double>();
      else if (key == "max_iterations") c.max_iterations = value.get<int>();
      else if (key == "gradient_tolerance") c.gradient_tolerance = value.get<double>();
      else if (key == "threads") c.threads = value.get<int>();
      else if (key == "outcome_method") c.outcome_method = parse_outcome_method(value.get<std::string>());
      else if (key == "families") {
        request.families.clear();
        for (const auto& f : value) {
          if (f.is_string()) {
            request.families.push_back(parse_family_spec(f.get<std::string>(), c.delta));
          } else {
            FamilySpec spec = parse_family_spec(f.at("tag").get<std::string>(), c.delta);
            if (f.contains("delta")) spec.delta = f.at("delta").get<double>();
            request.families.push_back(spec);
          }
        }
      } else {
        throw Error(ErrorCode::SchemaError, "unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("config file: ") + e.what());
  }
}

json to_json(const AnalysisResult& result) {
  json label_map = json::array();
  for (int i = 0; i < result.labels.size(); ++i) {
    label_map.push_back({{"index", i + 1}, {"label", result.labels.label(i)}});
  }

  const PositivityDiagnostics& pos = result.diagnostics.positivity;
  json folds = json::array();
  for (const auto& f : result.diagnostics.folds) {
    folds.push_back({{"fold", f.fold},
                     {"converged", f.converged},
                     {"iterations", f.iterations},
                     {"final_gradient_norm", f.final_gradient_norm},
                     {"separation_warning", f.separation_warning}});
  }

  json families = json::array();
  for (const auto& fr : result.families) {
    const EstimateSet& est = fr.estimates;
    json estimates = json::array();
    for (int a = 0; a < result.labels.size(); ++a) {
      estimates.push_back({{"label", result.labels.label(a)},
                           {"psi", est.psi_hat[a]},
                           {"se", est.se[a]},
                           {"ci_lo", est.ci(a, 0)},
                           {"ci_hi", est.ci(a, 1)},
                           {"plug_in", est.plug_in[a]}});
    }
    json contrasts = json::array();
    for (const auto& c : fr.contrasts) {
      contrasts.push_back({{"benchmark", result.labels.label(c.a)},
                           {"label", result.labels.label(c.b)},
                           {"estimate", c.estimate},
                           {"se", c.se},
                           {"ci_lo", c.ci_lo},
                           {"ci_hi", c.ci_hi}});
    }
    json degenerate = json::array();
    for (int a : est.degenerate_variance) degenerate.push_back(result.labels.label(a));
    families.push_back({{"tag", to_string(fr.spec.tag)},
                        {"delta", fr.spec.delta},
                        {"estimates", estimates},
                        {"contrasts", contrasts},
                        {"diagnostics",
                         {{"zero_propensity_cells", pos.zero_cells},
                          {"sub_floor_cells", pos.sub_floor_cells},
                          {"min_pi_hat", pos.min_pi},
                          {"rows_outside_trimmed_set", pos.rows_with_zero},
                          {"trimmed_fraction", pos.trimmed_fraction},
                          {"inconsistent_rows", est.inconsistent_rows},
                          {"degenerate_variance", degenerate}}},
                        {"notes", fr.notes}});
  }

  return {{"schema_version", kSchemaVersion},
          {"kind", "analysis"},
          {"prng", Rng::kAlgorithm},
          {"config", config_to_json(result.request)},
          {"label_map", label_map},
          {"n", result.n},
          {"observed_mean", result.observed_mean},
          {"ci_level", result.request.config.ci_level},
          {"nuisance", {{"folds", folds}, {"notes", result.diagnostics.notes}}},
          {"families", families},
          {"runtime_ms", result.runtime_ms}};
}

json to_json(const SimulationReport& report, double runtime_ms) {
  json gates = json::array();
  for (const auto& g : report.gates) {
    gates.push_back({{"name", g.name}, {"value", g.value}, {"requirement", g.requirement}, {"pass", g.pass}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "experiment"},
          {"experiment", report.experiment},
          {"prng", Rng::kAlgorithm},
          {"seed", report.seed},
          {"config", report.config},
          {"descriptive", report.descriptive},
          {"pass", report.pass()},
          {"gates", gates},
          {"summary", report.summary},
          {"records", report.records},
          {"notes", report.notes},
          {"runtime_ms", runtime_ms}};
}

std::string render_table(const AnalysisResult& result) {
  std::ostringstream os;
  os << "n = " << result.n << ", arms = " << result.labels.size()
     << ", observed mean = " << sig6(result.observed_mean) << '\n';
  const auto& pos = result.diagnostics.positivity;
  os << "zero propensity cells = " << pos.zero_cells << ", below floor = " << pos.sub_floor_cells
     << ", min pi_hat = " << sig6(pos.min_pi) << ", rows outside trimmed set = " << pos.rows_with_zero << '\n';
  const int pct = static_cast<int>(std::lround(result.request.config.ci_level * 100.0));
  for (const auto& fr : result.families) {
    os << '\n' << "[" << spec_label(fr.spec) << "]\n";
    for (const auto& note : fr.notes) os << "note: " << note << '\n';
    std::vector<std::vector<std::string>> rows{
        {"label", "psi", "se", "ci_lo", "ci_hi", "plug_in"}};
    for (int a = 0; a < result.labels.size(); ++a) {
      const auto& e = fr.estimates;
      rows.push_back({result.labels.label(a), sig6(e.psi_hat[a]), sig6(e.se[a]), sig6(e.ci(a, 0)),
                      sig6(e.ci(a, 1)), sig6(e.plug_in[a])});
    }
    os << aligned(rows);
    os << "\ncontrasts vs " << result.labels.label(result.benchmark) << " (benchmark minus label, " << pct
       << "% CI)\n";
    std::vector<std::vector<std::string>> crows{{"label", "estimate", "ci"}};
    for (const auto& c : fr.contrasts) {
      crows.push_back({result.labels.label(c.b), sig6(c.estimate),
                       "[" + sig6(c.ci_lo) + ", " + sig6(c.ci_hi) + "]"});
    }
    os << aligned(crows);
  }
  return os.str();
}

std::string render_table(const SimulationReport& report) {
  std::ostringstream os;
  os << "experiment " << report.experiment << " (seed " << report.seed << ")";
  if (report.descriptive) os << " descriptive";
  os << '\n';
  if (!report.gates.empty()) {
    std::vector<std::vector<std::string>> rows{{"gate", "value", "requirement", "result"}};
    for (const auto& g : report.gates) {
      rows.push_back({g.name, sig6(g.value), g.requirement, g.pass ? "pass" : "FAIL"});
    }
    os << aligned(rows) << '\n';
  }
  if (!report.summary.empty()) {
    std::vector<std::vector<std::string>> srows;
    for (const auto& [k, v] : report.summary) srows.push_back({k, sig6(v)});
    os << aligned(srows);
  }
  constexpr std::size_t kMaxTableRecords = 20;
  if (!report.records.empty() && report.records.size() <= kMaxTableRecords) {
    std::vector<std::vector<std::string>> rrows{{}};
    for (const auto& [k, v] : report.records.front()) rrows.front().push_back(k);
    for (const auto& rec : report.records) {
      std::vector<std::string> row;
      for (const auto& key : rrows.front()) {
        const auto it = rec.find(key);
        row.push_back(it == rec.end() ? "" : sig6(it->second));
      }
      rrows.push_back(std::move(row));
    }
    os << '\n' << aligned(rrows);
  }
  for (const auto& note : report.notes) os << "note: " << note << '\n';
  return os.str();
}

std::string plot_csv(const AnalysisResult& result, const FamilyResult& family) {
  std::ostringstream os;
  os.precision(17);
  os << "label,psi,se,ci_lo,ci_hi,observed_mean\n";
  const auto& e = family.estimates;
  for (int a = 0; a < result.labels.size(); ++a) {
    os << csv_escape(result.labels.label(a)) << ',' << e.psi_hat[a] << ',' << e.se[a] << ',' << e.ci(a, 0) << ','
       << e.ci(a, 1) << ',' << result.observed_mean << '\n';
  }
  return os.str();
}

}  // namespace fairpos
