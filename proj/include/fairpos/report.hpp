#pragma once

#include "fairpos/config.hpp"
#include "fairpos/dataset.hpp"
#include "fairpos/estimator.hpp"
#include "fairpos/experiments.hpp"
#include "fairpos/nuisance.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace fairpos {

inline constexpr const char* kSchemaVersion = "1.0.0";

struct FamilySpec {
  FamilyTag tag = FamilyTag::tsm;
  double delta = 0.5;
};

/// "tsm", "identity", "multiplicative", "exp_tilt:0.9", ... A tag without a
/// delta takes `default_delta`.
FamilySpec parse_family_spec(const std::string& text, double default_delta);

/// Trimmed TSM, multiplicative shifts at 0.9 and 0.5, exponential tilts at
/// 0.9 and 0.5.
std::vector<FamilySpec> default_family_specs();

struct AnalysisRequest {
  std::string input;
  std::string treatment;
  std::string outcome;
  std::vector<std::string> covariates;
  std::vector<FamilySpec> families = default_family_specs();
  std::optional<std::string> benchmark;  // defaults to the first label
  EstimationConfig config;
};

struct FamilyResult {
  FamilySpec spec;
  EstimateSet estimates;
  std::vector<Contrast> contrasts;  // benchmark minus each other label
  std::vector<std::string> notes;
};

struct AnalysisResult {
  AnalysisRequest request;
  LabelMap labels;
  std::size_t n = 0;
  double observed_mean = 0.0;
  int benchmark = 0;
  NuisanceDiagnostics diagnostics;
  std::vector<FamilyResult> families;
  double runtime_ms = 0.0;
};

/// Nuisances are cross-fitted once and shared by every family section.
AnalysisResult run_analysis(const Dataset& data, const AnalysisRequest& request);
/// Reads the CSV named in the request first.
AnalysisResult run_analysis(const AnalysisRequest& request);

nlohmann::json config_to_json(const AnalysisRequest& request);
/// Applies the keys present in `j` over `request` (unknown keys: SchemaError).
void apply_config_json(const nlohmann::json& j, AnalysisRequest& request);

nlohmann::json to_json(const AnalysisResult& result);
nlohmann::json to_json(const SimulationReport& report, double runtime_ms = 0.0);

/// Aligned plain-text tables with 6 significant digits.
std::string render_table(const AnalysisResult& result);
std::string render_table(const SimulationReport& report);

/// label, psi, se, ci_lo, ci_hi, observed_mean; one file per family.
std::string plot_csv(const AnalysisResult& result, const FamilyResult& family);
std::string family_slug(const FamilySpec& spec);

}  // namespace fairpos
