#include "fairpos/config.hpp"

#include "fairpos/error.hpp"

#include <cmath>
#include <string>

namespace fairpos {

std::string_view to_string(OutcomeMethod method) {
  return method == OutcomeMethod::linear ? "linear" : "knn";
}

OutcomeMethod parse_outcome_method(std::string_view text) {
  if (text == "linear") return OutcomeMethod::linear;
  if (text == "knn") return OutcomeMethod::knn;
  throw Error(ErrorCode::BadConfig, "unknown outcome method '" + std::string(text) + "'");
}

void EstimationConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::BadConfig, what); };
  if (!(delta >= 0.0 && delta <= 1.0)) fail("delta must lie in [0, 1]");
  if (!(smoothing_k > 0.0) || !std::isfinite(smoothing_k)) fail("smoothing k must be positive");
  if (folds < 2) fail("folds must be at least 2");
  if (!(ci_level > 0.0 && ci_level < 1.0)) fail("ci level must lie in (0, 1)");
  if (!(propensity_floor > 0.0)) fail("propensity floor must be positive");
  if (!(l2_penalty >= 0.0)) fail("l2 penalty must be non-negative");
  if (max_iterations < 1) fail("max iterations must be positive");
  if (!(gradient_tolerance > 0.0)) fail("gradient tolerance must be positive");
  if (threads < 1) fail("threads must be at least 1");
  if (family == FamilyTag::custom) fail("custom families are supplied through the library API");
}

}  // namespace fairpos
