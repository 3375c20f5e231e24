#pragma once

#include "fairpos/shift_family.hpp"

#include <cstdint>
#include <string_view>

namespace fairpos {

enum class OutcomeMethod { linear, knn };

std::string_view to_string(OutcomeMethod method);
OutcomeMethod parse_outcome_method(std::string_view text);

struct EstimationConfig {
  FamilyTag family = FamilyTag::tsm;
  double delta = 0.5;
  double smoothing_k = 100.0;
  int folds = 2;
  std::uint64_t seed = 0;
  double ci_level = 0.95;
  double propensity_floor = 1e-8;  // diagnostics only; never used to clip
  double l2_penalty = 1e-4;
  int max_iterations = 10000;
  double gradient_tolerance = 1e-8;
  OutcomeMethod outcome_method = OutcomeMethod::linear;
  int threads = 1;

  /// Throws BadConfig on any out-of-range field.
  void validate() const;

  ShiftFamily shift_family() const { return ShiftFamily::make(family, delta); }
  SmoothingKernel kernel() const { return SmoothingKernel(smoothing_k); }
};

}  // namespace fairpos
