#pragma once

#include "fairpos/config.hpp"
#include "fairpos/dataset.hpp"
#include "fairpos/folds.hpp"
#include "fairpos/interventions.hpp"
#include "fairpos/matrix.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fairpos {

/// Per-column centering and scaling applied inside the fitters.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

/// Multinomial logistic model. Coefficients are stored on the original
/// covariate scale as a d x (p + 1) matrix whose last column is the
/// intercept; row 0 is the reference class and is identically zero.
struct PropensityModel {
  Matrix coefficients;
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  bool separation_warning = false;
  std::vector<double> objective_trace;  // penalized mean log-likelihood per iteration

  RowMatrix predict(const Matrix& x) const;
};

struct PropensityFitOptions {
  double l2_penalty = 1e-4;
  int max_iterations = 10000;
  double gradient_tolerance = 1e-8;
};

/// Maximizes the L2-penalized multinomial log-likelihood by damped Newton
/// steps with backtracking, so the objective never decreases. Throws EmptyArm
/// when some arm has no training row.
PropensityModel fit_propensity(const Matrix& x, const std::vector<int>& treatments, int arms,
                               const PropensityFitOptions& options = {});
PropensityModel fit_propensity(const Dataset& train, const EstimationConfig& config);

struct LinearArmModel {
  Vector coefficients;  // p slopes then intercept, original scale
};

struct KnnArmModel {
  Standardizer standardizer;
  Matrix points;  // standardized training covariates
  Vector outcomes;
  std::size_t neighbors = 1;
};

struct OutcomeModel {
  int arm = 0;
  std::variant<LinearArmModel, KnnArmModel> model;

  Vector predict(const Matrix& x) const;
};

OutcomeModel fit_outcome(const Matrix& x, const Vector& y, const std::vector<int>& treatments, int arm,
                         OutcomeMethod method);
OutcomeModel fit_outcome(const Dataset& train, int arm, OutcomeMethod method);

struct FoldDiagnostics {
  int fold = 0;
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  bool separation_warning = false;
};

/// Positivity summary of an out-of-fold propensity matrix.
struct PositivityDiagnostics {
  long zero_cells = 0;
  long sub_floor_cells = 0;
  double min_pi = 1.0;
  long rows_with_zero = 0;      // rows outside the trimmed set
  double trimmed_fraction = 0;  // share of rows with every pi_b > 0
  bool strong_positivity = false;  // every cell >= floor
  bool weak_positivity = false;    // no exact zero
};

PositivityDiagnostics summarize_positivity(const RowMatrix& pi, double floor);

struct NuisanceDiagnostics {
  std::vector<FoldDiagnostics> folds;
  PositivityDiagnostics positivity;
  std::vector<std::string> notes;
};

struct NuisanceFits {
  PropensityMatrix pi_hat;
  RowMatrix mu_hat;
  FoldAssignment folds;
  NuisanceDiagnostics diagnostics;
};

/// Out-of-fold nuisance predictions. Each fold's rows are predicted by models
/// trained on the other folds only. Throws FoldArmEmpty when a training
/// complement misses an arm.
NuisanceFits crossfit_nuisances(const Dataset& data, const EstimationConfig& config);

/// Pass-through for known nuisances; no fitting takes place.
NuisanceFits oracle_nuisances(RowMatrix pi, RowMatrix mu, double propensity_floor = 1e-8);

/// Per-cell error directions used by the rate experiments.
struct ErrorDirections {
  RowMatrix pi_direction;  // in [-1, 1]
  RowMatrix mu_direction;
};

/// Systematic nuisance corruption of size epsilon:
///   pi~ = normalize(pi * (1 + epsilon * eta)),  mu~ = mu + epsilon * eta'.
/// The multiplicative form keeps exact zeros at zero, so the trimming
/// mechanism still sees the true positivity pattern. Requires epsilon < 1.
std::pair<RowMatrix, RowMatrix> corrupt_nuisances(const RowMatrix& pi, const RowMatrix& mu,
                                                  const ErrorDirections& directions, double epsilon);

}  // namespace fairpos
