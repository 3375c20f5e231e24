#pragma once

#include "fairpos/config.hpp"
#include "fairpos/dataset.hpp"
#include "fairpos/matrix.hpp"
#include "fairpos/nuisance.hpp"
#include "fairpos/shift_family.hpp"

#include <span>
#include <utility>
#include <vector>

namespace fairpos {

/// Floor applied to pi_b in the weighted residual when A_i = b. A row that
/// needs it is counted as a nuisance inconsistency.
inline constexpr double kInconsistencyFloor = 1e-12;

// Row-level EIF components. `pi` and `mu` are the d nuisance values of one
// observation, `treatment` its arm index, `outcome` its Y.

/// 1(A = b) / pi_b * (Y - mu_b). Sets *inconsistent when A = b but pi_b is
/// below the floor (the floor is then used in the division).
double eif_mu_term(int treatment, double outcome, int b, double pi_b, double mu_b, bool* inconsistent = nullptr);

/// Influence function of rho_a(A = b | X).
double eif_rho(int treatment, int target, int b, std::span<const double> pi, const ShiftFamily& family);

/// Influence function of the smooth trim score S(X in C_X).
double eif_S(int treatment, std::span<const double> pi, const SmoothingKernel& kernel);

/// Influence function of q_a(A = b | X).
double eif_q(int treatment, int target, int b, std::span<const double> pi, const ShiftFamily& family,
             const SmoothingKernel& kernel);

struct EifRow {
  double phi = 0.0;      // un-centered EIF value
  double plug_in = 0.0;  // sum_b mu_b q_a(b)
  bool inconsistent = false;
};

/// Un-centered EIF of psi_a at one observation. The weighted residual is
/// taken as 0 whenever q_a(b | X) = 0, whatever pi_b is.
EifRow eif_row(int treatment, double outcome, std::span<const double> pi, std::span<const double> mu,
               const ShiftFamily& family, const SmoothingKernel& kernel, int target);

struct EifMatrix {
  RowMatrix phi;      // n x d, column a = phi_a(Z_i)
  RowMatrix plug_in;  // n x d, column a = sum_b mu_b(X_i) q_a(b | X_i)
  long inconsistent_rows = 0;
};

/// Evaluates every target column. Rows are processed in parallel chunks when
/// threads > 1; each entry depends only on its own row.
EifMatrix eif_matrix(std::span<const int> treatments, std::span<const double> outcomes, const RowMatrix& pi,
                     const RowMatrix& mu, const ShiftFamily& family, const SmoothingKernel& kernel,
                     int threads = 1);

/// Single column for one target.
Vector eif_psi(const Dataset& data, const NuisanceFits& nuisances, const ShiftFamily& family,
               const SmoothingKernel& kernel, int target);

struct EstimateSet {
  Vector psi_hat;
  Matrix sigma_hat;  // empirical covariance of the EIF columns
  Vector se;
  Matrix ci;         // d x 2
  Vector plug_in;
  std::size_t n = 0;
  double ci_level = 0.95;
  double critical_value = 0.0;
  long inconsistent_rows = 0;
  std::vector<int> degenerate_variance;  // arms whose CI collapsed to a point
};

/// One-step estimator from an EIF matrix: column means, covariance, Wald CIs.
EstimateSet summarize_eif(const EifMatrix& eif, double ci_level);

EstimateSet one_step(std::span<const int> treatments, std::span<const double> outcomes, const RowMatrix& pi,
                     const RowMatrix& mu, const ShiftFamily& family, const SmoothingKernel& kernel,
                     double ci_level, int threads = 1);
EstimateSet one_step(const Dataset& data, const NuisanceFits& nuisances, const EstimationConfig& config);

/// P_n { sum_b mu_b(X) q_a(b | X) } for every target.
Vector plugin(const Dataset& data, const NuisanceFits& nuisances, const EstimationConfig& config);

struct Contrast {
  int a = 0;
  int b = 0;
  double estimate = 0.0;  // psi_a - psi_b
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

/// psi_a - psi_b with variance (e_a - e_b)' Sigma (e_a - e_b) / n.
Contrast contrast(const EstimateSet& estimates, int a, int b);

/// Column mean and covariance helpers with deterministic reduction order.
Vector column_means(const RowMatrix& m);
Matrix column_covariance(const RowMatrix& m, const Vector& means);

}  // namespace fairpos
