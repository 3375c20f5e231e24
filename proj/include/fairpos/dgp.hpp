#pragma once

#include "fairpos/dataset.hpp"
#include "fairpos/matrix.hpp"
#include "fairpos/nuisance.hpp"
#include "fairpos/shift_family.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fairpos {

/// Data-generating process with finite support, so every functional is an
/// exact finite sum. The outcome in cell (x, b) takes the value y_lo or y_hi,
/// the latter with probability w_hi.
struct DiscreteDgp {
  std::string name;
  Matrix atoms;       // m x p covariate values (used when sampling datasets)
  Vector probs;       // m
  RowMatrix pi;       // m x d, zeros allowed
  RowMatrix y_lo;     // m x d
  RowMatrix y_hi;     // m x d
  RowMatrix w_hi;     // m x d, in [0, 1]
  std::vector<std::string> labels;  // optional external labels

  /// Y = mu -/+ sqrt(variance), each with probability 1/2.
  static DiscreteDgp symmetric(std::string name, Matrix atoms, Vector probs, RowMatrix pi, const RowMatrix& mu,
                               const RowMatrix& variance);
  /// Y in {0, 1} with P(Y = 1) = mu.
  static DiscreteDgp bernoulli(std::string name, Matrix atoms, Vector probs, RowMatrix pi, const RowMatrix& mu);

  int m() const { return static_cast<int>(probs.size()); }
  int arms() const { return static_cast<int>(pi.cols()); }
  RowMatrix mu() const;
  double mu(int atom, int arm) const;

  /// Throws BadConfig if probabilities or propensity rows do not sum to one,
  /// or if fair_comparable and some arm has zero propensity on every atom.
  void validate(bool fair_comparable = false) const;

  /// E(Y) under the observational distribution.
  double observed_mean() const;
  /// P(all pi_b(X) > 0).
  double trimmed_mass() const;
  bool in_trimmed_set(int atom) const;
};

/// psi_a = sum_x p(x) sum_b mu_b(x) q_a(b | x).
double true_functional(const DiscreteDgp& dgp, const ShiftFamily& family, const SmoothingKernel& kernel,
                       int target);

/// E_P[phi_a(Z)] of the un-centered EIF at the true nuisances, by summing
/// over every support point (x, b, y).
double enumerate_eif_mean(const DiscreteDgp& dgp, const ShiftFamily& family, const SmoothingKernel& kernel,
                          int target);

/// psi_a for the known-trim estimand E{mu_a 1(C)} + E{Y 1(not C)}.
double known_trim_functional(const DiscreteDgp& dgp, int target);

/// E[mu_a(X) | A = a], the indirect-standardization style comparator.
double smr_comparator(const DiscreteDgp& dgp, int arm);

struct SampledData {
  Matrix covariates;
  std::vector<int> treatments;
  Vector outcomes;
  std::vector<int> atom_of;
  RowMatrix pi;  // oracle nuisances evaluated at each row's atom
  RowMatrix mu;

  std::size_t n() const { return treatments.size(); }
  /// Validated Dataset (throws EmptyArm if an arm was never drawn).
  Dataset to_dataset(const std::vector<std::string>& labels = {}) const;
  NuisanceFits oracle() const;
};

/// n iid draws; throws TooFewRows when n == 0.
SampledData sample(const DiscreteDgp& dgp, std::size_t n, std::uint64_t seed);

/// Mixture (1 - t) P + t delta_z0 where z0 = (atom, arm, support point).
DiscreteDgp point_mass_mixture(const DiscreteDgp& dgp, int atom, int arm, int support_index, double t);

// Library of processes used by the tests, experiments and the CLI.
namespace dgps {
DiscreteDgp positivity_violation();    // d = 3, several atoms outside the trimmed set
DiscreteDgp intermediate_positivity(); // d = 3, every pi_b >= 0.1
DiscreteDgp two_atom();                // d = 2, strictly positive
DiscreteDgp four_arm_mixed();          // d = 4, scattered zeros
DiscreteDgp constant_outcome(double c);
DiscreteDgp no_overlap();              // no atom has every pi_b > 0
DiscreteDgp exchangeable_pair();       // arms 0 and 1 exchangeable, d = 3
DiscreteDgp provider_synthetic();      // d = 10 with string labels, binary outcome
std::vector<DiscreteDgp> eif_suite();  // the >= 5 processes used for EIF checks
}  // namespace dgps

}  // namespace fairpos
