#pragma once

#include "fairpos/matrix.hpp"
#include "fairpos/shift_family.hpp"

#include <span>
#include <vector>

namespace fairpos {

enum class PropensitySource { estimated, oracle };

/// n x d matrix of generalized propensity scores pi_b(X_i).
class PropensityMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-10;

  /// Throws NonFinite / BadConfig when entries leave [0, 1] or a row does not
  /// sum to one.
  PropensityMatrix(RowMatrix values, PropensitySource source);

  const RowMatrix& values() const { return values_; }
  PropensitySource source() const { return source_; }
  Eigen::Index rows() const { return values_.rows(); }
  int arms() const { return static_cast<int>(values_.cols()); }
  std::span<const double> row(Eigen::Index i) const { return row_span(values_, i); }

 private:
  RowMatrix values_;
  PropensitySource source_;
};

/// Interventional propensities for one target arm.
struct InterventionalPropensities {
  int target = 0;
  RowMatrix q;        // q_a(A = b | X_i)
  Vector trim_score;  // S(X_i in C_X)
  RowMatrix rho;      // rho_a(A = b | X_i)
};

// Row kernels shared by the matrix operations, the EIF and the exact oracles.

/// rho_a(b) = f(pi_b) for b != a; the target takes the remaining mass.
void rho_row(std::span<const double> pi, const ShiftFamily& family, int target, std::span<double> out);

/// S = prod_b s(pi_b). Exactly zero whenever some pi_b is zero.
double trim_score_row(std::span<const double> pi, const SmoothingKernel& kernel);

/// q = S rho + (1 - S) pi.
void q_row(std::span<const double> pi, std::span<const double> rho, double trim, std::span<double> out);

RowMatrix rho(const PropensityMatrix& pi, const ShiftFamily& family, int target);
Vector smooth_trim_score(const PropensityMatrix& pi, const SmoothingKernel& kernel);
InterventionalPropensities interventional_propensity(const PropensityMatrix& pi, const ShiftFamily& family,
                                                     const SmoothingKernel& kernel, int target);

// Fairness predicates evaluated over the sample. Reports carry the worst
// offenders rather than throwing.

struct Property1Report {
  struct Target {
    int target = 0;
    double min_target_gain = 0.0;      // min_i q_a(a) - pi_a
    double max_target_gain = 0.0;      // max_i q_a(a) - pi_a
    double max_nontarget_excess = 0.0; // max_{i, b != a} q_a(b) - pi_b
    long strict_rows = 0;              // rows with q_a(a) - pi_a > strict tolerance
    bool pass = false;
  };
  std::vector<Target> targets;
  bool pass = false;
};

struct Property2Report {
  int target_a = 0;
  int target_b = 0;
  double max_abs_diff = 0.0;
  Eigen::Index worst_row = -1;
  int worst_column = -1;
  bool vacuous = false;
  bool pass = false;
};

struct QWeakPositivityReport {
  long zero_cells = 0;
  long violations = 0;
  double max_violating_mass = 0.0;
  bool vacuous = false;
  bool pass = false;
};

inline constexpr double kInequalitySlack = 1e-10;
inline constexpr double kEqualityTolerance = 1e-12;
inline constexpr double kStrictIncrease = 1e-10;

Property1Report check_property_1(const std::vector<InterventionalPropensities>& per_target,
                                 const PropensityMatrix& pi);
Property2Report check_property_2(const InterventionalPropensities& qa, const InterventionalPropensities& qb);
QWeakPositivityReport check_q_weak_positivity(const RowMatrix& q, const PropensityMatrix& pi);

}  // namespace fairpos
