#include "fairpos/interventions.hpp"

#include "fairpos/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fairpos {

PropensityMatrix::PropensityMatrix(RowMatrix values, PropensitySource source)
    : values_(std::move(values)), source_(source) {
  if (!values_.allFinite()) throw Error(ErrorCode::NonFinite, "propensity matrix has non-finite entries");
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    double total = 0.0;
    for (double v : row_span(values_, i)) {
      if (v < 0.0 || v > 1.0) {
        throw Error(ErrorCode::BadConfig, "propensity outside [0, 1] in row " + std::to_string(i));
      }
      total += v;
    }
    if (std::abs(total - 1.0) > kRowSumTolerance) {
      throw Error(ErrorCode::BadConfig, "propensity row " + std::to_string(i) + " does not sum to one");
    }
  }
}

void rho_row(std::span<const double> pi, const ShiftFamily& family, int target, std::span<double> out) {
  const std::size_t d = pi.size();
  const auto a = static_cast<std::size_t>(target);
  double shifted = 0.0;
  for (std::size_t b = 0; b < d; ++b) {
    if (b == a) continue;
    out[b] = family.eval(pi[b], 0);
    shifted += out[b];
  }
  const double remaining = 1.0 - shifted;
  if (remaining < -kInequalitySlack) {
    throw Error(ErrorCode::NegativeTargetMass,
                "non-target mass " + std::to_string(shifted) + " exceeds one; family is not admissible");
  }
  out[a] = remaining;
}

double trim_score_row(std::span<const double> pi, const SmoothingKernel& kernel) {
  double score = 1.0;
  for (double v : pi) score *= kernel.eval(v, 0);
  return score;
}

void q_row(std::span<const double> pi, std::span<const double> rho, double trim, std::span<double> out) {
  if (trim == 0.0) {
    std::copy(pi.begin(), pi.end(), out.begin());
    return;
  }
  for (std::size_t b = 0; b < pi.size(); ++b) out[b] = trim * rho[b] + (1.0 - trim) * pi[b];
}

RowMatrix rho(const PropensityMatrix& pi, const ShiftFamily& family, int target) {
  if (target < 0 || target >= pi.arms()) throw Error(ErrorCode::BadLabel, "target arm out of range");
  RowMatrix out(pi.rows(), pi.arms());
  for (Eigen::Index i = 0; i < pi.rows(); ++i) rho_row(pi.row(i), family, target, row_span(out, i));
  return out;
}

Vector smooth_trim_score(const PropensityMatrix& pi, const SmoothingKernel& kernel) {
  Vector out(pi.rows());
  for (Eigen::Index i = 0; i < pi.rows(); ++i) out[i] = trim_score_row(pi.row(i), kernel);
  return out;
}

InterventionalPropensities interventional_propensity(const PropensityMatrix& pi, const ShiftFamily& family,
                                                     const SmoothingKernel& kernel, int target) {
  InterventionalPropensities out;
  out.target = target;
  out.rho = rho(pi, family, target);
  out.trim_score = smooth_trim_score(pi, kernel);
  out.q.resize(pi.rows(), pi.arms());
  for (Eigen::Index i = 0; i < pi.rows(); ++i) {
    q_row(pi.row(i), row_span(out.rho, i), out.trim_score[i], row_span(out.q, i));
  }
  return out;
}

Property1Report check_property_1(const std::vector<InterventionalPropensities>& per_target,
                                 const PropensityMatrix& pi) {
  Property1Report report;
  report.pass = !per_target.empty();
  const RowMatrix& p = pi.values();
  for (const auto& ip : per_target) {
    Property1Report::Target t;
    t.target = ip.target;
    t.min_target_gain = std::numeric_limits<double>::infinity();
    t.max_target_gain = -std::numeric_limits<double>::infinity();
    t.max_nontarget_excess = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double gain = ip.q(i, ip.target) - p(i, ip.target);
      t.min_target_gain = std::min(t.min_target_gain, gain);
      t.max_target_gain = std::max(t.max_target_gain, gain);
      if (gain > kStrictIncrease) ++t.strict_rows;
      for (Eigen::Index b = 0; b < p.cols(); ++b) {
        if (b == ip.target) continue;
        t.max_nontarget_excess = std::max(t.max_nontarget_excess, ip.q(i, b) - p(i, b));
      }
    }
    if (p.cols() == 1) t.max_nontarget_excess = 0.0;
    t.pass = t.min_target_gain >= -kInequalitySlack && t.strict_rows > 0 &&
             t.max_nontarget_excess <= kInequalitySlack;
    report.pass = report.pass && t.pass;
    report.targets.push_back(t);
  }
  return report;
}

Property2Report check_property_2(const InterventionalPropensities& qa, const InterventionalPropensities& qb) {
  if (qa.q.rows() != qb.q.rows() || qa.q.cols() != qb.q.cols()) {
    throw Error(ErrorCode::LengthMismatch, "interventional propensities are not aligned");
  }
  Property2Report report;
  report.target_a = qa.target;
  report.target_b = qb.target;
  report.vacuous = true;
  for (Eigen::Index c = 0; c < qa.q.cols(); ++c) {
    if (c == qa.target || c == qb.target) continue;
    report.vacuous = false;
    for (Eigen::Index i = 0; i < qa.q.rows(); ++i) {
      const double diff = std::abs(qa.q(i, c) - qb.q(i, c));
      if (diff > report.max_abs_diff || report.worst_row < 0) {
        report.max_abs_diff = diff;
        report.worst_row = i;
        report.worst_column = static_cast<int>(c);
      }
    }
  }
  report.pass = report.max_abs_diff <= kEqualityTolerance;
  return report;
}

QWeakPositivityReport check_q_weak_positivity(const RowMatrix& q, const PropensityMatrix& pi) {
  if (q.rows() != pi.rows() || q.cols() != pi.arms()) {
    throw Error(ErrorCode::LengthMismatch, "q and pi are not aligned");
  }
  QWeakPositivityReport report;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index b = 0; b < q.cols(); ++b) {
      if (pi.values()(i, b) != 0.0) continue;
      ++report.zero_cells;
      if (q(i, b) != 0.0) {
        ++report.violations;
        report.max_violating_mass = std::max(report.max_violating_mass, std::abs(q(i, b)));
      }
    }
  }
  report.vacuous = report.zero_cells == 0;
  report.pass = report.violations == 0;
  return report;
}

}  // namespace fairpos
