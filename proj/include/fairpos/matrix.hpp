#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace fairpos {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// n x d per-row quantities (propensities, outcome regressions, EIF values)
// are stored row-major so each observation is a contiguous span.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const RowMatrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<double> row_span(RowMatrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

// Pairwise (cascade) summation with a fixed tree shape: the result depends
// only on the values and their order, never on how work was scheduled.
double pairwise_sum(std::span<const double> values);

}  // namespace fairpos
