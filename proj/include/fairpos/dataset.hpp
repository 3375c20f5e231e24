#pragma once

#include "fairpos/matrix.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace fairpos {

/// Bidirectional map between external treatment labels and internal arm
/// indices 0..d-1. Labels that all parse as integers are ordered numerically,
/// otherwise lexicographically.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::string> ordered_labels);

  static LabelMap from_observed(const std::vector<std::string>& labels);
  static LabelMap identity(int arms);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int index) const;
  std::optional<int> index_of(const std::string& label) const;
  const std::vector<std::string>& labels() const { return labels_; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::vector<std::string> labels_;
};

/// Unvalidated rows as they come out of ingestion.
struct RawRows {
  Matrix covariates;                     // n x p
  std::vector<std::string> treatments;   // external labels
  std::vector<double> outcomes;
  // Optional declared label universe; a declared label with no rows is an
  // EmptyArm error.
  std::vector<std::string> declared_labels;
};

/// Observed data (X, A, Y) with treatments re-indexed to 0..d-1.
class Dataset {
 public:
  /// Validates every invariant; throws fairpos::Error.
  Dataset(Matrix covariates, std::vector<int> treatments, Vector outcomes, LabelMap labels);

  std::size_t n() const { return treatments_.size(); }
  std::size_t p() const { return static_cast<std::size_t>(covariates_.cols()); }
  int arms() const { return labels_.size(); }

  const Matrix& covariates() const { return covariates_; }
  const std::vector<int>& treatments() const { return treatments_; }
  const Vector& outcomes() const { return outcomes_; }
  const LabelMap& labels() const { return labels_; }

  std::vector<std::size_t> arm_counts() const;

  /// Rows selected by index, in the given order. Arm coverage is not
  /// re-checked: training subsets are validated by the fitters.
  Dataset subset(const std::vector<std::size_t>& rows) const;

 private:
  struct Unchecked {};
  Dataset(Unchecked, Matrix covariates, std::vector<int> treatments, Vector outcomes, LabelMap labels);

  Matrix covariates_;
  std::vector<int> treatments_;
  Vector outcomes_;
  LabelMap labels_;
};

Dataset validate_dataset(const RawRows& rows);

}  // namespace fairpos
