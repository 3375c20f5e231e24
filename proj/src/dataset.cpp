#include "fairpos/dataset.hpp"

#include "fairpos/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

namespace fairpos {

namespace {

std::optional<long long> parse_integer(const std::string& text) {
  long long value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return value;
}

}  // namespace

LabelMap::LabelMap(std::vector<std::string> ordered_labels) : labels_(std::move(ordered_labels)) {
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) throw Error(ErrorCode::BadLabel, "duplicate treatment label");
}

LabelMap LabelMap::from_observed(const std::vector<std::string>& labels) {
  std::vector<std::string> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  const bool numeric = std::all_of(distinct.begin(), distinct.end(),
                                   [](const std::string& s) { return parse_integer(s).has_value(); });
  if (numeric) {
    std::stable_sort(distinct.begin(), distinct.end(), [](const std::string& x, const std::string& y) {
      return *parse_integer(x) < *parse_integer(y);
    });
  }
  return LabelMap(std::move(distinct));
}

LabelMap LabelMap::identity(int arms) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(arms));
  for (int b = 1; b <= arms; ++b) labels.push_back(std::to_string(b));
  return LabelMap(std::move(labels));
}

const std::string& LabelMap::label(int index) const {
  if (index < 0 || index >= size()) throw Error(ErrorCode::BadLabel, "arm index out of range");
  return labels_[static_cast<std::size_t>(index)];
}

std::optional<int> LabelMap::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<int>(it - labels_.begin());
}

Dataset::Dataset(Unchecked, Matrix covariates, std::vector<int> treatments, Vector outcomes, LabelMap labels)
    : covariates_(std::move(covariates)),
      treatments_(std::move(treatments)),
      outcomes_(std::move(outcomes)),
      labels_(std::move(labels)) {}

Dataset::Dataset(Matrix covariates, std::vector<int> treatments, Vector outcomes, LabelMap labels)
    : Dataset(Unchecked{}, std::move(covariates), std::move(treatments), std::move(outcomes), std::move(labels)) {
  const std::size_t n = treatments_.size();
  if (static_cast<std::size_t>(covariates_.rows()) != n || static_cast<std::size_t>(outcomes_.size()) != n) {
    throw Error(ErrorCode::LengthMismatch, "covariates, treatments and outcomes must have the same row count");
  }
  if (n == 0) throw Error(ErrorCode::TooFewRows, "dataset has no rows");
  const int d = labels_.size();
  if (d < 1) throw Error(ErrorCode::EmptyArm, "no treatment labels");
  if (!covariates_.allFinite()) throw Error(ErrorCode::NonFinite, "covariates contain NaN or infinity");
  if (!outcomes_.allFinite()) throw Error(ErrorCode::NonFinite, "outcomes contain NaN or infinity");

  std::vector<std::size_t> counts(static_cast<std::size_t>(d), 0);
  for (int a : treatments_) {
    if (a < 0 || a >= d) throw Error(ErrorCode::BadLabel, "treatment index out of range");
    ++counts[static_cast<std::size_t>(a)];
  }
  for (int b = 0; b < d; ++b) {
    if (counts[static_cast<std::size_t>(b)] == 0) {
      throw Error(ErrorCode::EmptyArm, "treatment label '" + labels_.label(b) + "' has no rows");
    }
  }
  if (2 * static_cast<std::size_t>(d) > n + 1) {
    throw Error(ErrorCode::ArityTooLarge,
                std::to_string(d) + " arms exceed half of " + std::to_string(n) + " rows");
  }
}

std::vector<std::size_t> Dataset::arm_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(arms()), 0);
  for (int a : treatments_) ++counts[static_cast<std::size_t>(a)];
  return counts;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Matrix x(static_cast<Eigen::Index>(rows.size()), covariates_.cols());
  std::vector<int> a(rows.size());
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(rows[r]);
    x.row(static_cast<Eigen::Index>(r)) = covariates_.row(i);
    a[r] = treatments_[rows[r]];
    y[static_cast<Eigen::Index>(r)] = outcomes_[i];
  }
  return Dataset(Unchecked{}, std::move(x), std::move(a), std::move(y), labels_);
}

Dataset validate_dataset(const RawRows& rows) {
  const std::size_t n = rows.treatments.size();
  if (rows.outcomes.size() != n || static_cast<std::size_t>(rows.covariates.rows()) != n) {
    throw Error(ErrorCode::LengthMismatch, "covariates, treatments and outcomes must have the same row count");
  }

  LabelMap labels;
  if (rows.declared_labels.empty()) {
    labels = LabelMap::from_observed(rows.treatments);
  } else {
    labels = LabelMap::from_observed(rows.declared_labels);
    for (const auto& t : rows.treatments) {
      if (!labels.index_of(t)) throw Error(ErrorCode::BadLabel, "label '" + t + "' is not declared");
    }
  }

  std::vector<int> treatments(n);
  for (std::size_t i = 0; i < n; ++i) treatments[i] = *labels.index_of(rows.treatments[i]);

  Vector outcomes = Eigen::Map<const Vector>(rows.outcomes.data(), static_cast<Eigen::Index>(n));
  return Dataset(rows.covariates, std::move(treatments), std::move(outcomes), std::move(labels));
}

}  // namespace fairpos
