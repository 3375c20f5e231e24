#include "fairpos/folds.hpp"

#include "fairpos/error.hpp"
#include "fairpos/rng.hpp"

namespace fairpos {

std::vector<std::size_t> FoldAssignment::members(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldAssignment::complement(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldAssignment::sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(folds), 0);
  for (int f : fold_of) ++out[static_cast<std::size_t>(f)];
  return out;
}

FoldAssignment split_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::BadConfig, "cross-fitting needs at least 2 folds");
  if (n < static_cast<std::size_t>(folds)) {
    throw Error(ErrorCode::TooFewRows, std::to_string(n) + " rows cannot fill " + std::to_string(folds) + " folds");
  }
  Rng rng(seed);
  const auto perm = rng.permutation(n);
  FoldAssignment out{folds, std::vector<int>(n, 0)};
  for (std::size_t pos = 0; pos < n; ++pos) {
    out.fold_of[perm[pos]] = static_cast<int>(pos * static_cast<std::size_t>(folds) / n);
  }
  return out;
}

}  // namespace fairpos
