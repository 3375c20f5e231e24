#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fairpos {

struct FoldAssignment {
  int folds = 0;
  std::vector<int> fold_of;  // length n, values in 0..folds-1

  std::size_t n() const { return fold_of.size(); }
  std::vector<std::size_t> members(int fold) const;
  std::vector<std::size_t> complement(int fold) const;
  std::vector<std::size_t> sizes() const;

  friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;
};

/// Seeded permutation cut into contiguous blocks whose sizes differ by at
/// most one. Throws TooFewRows when n < folds.
FoldAssignment split_folds(std::size_t n, int folds, std::uint64_t seed);

}  // namespace fairpos
