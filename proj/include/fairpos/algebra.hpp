#pragma once

#include <span>
#include <utility>

namespace fairpos {

/// Both sides of the product-difference identity behind the remainder of the
/// trim-score EIF:
///
///   lhs = sum_j (b_j - a_j) prod_{l != j} a_l + prod_l a_l - prod_l b_l
///   rhs = sum_{j >= 2} (b_j - a_j) (prod_{l < j} a_l - prod_{l < j} b_l) prod_{l > j} a_l
///
/// Throws LengthMismatch for unequal lengths and BadConfig for length < 2.
std::pair<double, double> telescoping_identity(std::span<const double> a, std::span<const double> b);

}  // namespace fairpos
