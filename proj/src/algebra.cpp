#include "fairpos/algebra.hpp"

#include "fairpos/error.hpp"

namespace fairpos {

std::pair<double, double> telescoping_identity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "sequences differ in length");
  const std::size_t d = a.size();
  if (d < 2) throw Error(ErrorCode::BadConfig, "identity needs sequences of length at least 2");

  double lhs = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double others = 1.0;
    for (std::size_t l = 0; l < d; ++l) {
      if (l != j) others *= a[l];
    }
    lhs += (b[j] - a[j]) * others;
  }
  double prod_a = 1.0, prod_b = 1.0;
  for (std::size_t l = 0; l < d; ++l) {
    prod_a *= a[l];
    prod_b *= b[l];
  }
  lhs += prod_a - prod_b;

  double rhs = 0.0;
  for (std::size_t j = 1; j < d; ++j) {
    double before_a = 1.0, before_b = 1.0, after_a = 1.0;
    for (std::size_t l = 0; l < j; ++l) {
      before_a *= a[l];
      before_b *= b[l];
    }
    for (std::size_t l = j + 1; l < d; ++l) after_a *= a[l];
    rhs += (b[j] - a[j]) * (before_a - before_b) * after_a;
  }
  return {lhs, rhs};
}

}  // namespace fairpos
