#include "fairpos/shift_family.hpp"

#include "fairpos/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fairpos {

std::string_view to_string(FamilyTag tag) {
  switch (tag) {
    case FamilyTag::tsm: return "tsm";
    case FamilyTag::multiplicative: return "multiplicative";
    case FamilyTag::exp_tilt: return "exp_tilt";
    case FamilyTag::identity: return "identity";
    case FamilyTag::custom: return "custom";
  }
  return "unknown";
}

FamilyTag parse_family_tag(std::string_view text) {
  if (text == "tsm") return FamilyTag::tsm;
  if (text == "multiplicative") return FamilyTag::multiplicative;
  if (text == "exp_tilt") return FamilyTag::exp_tilt;
  if (text == "identity") return FamilyTag::identity;
  if (text == "custom") return FamilyTag::custom;
  throw Error(ErrorCode::BadConfig, "unknown shift family '" + std::string(text) + "'");
}

namespace {

void check_delta(double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw Error(ErrorCode::BadConfig, "delta must lie in [0, 1]");
}

void check_order(int order) {
  if (order < 0 || order > 2) throw Error(ErrorCode::BadOrder, "derivative order must be 0, 1 or 2");
}

}  // namespace

ShiftFamily::ShiftFamily(FamilyTag tag, double delta, std::string name)
    : tag_(tag), delta_(delta), name_(std::move(name)) {}

ShiftFamily ShiftFamily::tsm() { return ShiftFamily(FamilyTag::tsm, 0.0, "tsm"); }

ShiftFamily ShiftFamily::multiplicative(double delta) {
  check_delta(delta);
  return ShiftFamily(FamilyTag::multiplicative, delta, "multiplicative");
}

ShiftFamily ShiftFamily::exp_tilt(double delta) {
  check_delta(delta);
  return ShiftFamily(FamilyTag::exp_tilt, delta, "exp_tilt");
}

ShiftFamily ShiftFamily::identity() { return ShiftFamily(FamilyTag::identity, 1.0, "identity"); }

ShiftFamily ShiftFamily::custom(std::string name, Fn f, Fn df, Fn d2f) {
  if (!f || !df || !d2f) throw Error(ErrorCode::InadmissibleFamily, "custom family needs f, f' and f''");
  if (f(0.0) != 0.0) throw Error(ErrorCode::InadmissibleFamily, "custom family must satisfy f(0) = 0");
  constexpr int kGrid = 1000;
  for (int j = 1; j <= kGrid; ++j) {
    const double x = static_cast<double>(j) / (kGrid + 1);
    const double fx = f(x);
    if (!(fx >= 0.0 && fx < x)) {
      throw Error(ErrorCode::InadmissibleFamily,
                  "custom family violates 0 <= f(x) < x at x = " + std::to_string(x));
    }
    if (!std::isfinite(df(x)) || !std::isfinite(d2f(x))) {
      throw Error(ErrorCode::InadmissibleFamily, "custom family derivative is not finite");
    }
  }
  ShiftFamily family(FamilyTag::custom, 0.0, std::move(name));
  family.f_ = std::move(f);
  family.df_ = std::move(df);
  family.d2f_ = std::move(d2f);
  return family;
}

ShiftFamily ShiftFamily::tabulated(std::string name, std::vector<double> grid, std::vector<double> f,
                                   std::vector<double> df, std::vector<double> d2f) {
  const std::size_t n = grid.size();
  if (n < 2 || f.size() != n || df.size() != n || d2f.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "tabulated family needs equally long tables of length >= 2");
  }
  if (grid.front() != 0.0 || grid.back() != 1.0 || !std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw Error(ErrorCode::InadmissibleFamily, "tabulation grid must increase strictly from 0 to 1");
  }
  auto interpolate = [grid](std::vector<double> values) {
    return [grid, values = std::move(values)](double x) {
      const double xc = std::clamp(x, 0.0, 1.0);
      auto it = std::upper_bound(grid.begin(), grid.end(), xc);
      std::size_t hi = static_cast<std::size_t>(it - grid.begin());
      if (hi >= grid.size()) hi = grid.size() - 1;
      const std::size_t lo = hi - 1;
      const double w = (xc - grid[lo]) / (grid[hi] - grid[lo]);
      return (1.0 - w) * values[lo] + w * values[hi];
    };
  };
  return custom(std::move(name), interpolate(std::move(f)), interpolate(std::move(df)),
                interpolate(std::move(d2f)));
}

ShiftFamily ShiftFamily::make(FamilyTag tag, double delta) {
  switch (tag) {
    case FamilyTag::tsm: return tsm();
    case FamilyTag::multiplicative: return multiplicative(delta);
    case FamilyTag::exp_tilt: return exp_tilt(delta);
    case FamilyTag::identity: return identity();
    case FamilyTag::custom: break;
  }
  throw Error(ErrorCode::BadConfig, "custom families must be built with ShiftFamily::custom");
}

double ShiftFamily::eval(double x, int order) const {
  check_order(order);
  switch (tag_) {
    case FamilyTag::tsm:
      return 0.0;
    case FamilyTag::multiplicative:
      return order == 0 ? delta_ * x : (order == 1 ? delta_ : 0.0);
    case FamilyTag::exp_tilt: {
      // f = delta x / g with g = 1 - (1 - delta) x. At delta = 0 the family is
      // identically zero, including the removable 0 / 0 at x = 1.
      if (delta_ == 0.0) return 0.0;
      const double g = 1.0 - (1.0 - delta_) * x;
      if (order == 0) return delta_ * x / g;
      if (order == 1) return delta_ / (g * g);
      return 2.0 * delta_ * (1.0 - delta_) / (g * g * g);
    }
    case FamilyTag::identity:
      return order == 0 ? x : (order == 1 ? 1.0 : 0.0);
    case FamilyTag::custom:
      return order == 0 ? f_(x) : (order == 1 ? df_(x) : d2f_(x));
  }
  return 0.0;
}

bool ShiftFamily::has_zero_curvature() const {
  switch (tag_) {
    case FamilyTag::tsm:
    case FamilyTag::multiplicative:
    case FamilyTag::identity:
      return true;
    case FamilyTag::exp_tilt:
      return delta_ == 0.0 || delta_ == 1.0;
    case FamilyTag::custom:
      return false;
  }
  return false;
}

double eval_f(const ShiftFamily& family, double x, int order) { return family.eval(x, order); }

SmoothingKernel::SmoothingKernel(double k) : k_(k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw Error(ErrorCode::BadConfig, "smoothing k must be positive");
}

double SmoothingKernel::eval(double x, int order) const {
  check_order(order);
  // expm1 keeps s(x) > 0 for tiny positive x, so S = 0 happens only at x = 0.
  if (order == 0) return -std::expm1(-k_ * x);
  const double e = std::exp(-k_ * x);
  return order == 1 ? k_ * e : -k_ * k_ * e;
}

double eval_s(const SmoothingKernel& kernel, double x, int order) { return kernel.eval(x, order); }

}  // namespace fairpos
