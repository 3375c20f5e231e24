#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace fairpos {

enum class FamilyTag { tsm, multiplicative, exp_tilt, identity, custom };

std::string_view to_string(FamilyTag tag);
FamilyTag parse_family_tag(std::string_view text);

/// Intervention function f applied to non-target propensities, with analytic
/// first and second derivatives.
///
///   tsm             f(x) = 0
///   multiplicative  f(x) = delta x
///   exp_tilt        f(x) = delta x / (delta x + 1 - x)
///   identity        f(x) = x            (no shift; degenerate test case)
///   custom          user-supplied (f, f', f''), checked for f(0) = 0 and
///                   0 <= f(x) < x on a grid when constructed
class ShiftFamily {
 public:
  using Fn = std::function<double(double)>;

  static ShiftFamily tsm();
  static ShiftFamily multiplicative(double delta);
  static ShiftFamily exp_tilt(double delta);
  static ShiftFamily identity();
  static ShiftFamily custom(std::string name, Fn f, Fn df, Fn d2f);
  /// Custom family from values tabulated on an increasing grid spanning
  /// [0, 1]; evaluated by linear interpolation.
  static ShiftFamily tabulated(std::string name, std::vector<double> grid, std::vector<double> f,
                               std::vector<double> df, std::vector<double> d2f);
  /// Built-in family by tag (custom is rejected).
  static ShiftFamily make(FamilyTag tag, double delta);

  FamilyTag tag() const { return tag_; }
  double delta() const { return delta_; }
  const std::string& name() const { return name_; }

  /// f(x), f'(x) or f''(x) for order 0, 1, 2; anything else is BadOrder.
  double eval(double x, int order) const;

  /// True when f'' is identically zero (tsm, multiplicative, identity); the
  /// efficiency theory assumes a non-zero second derivative.
  bool has_zero_curvature() const;

 private:
  ShiftFamily(FamilyTag tag, double delta, std::string name);

  FamilyTag tag_;
  double delta_;
  std::string name_;
  Fn f_, df_, d2f_;
};

double eval_f(const ShiftFamily& family, double x, int order);

/// s(x) = 1 - exp(-k x), a smooth surrogate for 1(x > 0) with s(0) = 0.
class SmoothingKernel {
 public:
  explicit SmoothingKernel(double k = 100.0);

  double k() const { return k_; }
  double eval(double x, int order) const;

 private:
  double k_;
};

double eval_s(const SmoothingKernel& kernel, double x, int order);

}  // namespace fairpos
