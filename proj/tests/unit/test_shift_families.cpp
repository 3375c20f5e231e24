#include "fairpos/error.hpp"
#include "fairpos/shift_family.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace fairpos;

namespace {

std::vector<ShiftFamily> builtin(const std::vector<double>& deltas) {
  std::vector<ShiftFamily> out{ShiftFamily::tsm()};
  for (double d : deltas) {
    out.push_back(ShiftFamily::multiplicative(d));
    out.push_back(ShiftFamily::exp_tilt(d));
  }
  return out;
}

}  // namespace

TEST_CASE("pointwise values") {
  CHECK(eval_f(ShiftFamily::tsm(), 0.7, 0) == 0.0);
  const auto mult = ShiftFamily::multiplicative(0.5);
  CHECK(eval_f(mult, 0.4, 0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(eval_f(mult, 0.4, 1) == 0.5);
  CHECK(eval_f(mult, 0.4, 2) == 0.0);
  CHECK(eval_f(ShiftFamily::exp_tilt(0.5), 0.5, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  for (const auto& f : builtin({0.0, 0.25, 0.5, 0.9})) CHECK(eval_f(f, 0.0, 0) == 0.0);
  CHECK(eval_f(ShiftFamily::identity(), 0.37, 0) == 0.37);
}

TEST_CASE("kernel values") {
  const SmoothingKernel s(100.0);
  CHECK(eval_s(s, 0.0, 0) == 0.0);
  CHECK(eval_s(s, 0.1, 0) == doctest::Approx(1.0 - std::exp(-10.0)).epsilon(1e-15));
  CHECK(eval_s(s, 0.1, 0) == doctest::Approx(0.9999546).epsilon(1e-7));
  CHECK(eval_s(s, 0.0, 1) == 100.0);
  CHECK(eval_s(s, 0.02, 2) == doctest::Approx(-1e4 * std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("bad order is rejected") {
  CHECK_THROWS_AS(eval_f(ShiftFamily::tsm(), 0.5, 3), Error);
  CHECK_THROWS_AS(eval_s(SmoothingKernel(10), 0.5, -1), Error);
  try {
    eval_f(ShiftFamily::exp_tilt(0.5), 0.5, 7);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadOrder);
  }
}

TEST_CASE("admissibility sweep on 1000 interior points") {
  for (const auto& f : builtin({0.0, 0.25, 0.5, 0.9})) {
    for (int i = 1; i <= 1000; ++i) {
      const double x = i / 1001.0;
      const double v = eval_f(f, x, 0);
      CHECK(v >= 0.0);
      CHECK(v < x);
    }
  }
}

TEST_CASE("derivatives match central differences") {
  const double h = 1e-5;
  auto check = [&](auto&& g, double x) {
    for (int order : {0, 1}) {
      const double fd = (g(x + h, order) - g(x - h, order)) / (2.0 * h);
      const double an = g(x, order + 1);
      CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
    }
  };
  for (const auto& f : builtin({0.0, 0.25, 0.5, 0.9})) {
    for (int i = 1; i < 100; ++i) check([&](double x, int o) { return f.eval(x, o); }, i / 100.0);
  }
  for (double k : {1.0, 10.0, 100.0}) {
    const SmoothingKernel s(k);
    for (int i = 1; i < 100; ++i) check([&](double x, int o) { return s.eval(x, o); }, i / 100.0);
  }
}

TEST_CASE("kernel is increasing in x and in k, bounded below one") {
  const SmoothingKernel s10(10), s100(100), s1000(1000);
  for (int i = 1; i <= 100; ++i) {
    const double x = i / 100.0;
    CHECK(s10.eval(x, 0) < s100.eval(x, 0) + 1e-300);
    CHECK(s100.eval(x, 0) <= s1000.eval(x, 0));
    CHECK(s100.eval(x, 1) > 0.0);
    CHECK(s10.eval(x, 0) < 1.0);
    CHECK(s10.eval(x, 0) > s10.eval(x - 0.005, 0));
  }
}

TEST_CASE("curvature flags") {
  CHECK(ShiftFamily::tsm().has_zero_curvature());
  CHECK(ShiftFamily::multiplicative(0.5).has_zero_curvature());
  CHECK(ShiftFamily::identity().has_zero_curvature());
  CHECK_FALSE(ShiftFamily::exp_tilt(0.5).has_zero_curvature());
}

TEST_CASE("tags round trip and invalid deltas are rejected") {
  for (auto tag : {FamilyTag::tsm, FamilyTag::multiplicative, FamilyTag::exp_tilt, FamilyTag::identity}) {
    CHECK(parse_family_tag(to_string(tag)) == tag);
  }
  CHECK_THROWS_AS(parse_family_tag("banana"), Error);
  CHECK_THROWS_AS(ShiftFamily::multiplicative(-0.1), Error);
  CHECK_THROWS_AS(ShiftFamily::exp_tilt(1.5), Error);
  CHECK_THROWS_AS(SmoothingKernel(0.0), Error);
}

TEST_CASE("delta = 1 is the no-shift case") {
  for (int i = 0; i <= 10; ++i) {
    const double x = i / 10.0;
    CHECK(ShiftFamily::multiplicative(1.0).eval(x, 0) == doctest::Approx(x));
    CHECK(ShiftFamily::exp_tilt(1.0).eval(x, 0) == doctest::Approx(x));
  }
}

TEST_CASE("custom families are validated") {
  const auto ok = ShiftFamily::custom(
      "square", [](double x) { return x * x / 2.0; }, [](double x) { return x; }, [](double) { return 1.0; });
  CHECK(ok.tag() == FamilyTag::custom);
  CHECK(ok.eval(0.5, 0) == 0.125);
  CHECK(ok.eval(0.5, 2) == 1.0);
  try {
    ShiftFamily::custom(
        "bad", [](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; });
    FAIL("identity passed as custom should be inadmissible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InadmissibleFamily);
  }
  CHECK_THROWS_AS(ShiftFamily::custom(
                      "offset", [](double x) { return 0.5 * x + 0.01; }, [](double) { return 0.5; },
                      [](double) { return 0.0; }),
                  Error);
}

TEST_CASE("tabulated custom family interpolates") {
  std::vector<double> grid, f, df, d2f;
  for (int i = 0; i <= 10; ++i) {
    const double x = i / 10.0;
    grid.push_back(x);
    f.push_back(0.5 * x);
    df.push_back(0.5);
    d2f.push_back(0.0);
  }
  const auto t = ShiftFamily::tabulated("half", grid, f, df, d2f);
  CHECK(t.eval(0.25, 0) == doctest::Approx(0.125));
  CHECK(t.eval(0.25, 1) == doctest::Approx(0.5));
}
