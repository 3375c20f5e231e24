#include "fairpos/algebra.hpp"
#include "fairpos/dgp.hpp"
#include "fairpos/error.hpp"
#include "fairpos/estimator.hpp"
#include "fairpos/experiments.hpp"

#include <doctest.h>

#include <cmath>

using namespace fairpos;

namespace {

std::vector<ShiftFamily> all_families() {
  std::vector<ShiftFamily> f = builtin_families({0.0, 0.25, 0.5, 0.9});
  f.push_back(ShiftFamily::identity());
  return f;
}

const Gate& gate(const SimulationReport& r, const std::string& name) {
  for (const auto& g : r.gates) {
    if (g.name == name) return g;
  }
  FAIL("missing gate " << name);
  return r.gates.front();
}

}  // namespace

TEST_CASE("every process in the library is valid") {
  for (const auto& dgp : dgps::eif_suite()) CHECK_NOTHROW(dgp.validate());
  CHECK_NOTHROW(dgps::positivity_violation().validate(true));
  CHECK(dgps::no_overlap().trimmed_mass() == 0.0);
  CHECK(dgps::positivity_violation().trimmed_mass() > 0.0);
  CHECK(dgps::positivity_violation().trimmed_mass() < 1.0);
  CHECK(dgps::intermediate_positivity().pi.minCoeff() >= 0.1);
}

TEST_CASE("constant mean gives psi = c for every family and target") {
  const DiscreteDgp dgp = dgps::constant_outcome(1.75);
  for (const auto& f : all_families()) {
    for (int a = 0; a < dgp.arms(); ++a) {
      CHECK(true_functional(dgp, f, SmoothingKernel(100.0), a) == doctest::Approx(1.75).epsilon(1e-14));
    }
  }
}

TEST_CASE("identity family gives the observed mean") {
  for (const auto& dgp : dgps::eif_suite()) {
    for (int a = 0; a < dgp.arms(); ++a) {
      CHECK(true_functional(dgp, ShiftFamily::identity(), SmoothingKernel(100.0), a) ==
            doctest::Approx(dgp.observed_mean()).epsilon(1e-13));
    }
  }
}

TEST_CASE("two atoms, tsm, saturated kernel gives E mu_a") {
  const DiscreteDgp dgp = dgps::two_atom();
  REQUIRE(dgp.pi.minCoeff() > 0.0);
  const RowMatrix mu = dgp.mu();
  for (int a = 0; a < 2; ++a) {
    const double direct = dgp.probs[0] * mu(0, a) + dgp.probs[1] * mu(1, a);
    CHECK(true_functional(dgp, ShiftFamily::tsm(), SmoothingKernel(1e6), a) ==
          doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("increasing k approaches the known-trim functional") {
  const DiscreteDgp dgp = dgps::positivity_violation();
  for (int a = 0; a < dgp.arms(); ++a) {
    const double target = known_trim_functional(dgp, a);
    double prev = INFINITY;
    for (double k : {1.0, 10.0, 100.0, 1000.0}) {
      const double gap = std::abs(true_functional(dgp, ShiftFamily::tsm(), SmoothingKernel(k), a) - target);
      CHECK(gap <= prev);
      prev = gap;
    }
    CHECK(prev < 1e-6);
  }
}

TEST_CASE("sampling") {
  const DiscreteDgp dgp = dgps::four_arm_mixed();
  CHECK_THROWS_AS(sample(dgp, 0, 1), Error);
  const SampledData a = sample(dgp, 20000, 3);
  const SampledData b = sample(dgp, 20000, 3);
  CHECK(a.treatments == b.treatments);
  CHECK(a.outcomes == b.outcomes);
  CHECK(a.atom_of == b.atom_of);
  // E[pi_b(X)] per arm against empirical frequency.
  for (int arm = 0; arm < dgp.arms(); ++arm) {
    double p = 0.0;
    for (int x = 0; x < dgp.m(); ++x) p += dgp.probs[x] * dgp.pi(x, arm);
    double freq = 0.0;
    for (int t : a.treatments) freq += t == arm;
    freq /= 20000.0;
    CHECK(std::abs(freq - p) <= 3.0 * std::sqrt(p * (1 - p) / 20000.0));
  }
  for (std::size_t i = 0; i < a.n(); ++i) CHECK(dgp.pi(a.atom_of[i], a.treatments[i]) > 0.0);
}

TEST_CASE("enumerated EIF mean equals the functional") {
  for (const auto& dgp : dgps::eif_suite()) {
    for (double k : {10.0, 100.0}) {
      for (const auto& f : all_families()) {
        for (int a = 0; a < dgp.arms(); ++a) {
          CHECK(std::abs(enumerate_eif_mean(dgp, f, SmoothingKernel(k), a) -
                         true_functional(dgp, f, SmoothingKernel(k), a)) <= 1e-10);
        }
      }
    }
  }
}

TEST_CASE("pathwise derivative examples") {
  const SmoothingKernel k(100.0);
  // Atom with a zero propensity.
  const DiscreteDgp pv = dgps::positivity_violation();
  int zero_atom = -1;
  for (int x = 0; x < pv.m() && zero_atom < 0; ++x) {
    if (!pv.in_trimmed_set(x)) zero_atom = x;
  }
  REQUIRE(zero_atom >= 0);
  int arm = 0;
  while (pv.pi(zero_atom, arm) == 0.0) ++arm;
  for (const auto& f : all_families()) {
    const auto r = pathwise_derivative_at(pv, f, k, 0, zero_atom, arm, 1);
    CHECK(std::isfinite(r.analytic));
    CHECK(r.pass);
  }
  const auto two = pathwise_derivative_check(dgps::two_atom(), ShiftFamily::tsm(), k);
  CHECK(two.pass());
  CHECK(two.gates.front().value <= 1e-3);
  const DiscreteDgp c = dgps::constant_outcome(3.0);
  const auto r = pathwise_derivative_at(c, ShiftFamily::exp_tilt(0.5), k, 1, 0, 0, 0);
  CHECK(std::abs(r.numeric) < 1e-9);
  CHECK(std::abs(r.analytic) < 1e-12);
}

TEST_CASE("pathwise derivative on an interior point at the tighter tolerance") {
  const auto r = pathwise_derivative_at(dgps::intermediate_positivity(), ShiftFamily::exp_tilt(0.5),
                                        SmoothingKernel(10.0), 1, 0, 2, 1, 1e-4, 1e-4);
  CHECK(r.pass);
}

TEST_CASE("fairness sweep passes with its negative controls") {
  const SimulationReport r = fairness_criterion_check();
  CHECK(r.pass());
  CHECK(gate(r, "identity_control_fails_strict").pass);
  CHECK(gate(r, "smr_reverses_ordering").pass);
  CHECK(gate(r, "fair_families_preserve_ordering").pass);
  CHECK(gate(r, "nontarget_invariance").value <= 1e-12);
}

TEST_CASE("equal conditional means stay equal under adversarial non-target means") {
  Matrix atoms(3, 1);
  atoms << 0, 1, 2;
  Vector probs(3);
  probs << 0.3, 0.3, 0.4;
  RowMatrix pi(3, 3);
  pi << 0.2, 0.3, 0.5, 0.4, 0.4, 0.2, 0.0, 0.5, 0.5;
  for (double c : {-10.0, 0.0, 10.0}) {
    RowMatrix mu(3, 3);
    mu << 0.3, 0.3, c, 0.3, 0.3, c + 1, 0.3, 0.3, c - 2;
    const DiscreteDgp dgp = DiscreteDgp::symmetric("eq", atoms, probs, pi, mu, RowMatrix::Zero(3, 3));
    for (const auto& f : builtin_families({0.0, 0.5, 0.9})) {
      const double diff = true_functional(dgp, f, SmoothingKernel(100.0), 0) -
                          true_functional(dgp, f, SmoothingKernel(100.0), 1);
      CHECK(std::abs(diff) <= 1e-12);
    }
  }
}

TEST_CASE("Simpson foil reverses the indirect comparator") {
  const DiscreteDgp foil = find_simpson_dgp();
  const RowMatrix mu = foil.mu();
  for (int x = 0; x < foil.m(); ++x) CHECK(mu(x, 0) > mu(x, 1));
  CHECK(smr_comparator(foil, 0) < smr_comparator(foil, 1));
  for (const auto& f : builtin_families({0.0, 0.5, 0.9})) {
    CHECK(true_functional(foil, f, SmoothingKernel(100.0), 0) > true_functional(foil, f, SmoothingKernel(100.0), 1));
  }
}

TEST_CASE("no trimmed set: every family gives E(Y) exactly") {
  const SimulationReport r = necessity_check(dgps::no_overlap());
  CHECK(r.pass());
  CHECK(gate(r, "psi_equals_observed_mean").value == 0.0);
}

TEST_CASE("telescoping identity") {
  const std::vector<double> a{0.3, -1.2}, b{0.7, 0.4};
  const auto [lhs, rhs] = telescoping_identity(a, b);
  const double p2 = (b[1] - a[1]) * (b[0] - a[0]);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-15));
  CHECK(std::abs(std::abs(lhs) - std::abs(p2)) <= 1e-15);
  const std::vector<double> same{0.4, 0.9, -0.2, 1.1};
  const auto [l0, r0] = telescoping_identity(same, same);
  CHECK(l0 == doctest::Approx(0.0));
  CHECK(r0 == 0.0);
  CHECK_THROWS_AS(telescoping_identity(std::vector<double>{1, 2}, std::vector<double>{1}), Error);
  CHECK(telescoping_sweep(5, 1000).pass());
}

TEST_CASE("rate experiment with a two-point grid is descriptive") {
  RateOptions opt;
  opt.n_grid = {500, 1000};
  opt.replications = 20;
  const SimulationReport r = dr_rate_experiment(dgps::positivity_violation(), ShiftFamily::tsm(), opt);
  CHECK(r.descriptive);
  REQUIRE_FALSE(r.notes.empty());
  CHECK(r.notes.back() == "descriptive (grid too small for gate)");
  CHECK(r.records.size() == 2);
  const SimulationReport again = dr_rate_experiment(dgps::positivity_violation(), ShiftFamily::tsm(), opt);
  CHECK(again.records == r.records);
  opt.threads = 3;
  CHECK(dr_rate_experiment(dgps::positivity_violation(), ShiftFamily::tsm(), opt).records == r.records);
}

TEST_CASE("coverage on constant outcomes is flagged, not divided by zero") {
  CoverageOptions opt;
  opt.n = 200;
  opt.replications = 10;
  const SimulationReport r = coverage_experiment(dgps::constant_outcome(1.0), ShiftFamily::tsm(), opt);
  CHECK(r.descriptive);
  CHECK_FALSE(r.notes.empty());
}

TEST_CASE("helpers") {
  std::vector<double> x{1, 2, 4, 8}, y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.5));
  CHECK(loglog_slope(x, y) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(skewness({-1, 0, 1}) == doctest::Approx(0.0));
  CHECK(skewness({0, 0, 0, 10}) > 1.0);
}

TEST_CASE("arm sweep is descriptive with one record per arm count") {
  ArmSweepOptions options;
  options.arms = {2, 4};
  options.n = 300;
  options.replications = 10;
  const auto report = arm_sweep_experiment(ShiftFamily::multiplicative(0.5), options);
  CHECK(report.descriptive);
  CHECK(report.gates.empty());
  REQUIRE(report.records.size() == 2);
  CHECK(report.records[1].at("arms") == 4.0);
  const auto dgp = random_positive_dgp(4, 9);
  CHECK_NOTHROW(dgp.validate(true));
  CHECK(dgp.trimmed_mass() == doctest::Approx(1.0));
  CHECK_THROWS_AS(random_positive_dgp(1, 9), Error);
}
