#include "fairpos/config.hpp"
#include "fairpos/dataset.hpp"
#include "fairpos/error.hpp"
#include "fairpos/folds.hpp"
#include "fairpos/matrix.hpp"
#include "fairpos/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

using namespace fairpos;

namespace {

RawRows rows_with(std::vector<std::string> labels) {
  RawRows raw;
  const auto n = static_cast<Eigen::Index>(labels.size());
  raw.covariates = Matrix(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) raw.covariates(i, 0) = 0.1 * static_cast<double>(i);
  raw.treatments = std::move(labels);
  raw.outcomes.assign(raw.treatments.size(), 1.0);
  return raw;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected fairpos::Error");
  return ErrorCode::BadConfig;
}

}  // namespace

TEST_CASE("three rows with labels 1,2,1 give two arms") {
  const Dataset ds = validate_dataset(rows_with({"1", "2", "1"}));
  CHECK(ds.n() == 3);
  CHECK(ds.arms() == 2);
  CHECK(ds.treatments() == std::vector<int>{0, 1, 0});
}

TEST_CASE("labels 10 and 30 are re-indexed in numeric order") {
  const Dataset ds = validate_dataset(rows_with({"30", "10", "30", "10"}));
  CHECK(ds.arms() == 2);
  CHECK(ds.labels().label(0) == "10");
  CHECK(ds.labels().label(1) == "30");
  CHECK(ds.treatments() == std::vector<int>{1, 0, 1, 0});
}

TEST_CASE("integer labels sort numerically, strings lexicographically") {
  CHECK(LabelMap::from_observed({"9", "10", "2"}).labels() == std::vector<std::string>{"2", "9", "10"});
  CHECK(LabelMap::from_observed({"b", "a10", "a9"}).labels() == std::vector<std::string>{"a10", "a9", "b"});
}

TEST_CASE("label map round trip") {
  const LabelMap map = LabelMap::from_observed({"H03", "H01", "H02", "H01"});
  for (int i = 0; i < map.size(); ++i) CHECK(map.index_of(map.label(i)) == i);
  for (const auto& l : map.labels()) CHECK(map.label(*map.index_of(l)) == l);
  CHECK_FALSE(map.index_of("H99").has_value());
}

TEST_CASE("declared label with no rows is EmptyArm") {
  RawRows raw = rows_with({"1", "3", "1", "3", "1", "3"});
  raw.declared_labels = {"1", "2", "3"};
  CHECK(code_of([&] { validate_dataset(raw); }) == ErrorCode::EmptyArm);
}

TEST_CASE("non-finite values are rejected") {
  RawRows raw = rows_with({"1", "2", "1", "2"});
  raw.outcomes[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { validate_dataset(raw); }) == ErrorCode::NonFinite);
  raw = rows_with({"1", "2", "1", "2"});
  raw.covariates(1, 0) = std::numeric_limits<double>::infinity();
  CHECK(code_of([&] { validate_dataset(raw); }) == ErrorCode::NonFinite);
}

TEST_CASE("too many arms for the row count") {
  CHECK(code_of([&] { validate_dataset(rows_with({"1", "2", "3"})); }) == ErrorCode::ArityTooLarge);
  CHECK_NOTHROW(validate_dataset(rows_with({"1", "2", "3", "1", "2"})));
}

TEST_CASE("length mismatch is reported") {
  RawRows raw = rows_with({"1", "2", "1"});
  raw.outcomes.pop_back();
  CHECK(code_of([&] { validate_dataset(raw); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("validation is deterministic") {
  const RawRows raw = rows_with({"b", "a", "c", "a", "b", "c"});
  const Dataset a = validate_dataset(raw);
  const Dataset b = validate_dataset(raw);
  CHECK(a.treatments() == b.treatments());
  CHECK(a.labels() == b.labels());
  CHECK(a.covariates() == b.covariates());
  CHECK(a.outcomes() == b.outcomes());
}

TEST_CASE("folds: n=4 splits 2/2, n=5 splits 3/2") {
  const FoldAssignment f4 = split_folds(4, 2, 0);
  CHECK(f4.sizes() == std::vector<std::size_t>{2, 2});
  for (std::uint64_t seed : {1ULL, 7ULL, 123456789ULL}) {
    auto sizes = split_folds(5, 2, seed).sizes();
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<std::size_t>{2, 3});
  }
}

TEST_CASE("folds are deterministic, balanced and partition the rows") {
  for (int folds : {2, 3, 5, 7}) {
    for (std::size_t n : {7UL, 10UL, 101UL}) {
      if (n < static_cast<std::size_t>(folds)) continue;
      const FoldAssignment a = split_folds(n, folds, 42);
      CHECK(a == split_folds(n, folds, 42));
      const auto sizes = a.sizes();
      CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
      std::size_t total = 0;
      for (int k = 0; k < folds; ++k) {
        const auto m = a.members(k);
        const auto c = a.complement(k);
        CHECK(m.size() + c.size() == n);
        total += m.size();
      }
      CHECK(total == n);
    }
  }
  CHECK_FALSE(split_folds(100, 2, 1) == split_folds(100, 2, 2));
}

TEST_CASE("fold errors") {
  CHECK(code_of([] { split_folds(1, 2, 0); }) == ErrorCode::TooFewRows);
  CHECK(code_of([] { split_folds(10, 1, 0); }) == ErrorCode::BadConfig);
}

TEST_CASE("config validation") {
  EstimationConfig c;
  CHECK_NOTHROW(c.validate());
  c.delta = 1.0;
  CHECK_NOTHROW(c.validate());
  c.delta = 1.5;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::BadConfig);
  c = {};
  c.folds = 1;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::BadConfig);
  c = {};
  c.ci_level = 1.0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::BadConfig);
  c = {};
  c.smoothing_k = 0.0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::BadConfig);
  c = {};
  c.propensity_floor = -1.0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::BadConfig);
}

TEST_CASE("rng replays and draws stay in range") {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    counts[r.below(7)]++;
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  auto perm = Rng(3).permutation(50);
  std::vector<std::size_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(50);
  std::iota(iota.begin(), iota.end(), 0);
  CHECK(sorted == iota);
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST_CASE("rng normal moments") {
  Rng r(11);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("pairwise sum is exact on integers and order-fixed") {
  std::vector<double> v(1001);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(pairwise_sum(v) == 1001.0 * 1002.0 / 2.0);
  CHECK(pairwise_sum(std::span<const double>()) == 0.0);
}
