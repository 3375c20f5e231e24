#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace fairpos {

/// Reproducible 64-bit generator.
///
/// The raw stream is std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Every derived draw (uniform reals, bounded integers, normals,
/// shuffles) is implemented here rather than through <random> distributions,
/// which are implementation-defined, so a seed replays identically on any
/// conforming toolchain.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+splitmix64/v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound), unbiased (Lemire's multiply-and-reject).
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via the Marsaglia polar method.
  double normal();

  /// Index drawn from a discrete distribution by inverse CDF.
  std::size_t categorical(std::span<const double> probs);

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; mixes a parent seed with a stream index into an
/// independent child seed (used per replication and per fold).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

}  // namespace fairpos
