#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace purisim {

/// splitmix64 finaliser; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// 64-bit FNV-1a of a stream label.
std::uint64_t hash_label(std::string_view label);

/// Seed for the stream identified by (master seed, label, trial index).
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label,
                          std::uint64_t trial_index);

/// Deterministic per-trial random source. The draw sequence depends only on
/// the derivation inputs: mt19937_64 is fully specified by the standard and
/// the conversion to double below does not go through a library
/// distribution, so sequences agree across platforms.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  RngStream(std::uint64_t master_seed, std::string_view label, std::uint64_t trial_index)
      : engine_(derive_seed(master_seed, label, trial_index)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// One draw per call regardless of p, so call sequences stay aligned.
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace purisim
