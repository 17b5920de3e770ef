#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace rvla {

// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Hashes a root seed together with an ordered list of keys. Used to give
// every (episode, row, step, sample) its own independent stream so that
// consumption order in one place never shifts draws elsewhere.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept;

// Stable 64-bit FNV-1a hash of a string, for turning tags into keys.
std::uint64_t hash_tag(const char* tag) noexcept;
std::uint64_t hash_bytes(std::string_view bytes) noexcept;

/// Deterministic random stream keyed by a 64-bit seed.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in the closed range [lo, hi].
  int uniform_int(int lo, int hi);
  double normal();
  double gamma(double shape, double scale);
  // Beta(a, 1) by inversion: CDF is x^a.
  double beta_a1(double a);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rvla
