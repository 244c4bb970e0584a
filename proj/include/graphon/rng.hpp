#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace graphon {

/// SplitMix64 finalizer. Used to derive independent child seeds from a
/// parent seed and a path of integer labels (N, trial, stream, ...).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(base);
  for (auto label : path) s = splitmix64(s ^ splitmix64(label + 1));
  return s;
}

/// Seeded generator. The engine is std::mt19937_64 seeded with
/// splitmix64(seed); uniforms take the top 53 bits of each 64-bit draw, so
/// the stream is reproducible bit-for-bit across platforms and languages.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace graphon
