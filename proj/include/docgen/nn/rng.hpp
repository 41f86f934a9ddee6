#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace docgen::nn {

// Deterministic random stream (xoshiro256** seeded via splitmix64).
// Self-contained so identical seeds give identical streams on every
// platform, independent of the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  static const char* algorithm() { return "xoshiro256ss"; }

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  // Independent child stream; deterministic in (seed, stream).
  Rng fork(std::uint64_t stream) const;

  // Fisher-Yates, driven by below().
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t state_[4] = {0, 0, 0, 0};
};

}  // namespace docgen::nn
