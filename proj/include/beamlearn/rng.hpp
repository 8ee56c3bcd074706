#pragma once

#include <cstdint>

namespace beamlearn {

// splitmix64 finalizer. Every random draw in the project is a pure function
// of (key, counter), so streams can be split without sharing state and runs
// replay bit-identically on any platform.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b));
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}
  CounterRng(std::uint64_t key, std::uint64_t stream) : key_(mix64(key, stream)) {}

  std::uint64_t next_u64() { return mix64(key_, counter_++); }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), n >= 1. Lemire reduction; bias is < 2^-64.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  // Independent child stream; does not advance this generator.
  CounterRng split(std::uint64_t stream) const {
    return CounterRng(mix64(key_, 0x517cc1b727220a95ULL ^ stream));
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace beamlearn
