#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random number utilities. Every draw is a pure function of
// (key, index), so call sites can evaluate draws in any order (or in
// parallel) and still produce identical streams. Keys for sub-streams are
// derived with `derive`, never by reusing a raw seed.

namespace respars::rng {

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// i-th value of the stream identified by `key`.
constexpr std::uint64_t at(std::uint64_t key, std::uint64_t index) {
  return mix64(key + (index + 1) * kGamma);
}

// Stable sub-stream key; tags are small integers chosen by the caller.
constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t tag) {
  return mix64(key ^ mix64(tag * kGamma + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive2(std::uint64_t key, std::uint64_t a, std::uint64_t b) {
  return derive(derive(key, a), b);
}

// Uniform in [0, 1), 53-bit resolution.
inline double uniform01(std::uint64_t key, std::uint64_t index) {
  return static_cast<double>(at(key, index) >> 11) * 0x1.0p-53;
}

// Uniform in (0, 1]; safe as a log() argument.
inline double uniform_open(std::uint64_t key, std::uint64_t index) {
  return (static_cast<double>(at(key, index) >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal via Box-Muller; consumes indices 2i and 2i+1.
inline double normal(std::uint64_t key, std::uint64_t index) {
  const double u1 = uniform_open(key, 2 * index);
  const double u2 = uniform01(key, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
}

// Sequential convenience wrapper for shuffles and rejection loops.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return at(key_, index_++); }
  double next_uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound); bound > 0.
  std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }

 private:
  std::uint64_t key_;
  std::uint64_t index_ = 0;
};

}  // namespace respars::rng
