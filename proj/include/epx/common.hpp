#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace epx {

/// Base error type for the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File access / parse / format errors.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Semantic validation errors (bad labels, degenerate inputs, ...).
struct DataError : Error {
  explicit DataError(const std::string& msg) : Error(msg) {}
};

// --- Seed derivation -------------------------------------------------------
//
// One seed governs a run. Every internal seed is derived from it with the
// splitmix64 finalizer so that results do not depend on evaluation order or
// thread scheduling. The scheme is: mix64(seed, stream) for fixed stream
// constants, chained via mix64(mix64(seed, a), b) for nested contexts.

inline constexpr std::uint64_t kGolden64 = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden64;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(seed, a), b);
}

/// Order-insensitive-free hash of a canonical (sorted) index set.
inline std::uint64_t hash_index_set(const std::vector<int>& sorted_set) {
  std::uint64_t h = 0x811c9dc5ULL;
  for (int v : sorted_set) h = splitmix64(h ^ static_cast<std::uint64_t>(v + 1));
  return h;
}

// Fixed stream ids for seed derivation.
namespace seed_stream {
inline constexpr std::uint64_t null_calibration = 0x01;
inline constexpr std::uint64_t evaluator = 0x02;
inline constexpr std::uint64_t folds = 0x03;
inline constexpr std::uint64_t synth_labels = 0x04;
inline constexpr std::uint64_t synth_features = 0x05;
inline constexpr std::uint64_t pipeline = 0x06;
}  // namespace seed_stream

}  // namespace epx
