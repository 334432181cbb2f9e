#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace date_ad {

// Thrown when an operation's preconditions are violated.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a computation produces non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown on malformed files, hash mismatches and similar I/O-level problems.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// FNV-1a over bytes. Used for config/stopword hashes recorded in artifacts,
// where we need a stable cross-platform fingerprint, not cryptography.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string to_hex(std::uint64_t v);

// splitmix64, used to derive independent stream seeds from (seed, salt...)
// without correlated low bits.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (a * 0xff51afd7ed558ccdull));
  h = splitmix64(h ^ (b * 0xc4ceb9fe1a85ec53ull));
  h = splitmix64(h ^ (c * 0x2545f4914f6cdd1dull));
  return h;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
  return Rng(mix_seed(seed, a, b, c));
}

}  // namespace date_ad
