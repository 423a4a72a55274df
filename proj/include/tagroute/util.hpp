#pragma once
// Small shared primitives: a portable 64-bit hash and RNG draws that are
// bit-identical across standard libraries (std distributions are not).

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace tagroute {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

constexpr std::uint64_t fnv1a64(std::string_view text,
                                std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string to_hex(std::uint64_t value);

// Uniform double in [0, 1) using the top 53 bits of the engine output.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) via rejection sampling (exactly uniform).
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

std::string trim(std::string_view text);
std::string to_lower_ascii(std::string_view text);

}  // namespace tagroute
