#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace specshare {

using Rng = std::mt19937_64;

// 64-bit FNV-1a. Used for stream names and config hashes.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Independent, reproducible stream keyed by (seed, name, index). Every
// random draw in the library goes through one of these so that parallel and
// serial code paths consume identical sequences.
Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

std::string rng_state(const Rng& rng);
Rng rng_from_state(const std::string& state);

}  // namespace specshare
