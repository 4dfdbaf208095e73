#pragma once

#include <cstdint>
#include <random>

namespace altgdmin {

/// Labels for the independent random streams derived from one master seed.
/// Changing one consumer (say m) never shifts the draws of another.
enum class Stream : std::uint64_t {
  basis = 0x11,          // U*
  coefficients = 0x12,   // B*
  support = 0x13,        // S* supports
  sparse_values = 0x14,  // S* values
  ensemble = 0x15,       // A_k (per-column sub-streams below)
  probes = 0x16,         // subspace-iteration start block
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream label) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(label)));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(parent + splitmix64(index + 1));
}

using Engine = std::mt19937_64;

} // namespace altgdmin
