#pragma once

#include <cstdint>
#include <random>

namespace randmeas {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijection on 64-bit words.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream for realization `index` of a run seeded with `master`.
///
/// The derivation is part of the stable interface: seed = splitmix64(master
/// ^ splitmix64(index)). Changing it changes every published data file.
inline Rng derive_stream(std::uint64_t master, std::uint64_t index) {
  return Rng(splitmix64(master ^ splitmix64(index)));
}

/// Uniform double strictly inside (0, 1), built from the top 53 bits.
inline double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace randmeas
