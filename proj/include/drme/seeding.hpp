#pragma once

#include <cstdint>
#include <initializer_list>

namespace drme {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Order-sensitive hash of a base seed and stream labels; each distinct label
/// tuple gets an independent-looking stream.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t h = mix64(base);
  for (const std::uint64_t label : labels) {
    h = mix64(h ^ mix64(label + 0x632be59bd9b4e019ULL));
  }
  return h;
}

} // namespace drme
