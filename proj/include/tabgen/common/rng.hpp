// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace tabgen {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives a sub-seed from a master seed, a stream tag and integer
/// coordinates:  s = mix(mix(master ^ fnv1a(tag)) ^ c0) ^ c1 ...
/// Distinct tags give independent streams; the derivation is stable across
/// platforms.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::initializer_list<std::uint64_t> coords = {}) {
  std::uint64_t s = mix64(master ^ fnv1a(tag));
  for (std::uint64_t c : coords) s = mix64(s ^ mix64(c));
  return s;
}

inline Rng make_rng(std::uint64_t master, std::string_view tag,
                    std::initializer_list<std::uint64_t> coords = {}) {
  return Rng(derive_seed(master, tag, coords));
}

}  // namespace tabgen
