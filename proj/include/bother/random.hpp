#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bother {

// Every random draw in the pipeline comes from a named substream of one run
// seed, so that e.g. bootstrap resample r is the same no matter how many
// resamples are requested or in which order they are produced.
using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a; stable across platforms unlike std::hash.
constexpr std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline Engine substream(std::uint64_t seed, std::string_view name,
                        std::uint64_t index = 0) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ stream_tag(name));
  s = splitmix64(s ^ index);
  return Engine(s);
}

// Seed for an independent named pipeline stage (batching, bootstrap, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
  return splitmix64(splitmix64(seed) ^ stream_tag(name));
}

}  // namespace bother
