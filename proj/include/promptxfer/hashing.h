// Copyright 2026 The promptxfer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROMPTXFER_HASHING_H_
#define PROMPTXFER_HASHING_H_

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

// Platform-stable hashing and seeded draws. Everything that must reproduce
// bit-for-bit across processes (mock backends, splits, candidate ids) goes
// through these instead of std::hash or std::uniform_*_distribution, whose
// outputs are implementation-defined.
namespace promptxfer {

inline constexpr uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t Fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t HashCombine(uint64_t seed, uint64_t value) {
  return SplitMix64(seed ^ SplitMix64(value + 0x632be59bd9b4e019ULL));
}

inline uint64_t HashCombine(uint64_t seed, std::string_view value) {
  return HashCombine(seed, Fnv1a64(value));
}

// Maps a 64-bit key to [0, 1) using the top 53 bits.
inline double UnitDraw(uint64_t key) {
  return static_cast<double>(SplitMix64(key) >> 11) * 0x1.0p-53;
}

inline std::string HexId(uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

// Unbiased draw in [0, bound) from a standard-specified engine.
inline uint64_t BoundedDraw(std::mt19937_64& engine, uint64_t bound) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t v;
  do {
    v = engine();
  } while (v >= limit);
  return v % bound;
}

// Fisher-Yates permutation of [0, n) under `seed`.
inline std::vector<size_t> SeededPermutation(size_t n, uint64_t seed) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 engine(seed);
  for (size_t i = n; i > 1; --i) {
    const size_t j = BoundedDraw(engine, i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace promptxfer

#endif  // PROMPTXFER_HASHING_H_
