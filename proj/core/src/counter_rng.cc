/* Copyright 2026 The DeltaDiff Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "deltadiff/counter_rng.h"

#include <cmath>
#include <numbers>

namespace deltadiff {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t HashString(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CounterRng::CounterRng(uint64_t seed, std::string_view stream)
    : key_(SplitMix64(SplitMix64(seed) ^ HashString(stream))) {}

uint64_t CounterRng::Bits(uint64_t index, uint32_t lane) const {
  return SplitMix64(key_ ^ SplitMix64(index * 4 + lane));
}

double CounterRng::Uniform(uint64_t index, uint32_t lane) const {
  return static_cast<double>(Bits(index, lane) >> 11) * 0x1.0p-53;
}

double CounterRng::Normal(uint64_t index) const {
  const double u1 = 1.0 - Uniform(index, 0);  // (0, 1]
  const double u2 = Uniform(index, 1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace deltadiff
