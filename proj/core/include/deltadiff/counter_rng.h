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

#ifndef DELTADIFF_COUNTER_RNG_H_
#define DELTADIFF_COUNTER_RNG_H_

#include <cstdint>
#include <string_view>

namespace deltadiff {

uint64_t SplitMix64(uint64_t x);
// 64-bit FNV-1a.
uint64_t HashString(std::string_view s);

// Stateless generator: every draw is a pure function of (seed, stream name,
// element index), so draws do not depend on generation order or threading.
class CounterRng {
 public:
  CounterRng(uint64_t seed, std::string_view stream);

  uint64_t Bits(uint64_t index, uint32_t lane = 0) const;
  // Uniform in [0, 1).
  double Uniform(uint64_t index, uint32_t lane = 0) const;
  // Standard normal via Box-Muller over lanes 0 and 1.
  double Normal(uint64_t index) const;

 private:
  uint64_t key_;
};

}  // namespace deltadiff

#endif  // DELTADIFF_COUNTER_RNG_H_
