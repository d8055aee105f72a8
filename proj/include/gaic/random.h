// Copyright 2026 The GAIC Authors.
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

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gaic {

// Helpers over raw std::mt19937_64 output. The standard distributions are
// implementation-defined, so every seeded sequence in the project goes
// through these instead.

// Uniform integer in [0, n) by rejection sampling.
uint64_t UniformIndex(std::mt19937_64& rng, uint64_t n);
// Uniform double in [0, 1) with 53 random bits.
double UniformReal(std::mt19937_64& rng);
// Standard normal draw (Box-Muller, one value per call).
double StandardNormal(std::mt19937_64& rng);
// In-place Fisher-Yates shuffle.
template <typename T>
void Shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[UniformIndex(rng, i)]);
  }
}

}  // namespace gaic
