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

#include "gaic/random.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace gaic {

uint64_t UniformIndex(std::mt19937_64& rng, uint64_t n) {
  if (n == 0) throw std::domain_error("UniformIndex: empty range");
  constexpr uint64_t kMax = std::numeric_limits<uint64_t>::max();
  const uint64_t limit = kMax - kMax % n;
  uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

double UniformReal(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double StandardNormal(std::mt19937_64& rng) {
  const double u1 = 1.0 - UniformReal(rng);  // (0, 1]
  const double u2 = UniformReal(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace gaic
