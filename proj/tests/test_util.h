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

#include <cmath>
#include <random>
#include <vector>

#include "gaic/random.h"
#include "gaic/tensor.h"

namespace gaic::testing {

// Gaussian entries; with min_abs > 0 every entry is pushed at least that far
// from zero so relu kinks stay out of reach of a finite-difference step.
inline nd::Tensor RandomTensor(nd::Shape shape, std::mt19937_64& rng,
                               double scale = 1.0, double min_abs = 0.0) {
  std::vector<double> v(static_cast<size_t>(nd::NumElements(shape)));
  for (double& x : v) {
    x = scale * StandardNormal(rng);
    if (std::fabs(x) < min_abs) x = x < 0 ? x - min_abs : x + min_abs;
  }
  return nd::Tensor::FromData(std::move(shape), std::move(v), true);
}

}  // namespace gaic::testing
