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

#include <functional>
#include <string>
#include <vector>

#include "gaic/tensor.h"

namespace gaic::nd {

struct FiniteDiffReport {
  // Per input: max |analytic - numeric| / max(max|analytic|, max|numeric|).
  std::vector<double> max_relative_error;
  double tolerance = 0.0;
  bool passed = false;

  std::string ToString() const;
};

// Compares the reverse-mode gradient of a scalar-valued closure against
// central differences for every element of every input. Inputs must be leaf
// tensors; their gradients are cleared before and after the check.
FiniteDiffReport FiniteDiffCheck(
    const std::function<Tensor(const std::vector<Tensor>&)>& op,
    std::vector<Tensor> inputs, double step = 1e-3, double tolerance = 1e-4);

}  // namespace gaic::nd
