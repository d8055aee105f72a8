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

#include "gaic/finite_diff.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gaic::nd {

std::string FiniteDiffReport::ToString() const {
  std::ostringstream os;
  os << (passed ? "pass" : "FAIL") << " (tol " << tolerance << "):";
  for (double e : max_relative_error) os << " " << e;
  return os.str();
}

FiniteDiffReport FiniteDiffCheck(
    const std::function<Tensor(const std::vector<Tensor>&)>& op,
    std::vector<Tensor> inputs, double step, double tolerance) {
  for (Tensor& t : inputs) {
    t.set_requires_grad(true);
    t.ZeroGrad();
  }
  const Tensor out = op(inputs);
  if (out.numel() != 1) throw std::domain_error("finite diff: op must return a scalar");
  Backward(out);

  FiniteDiffReport report;
  report.tolerance = tolerance;
  report.passed = true;
  for (Tensor& t : inputs) {
    const std::vector<double> analytic =
        t.has_grad() ? std::vector<double>(t.grad().begin(), t.grad().end())
                     : std::vector<double>(static_cast<size_t>(t.numel()), 0.0);
    std::vector<double> numeric(analytic.size());
    std::span<double> data = t.mutable_data();
    for (size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + step;
      const double plus = op(inputs).item();
      data[i] = orig - step;
      const double minus = op(inputs).item();
      data[i] = orig;
      numeric[i] = (plus - minus) / (2.0 * step);
    }
    double diff = 0.0, scale = 0.0;
    for (size_t i = 0; i < analytic.size(); ++i) {
      diff = std::max(diff, std::fabs(analytic[i] - numeric[i]));
      scale = std::max({scale, std::fabs(analytic[i]), std::fabs(numeric[i])});
    }
    const double rel = scale > 0.0 ? diff / scale : diff;
    report.max_relative_error.push_back(rel);
    if (!(rel < tolerance)) report.passed = false;
    t.ZeroGrad();
  }
  return report;
}

}  // namespace gaic::nd
