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
#include <string>
#include <utility>
#include <vector>

#include "gaic/tensor.h"

namespace gaic::nd {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  int64_t step = 0;
  AdamOptions options;
};

// Adam with bias correction. Parameters without an accumulated gradient are
// treated as having a zero gradient.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options = {});

  void Step();
  void ZeroGrad();

  const AdamState& state() const { return state_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

void AdamStep(std::vector<Tensor>& params, AdamState& state);

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Binary container: "GAIC", u32 version, u32 count, then per tensor
// u32 name length, UTF-8 name, u32 rank, u32 extents[rank], f64 data,
// all little-endian.
std::string SerializeTensors(const NamedTensors& tensors);
NamedTensors DeserializeTensors(const std::string& bytes);
void SaveTensors(const NamedTensors& tensors, const std::string& path);
NamedTensors LoadTensors(const std::string& path);

inline constexpr uint32_t kTensorFormatVersion = 1;

}  // namespace gaic::nd
