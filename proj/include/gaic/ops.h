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

#include <vector>

#include "gaic/tensor.h"

namespace gaic::nd {

// Cross-correlation over NCHW input with an [O, C, k, k] weight (k odd) and
// an [O] bias. Output extent per axis is floor((in + 2p - k) / stride) + 1.
Tensor Conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding);

// 1x1 convolution mapping C channels to weight.dim(0) channels.
Tensor Conv1x1Reduce(const Tensor& input, const Tensor& weight,
                     const Tensor& bias);

// max(x, 0); the subgradient at 0 is 0.
Tensor Relu(const Tensor& t);

// Flattens all non-batch dims of `t` ([B, ...]) and applies
// weight [out, in] and bias [out]; result is [B, out].
Tensor FullyConnected(const Tensor& t, const Tensor& weight, const Tensor& bias);

// Concatenates along the channel axis: axis 1 for NCHW, axis 0 for CHW.
Tensor ConcatChannels(const Tensor& a, const Tensor& b);

// Four-neighbour bilinear interpolation of a CHW map at feature coordinates
// (x row, y column) with 0 <= x <= H-1 and 0 <= y <= W-1. Returns [C].
Tensor BilinearSample(const Tensor& map, double x, double y);

// Bilinear taps for one sample point. Weights sum to one.
struct BilinearTaps {
  int64_t index[4];  // flat offsets into one H x W plane
  double weight[4];
};
// Throws std::domain_error when (x, y) falls outside [0, H-1] x [0, W-1].
BilinearTaps ComputeBilinearTaps(double x, double y, int64_t H, int64_t W);

// One axis of a bilinear tap: neighbours lo, hi and the fraction toward hi.
// Sample grids are separable, so alignment computes these once per row and
// column and combines them; the result equals ComputeBilinearTaps exactly.
struct AxisTap {
  int64_t lo = 0;
  int64_t hi = 0;
  double frac = 0.0;
};
// Throws std::domain_error when v falls outside [0, extent-1].
AxisTap ComputeAxisTap(double v, int64_t extent);
BilinearTaps CombineAxisTaps(const AxisTap& row, const AxisTap& col, int64_t W);

// Mean over the batch of the Huber loss of e = target - pred.
Tensor HuberLoss(const Tensor& pred, const Tensor& target, double delta);
// Mean over the batch of 0.5 * e^2; the unbounded-gradient reference.
Tensor SquaredLoss(const Tensor& pred, const Tensor& target);

Tensor Mean(const Tensor& t);
Tensor Sum(const Tensor& t);
// Elementwise product of equally shaped tensors.
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Reshape(const Tensor& t, Shape shape);

// Elementwise affine transform used for input normalisation:
// out = (in - shift) * scale. Not differentiable w.r.t. shift/scale.
Tensor Affine(const Tensor& t, double shift, double scale);

}  // namespace gaic::nd
