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

#include "gaic/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gaic::nd {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

void Require(bool cond, const std::string& what) {
  if (!cond) throw std::domain_error(what);
}

struct ConvGeometry {
  int64_t N, C, H, W, O, k, Ho, Wo;
  int stride, pad;
  int64_t Patch() const { return C * k * k; }
  int64_t OutPlane() const { return Ho * Wo; }
};

void Im2Col(const double* in, const ConvGeometry& g, double* col) {
  const int64_t plane = g.OutPlane();
  for (int64_t c = 0; c < g.C; ++c) {
    const double* src = in + c * g.H * g.W;
    for (int64_t ki = 0; ki < g.k; ++ki) {
      for (int64_t kj = 0; kj < g.k; ++kj) {
        double* dst = col + ((c * g.k + ki) * g.k + kj) * plane;
        for (int64_t oy = 0; oy < g.Ho; ++oy) {
          const int64_t iy = oy * g.stride - g.pad + ki;
          double* row = dst + oy * g.Wo;
          if (iy < 0 || iy >= g.H) {
            std::fill(row, row + g.Wo, 0.0);
            continue;
          }
          const double* srow = src + iy * g.W;
          for (int64_t ox = 0; ox < g.Wo; ++ox) {
            const int64_t ix = ox * g.stride - g.pad + kj;
            row[ox] = (ix >= 0 && ix < g.W) ? srow[ix] : 0.0;
          }
        }
      }
    }
  }
}

void Col2ImAccumulate(const double* col, const ConvGeometry& g, double* in) {
  const int64_t plane = g.OutPlane();
  for (int64_t c = 0; c < g.C; ++c) {
    double* dst = in + c * g.H * g.W;
    for (int64_t ki = 0; ki < g.k; ++ki) {
      for (int64_t kj = 0; kj < g.k; ++kj) {
        const double* src = col + ((c * g.k + ki) * g.k + kj) * plane;
        for (int64_t oy = 0; oy < g.Ho; ++oy) {
          const int64_t iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.H) continue;
          const double* row = src + oy * g.Wo;
          double* drow = dst + iy * g.W;
          for (int64_t ox = 0; ox < g.Wo; ++ox) {
            const int64_t ix = ox * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.W) drow[ix] += row[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor Conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding) {
  Require(input.rank() == 4, "conv2d: input must be NCHW");
  Require(weight.rank() == 4, "conv2d: weight must be [O, C, k, k]");
  Require(bias.rank() == 1 && bias.dim(0) == weight.dim(0),
          "conv2d: bias must be [O]");
  Require(weight.dim(1) == input.dim(1), "conv2d: channel count mismatch");
  Require(weight.dim(2) == weight.dim(3) && weight.dim(2) % 2 == 1,
          "conv2d: kernel must be square with odd size");
  Require(stride >= 1 && padding >= 0, "conv2d: bad stride or padding");

  ConvGeometry g{};
  g.N = input.dim(0);
  g.C = input.dim(1);
  g.H = input.dim(2);
  g.W = input.dim(3);
  g.O = weight.dim(0);
  g.k = weight.dim(2);
  g.stride = stride;
  g.pad = padding;
  Require(g.H + 2 * padding >= g.k && g.W + 2 * padding >= g.k,
          "conv2d: kernel larger than padded input");
  g.Ho = (g.H + 2 * padding - g.k) / stride + 1;
  g.Wo = (g.W + 2 * padding - g.k) / stride + 1;

  const bool direct = g.k == 1 && stride == 1 && padding == 0;
  const int64_t patch = g.Patch();
  const int64_t plane = g.OutPlane();

  // Patches are kept for the weight gradient; a 1x1 stride-1 convolution
  // reads the input directly.
  auto cols = std::make_shared<std::vector<double>>();
  if (!direct) cols->resize(static_cast<size_t>(g.N * patch * plane));

  std::vector<double> out(static_cast<size_t>(g.N * g.O * plane));
  ConstMatMap w(weight.data().data(), g.O, patch);
  for (int64_t n = 0; n < g.N; ++n) {
    const double* in_n = input.data().data() + n * g.C * g.H * g.W;
    const double* col = in_n;
    if (!direct) {
      double* dst = cols->data() + n * patch * plane;
      Im2Col(in_n, g, dst);
      col = dst;
    }
    MatMap o(out.data() + n * g.O * plane, g.O, plane);
    o.noalias() = w * ConstMatMap(col, patch, plane);
    for (int64_t oc = 0; oc < g.O; ++oc) o.row(oc).array() += bias.data()[oc];
  }

  return MakeResult(
      {g.N, g.O, g.Ho, g.Wo}, std::move(out), {input, weight, bias},
      [g, cols, direct](Node& self) {
        Node& in = *self.parents[0];
        Node& wt = *self.parents[1];
        Node& bs = *self.parents[2];
        const int64_t patch = g.Patch();
        const int64_t plane = g.OutPlane();
        std::vector<double> dcol;
        for (int64_t n = 0; n < g.N; ++n) {
          ConstMatMap dout(self.grad.data() + n * g.O * plane, g.O, plane);
          const double* col = direct ? in.value.data() + n * g.C * g.H * g.W
                                     : cols->data() + n * patch * plane;
          if (wt.requires_grad) {
            MatMap dw(wt.EnsureGrad().data(), g.O, patch);
            dw.noalias() += dout * ConstMatMap(col, patch, plane).transpose();
          }
          if (bs.requires_grad) {
            auto& db = bs.EnsureGrad();
            // Plain loop: Eigen's reduction order depends on the buffer address.
            for (int64_t oc = 0; oc < g.O; ++oc) {
              const double* row = self.grad.data() + (n * g.O + oc) * plane;
              double acc = 0.0;
              for (int64_t i = 0; i < plane; ++i) acc += row[i];
              db[static_cast<size_t>(oc)] += acc;
            }
          }
          if (in.requires_grad) {
            ConstMatMap w(wt.value.data(), g.O, patch);
            double* din = in.EnsureGrad().data() + n * g.C * g.H * g.W;
            if (direct) {
              MatMap dinm(din, patch, plane);
              dinm.noalias() += w.transpose() * dout;
            } else {
              dcol.resize(static_cast<size_t>(patch * plane));
              MatMap dc(dcol.data(), patch, plane);
              dc.noalias() = w.transpose() * dout;
              Col2ImAccumulate(dcol.data(), g, din);
            }
          }
        }
      });
}

Tensor Conv1x1Reduce(const Tensor& input, const Tensor& weight,
                     const Tensor& bias) {
  Require(weight.rank() == 4 && weight.dim(2) == 1 && weight.dim(3) == 1,
          "conv1x1: weight must be [O, C, 1, 1]");
  return Conv2d(input, weight, bias, 1, 0);
}

Tensor Relu(const Tensor& t) {
  std::vector<double> out(t.data().begin(), t.data().end());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return MakeResult(t.shape(), std::move(out), {t}, [](Node& self) {
    Node& in = *self.parents[0];
    auto& g = in.EnsureGrad();
    for (size_t i = 0; i < g.size(); ++i) {
      if (in.value[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Tensor FullyConnected(const Tensor& t, const Tensor& weight, const Tensor& bias) {
  Require(t.rank() >= 1, "fc: input needs a batch dimension");
  Require(weight.rank() == 2, "fc: weight must be [out, in]");
  const int64_t B = t.dim(0);
  const int64_t in_features = t.numel() / B;
  const int64_t out_features = weight.dim(0);
  Require(weight.dim(1) == in_features,
          "fc: weight expects " + std::to_string(weight.dim(1)) +
              " inputs, got " + std::to_string(in_features));
  Require(bias.rank() == 1 && bias.dim(0) == out_features, "fc: bias must be [out]");

  std::vector<double> out(static_cast<size_t>(B * out_features));
  MatMap o(out.data(), B, out_features);
  ConstMatMap x(t.data().data(), B, in_features);
  ConstMatMap w(weight.data().data(), out_features, in_features);
  o.noalias() = x * w.transpose();
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t j = 0; j < out_features; ++j) o(b, j) += bias.data()[j];
  }
  return MakeResult(
      {B, out_features}, std::move(out), {t, weight, bias},
      [B, in_features, out_features](Node& self) {
        Node& in = *self.parents[0];
        Node& wt = *self.parents[1];
        Node& bs = *self.parents[2];
        ConstMatMap dout(self.grad.data(), B, out_features);
        if (in.requires_grad) {
          MatMap dx(in.EnsureGrad().data(), B, in_features);
          dx.noalias() += dout * ConstMatMap(wt.value.data(), out_features, in_features);
        }
        if (wt.requires_grad) {
          MatMap dw(wt.EnsureGrad().data(), out_features, in_features);
          dw.noalias() += dout.transpose() * ConstMatMap(in.value.data(), B, in_features);
        }
        if (bs.requires_grad) {
          auto& db = bs.EnsureGrad();
          for (int64_t b = 0; b < B; ++b) {
            for (int64_t j = 0; j < out_features; ++j) {
              db[static_cast<size_t>(j)] += dout(b, j);
            }
          }
        }
      });
}

Tensor ConcatChannels(const Tensor& a, const Tensor& b) {
  Require(a.rank() == b.rank() && (a.rank() == 3 || a.rank() == 4),
          "concat: inputs must both be CHW or NCHW");
  const int axis = a.rank() == 4 ? 1 : 0;
  for (int d = 0; d < a.rank(); ++d) {
    if (d != axis) Require(a.dim(d) == b.dim(d), "concat: non-channel extents differ");
  }
  const int64_t outer = axis == 1 ? a.dim(0) : 1;
  const int64_t inner_a = a.numel() / outer;
  const int64_t inner_b = b.numel() / outer;

  Shape shape = a.shape();
  shape[static_cast<size_t>(axis)] += b.dim(axis);
  std::vector<double> out;
  out.reserve(static_cast<size_t>(a.numel() + b.numel()));
  for (int64_t o = 0; o < outer; ++o) {
    out.insert(out.end(), a.data().begin() + o * inner_a,
               a.data().begin() + (o + 1) * inner_a);
    out.insert(out.end(), b.data().begin() + o * inner_b,
               b.data().begin() + (o + 1) * inner_b);
  }
  return MakeResult(std::move(shape), std::move(out), {a, b},
                    [outer, inner_a, inner_b](Node& self) {
                      Node& pa = *self.parents[0];
                      Node& pb = *self.parents[1];
                      const int64_t stride = inner_a + inner_b;
                      for (int64_t o = 0; o < outer; ++o) {
                        const double* g = self.grad.data() + o * stride;
                        if (pa.requires_grad) {
                          double* da = pa.EnsureGrad().data() + o * inner_a;
                          for (int64_t i = 0; i < inner_a; ++i) da[i] += g[i];
                        }
                        if (pb.requires_grad) {
                          double* db = pb.EnsureGrad().data() + o * inner_b;
                          for (int64_t i = 0; i < inner_b; ++i) db[i] += g[inner_a + i];
                        }
                      }
                    });
}

AxisTap ComputeAxisTap(double v, int64_t extent) {
  if (!(v >= 0.0 && v <= static_cast<double>(extent - 1))) {
    throw std::domain_error("bilinear sample outside the feature map");
  }
  AxisTap t;
  t.lo = std::min<int64_t>(static_cast<int64_t>(v), extent - 1);
  t.hi = std::min<int64_t>(t.lo + 1, extent - 1);
  t.frac = v - static_cast<double>(t.lo);
  return t;
}

BilinearTaps CombineAxisTaps(const AxisTap& row, const AxisTap& col, int64_t W) {
  const double fx = row.frac, fy = col.frac;
  BilinearTaps taps{};
  taps.index[0] = row.lo * W + col.lo;
  taps.index[1] = row.lo * W + col.hi;
  taps.index[2] = row.hi * W + col.lo;
  taps.index[3] = row.hi * W + col.hi;
  taps.weight[0] = (1.0 - fx) * (1.0 - fy);
  taps.weight[1] = (1.0 - fx) * fy;
  taps.weight[2] = fx * (1.0 - fy);
  taps.weight[3] = fx * fy;
  return taps;
}

BilinearTaps ComputeBilinearTaps(double x, double y, int64_t H, int64_t W) {
  return CombineAxisTaps(ComputeAxisTap(x, H), ComputeAxisTap(y, W), W);
}

Tensor BilinearSample(const Tensor& map, double x, double y) {
  Require(map.rank() == 3, "bilinear sample: map must be CHW");
  const int64_t C = map.dim(0), H = map.dim(1), W = map.dim(2);
  const BilinearTaps taps = ComputeBilinearTaps(x, y, H, W);
  std::vector<double> out(static_cast<size_t>(C), 0.0);
  for (int64_t c = 0; c < C; ++c) {
    const double* plane = map.data().data() + c * H * W;
    double v = 0.0;
    for (int t = 0; t < 4; ++t) v += taps.weight[t] * plane[taps.index[t]];
    out[static_cast<size_t>(c)] = v;
  }
  return MakeResult({C}, std::move(out), {map}, [taps, C, H, W](Node& self) {
    auto& g = self.parents[0]->EnsureGrad();
    for (int64_t c = 0; c < C; ++c) {
      double* plane = g.data() + c * H * W;
      for (int t = 0; t < 4; ++t) {
        plane[taps.index[t]] += taps.weight[t] * self.grad[static_cast<size_t>(c)];
      }
    }
  });
}

Tensor HuberLoss(const Tensor& pred, const Tensor& target, double delta) {
  Require(pred.shape() == target.shape(), "huber: shape mismatch");
  Require(delta > 0.0, "huber: delta must be positive");
  const size_t B = static_cast<size_t>(pred.numel());
  double sum = 0.0;
  for (size_t i = 0; i < B; ++i) {
    const double e = target.data()[i] - pred.data()[i];
    const double a = std::fabs(e);
    sum += a <= delta ? 0.5 * e * e : delta * a - 0.5 * delta * delta;
  }
  return MakeResult({1}, {sum / static_cast<double>(B)}, {pred, target},
                    [delta, B](Node& self) {
                      Node& p = *self.parents[0];
                      Node& t = *self.parents[1];
                      const double scale = self.grad[0] / static_cast<double>(B);
                      for (size_t i = 0; i < B; ++i) {
                        const double d =
                            std::clamp(p.value[i] - t.value[i], -delta, delta) * scale;
                        if (p.requires_grad) p.EnsureGrad()[i] += d;
                        if (t.requires_grad) t.EnsureGrad()[i] -= d;
                      }
                    });
}

Tensor SquaredLoss(const Tensor& pred, const Tensor& target) {
  Require(pred.shape() == target.shape(), "squared loss: shape mismatch");
  const size_t B = static_cast<size_t>(pred.numel());
  double sum = 0.0;
  for (size_t i = 0; i < B; ++i) {
    const double e = target.data()[i] - pred.data()[i];
    sum += 0.5 * e * e;
  }
  return MakeResult({1}, {sum / static_cast<double>(B)}, {pred, target},
                    [B](Node& self) {
                      Node& p = *self.parents[0];
                      Node& t = *self.parents[1];
                      const double scale = self.grad[0] / static_cast<double>(B);
                      for (size_t i = 0; i < B; ++i) {
                        const double d = (p.value[i] - t.value[i]) * scale;
                        if (p.requires_grad) p.EnsureGrad()[i] += d;
                        if (t.requires_grad) t.EnsureGrad()[i] -= d;
                      }
                    });
}

Tensor Sum(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return MakeResult({1}, {s}, {t}, [](Node& self) {
    auto& g = self.parents[0]->EnsureGrad();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor Mean(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  const double n = static_cast<double>(t.numel());
  return MakeResult({1}, {s / n}, {t}, [n](Node& self) {
    auto& g = self.parents[0]->EnsureGrad();
    for (double& v : g) v += self.grad[0] / n;
  });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  Require(a.shape() == b.shape(), "mul: shape mismatch");
  std::vector<double> out(static_cast<size_t>(a.numel()));
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return MakeResult(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    // Snapshot values first: a and b may be the same node.
    const std::vector<double> va = pa.value;
    const std::vector<double> vb = pb.value;
    if (pa.requires_grad) {
      auto& g = pa.EnsureGrad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * vb[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.EnsureGrad();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * va[i];
    }
  });
}

Tensor Reshape(const Tensor& t, Shape shape) {
  Require(NumElements(shape) == t.numel(), "reshape: element count changes");
  std::vector<double> out(t.data().begin(), t.data().end());
  return MakeResult(std::move(shape), std::move(out), {t}, [](Node& self) {
    auto& g = self.parents[0]->EnsureGrad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor Affine(const Tensor& t, double shift, double scale) {
  std::vector<double> out(t.data().begin(), t.data().end());
  for (double& v : out) v = (v - shift) * scale;
  return MakeResult(t.shape(), std::move(out), {t}, [scale](Node& self) {
    auto& g = self.parents[0]->EnsureGrad();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * scale;
  });
}

}  // namespace gaic::nd
