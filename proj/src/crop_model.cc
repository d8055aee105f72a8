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

#include "gaic/crop_model.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "gaic/ops.h"
#include "gaic/random.h"
#include "json.hpp"

namespace gaic {

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

// Per-layer strides of the four 3x3 conv + relu blocks. Block 1 is a single
// downsampling conv. Blocks 2 to 4 add a stride-1 conv after the downsampling
// one, which widens the receptive field where it is cheap. At stride 8 the
// last block keeps resolution.
std::vector<int> LayerStrides(int backbone_stride) {
  const int last = backbone_stride == 16 ? 2 : 1;
  return {2, 2, 1, 2, 1, last, 1};
}

nd::Tensor RandomNormal(nd::Shape shape, double stddev, std::mt19937_64& rng) {
  std::vector<double> data(static_cast<size_t>(nd::NumElements(shape)));
  for (double& v : data) v = stddev * StandardNormal(rng);
  return nd::Tensor::FromData(std::move(shape), std::move(data), true);
}

double ClampCoord(double v, int64_t extent) {
  return std::clamp(v, 0.0, static_cast<double>(extent - 1));
}

void RequireAlignSize(int s) {
  if (s < 1) throw std::domain_error("align: s must be positive");
}

}  // namespace

void ModelConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::domain_error(std::string("model config: ") + what);
  };
  require(backbone_channels >= 1, "backbone_channels must be positive");
  require(backbone_stride == 8 || backbone_stride == 16, "backbone_stride must be 8 or 16");
  require(align_size >= 3, "align_size must be >= 3");
  require(cdim >= 1, "cdim must be >= 1");
  require(fc_width >= 1, "fc_width must be positive");
  require(input_short_side >= backbone_stride, "input_short_side below the stride");
  require(delta > 0.0, "delta must be positive");
  require(lr > 0.0, "lr must be positive");
  require(epochs >= 1, "epochs must be positive");
  require(crops_per_batch >= 1, "crops_per_batch must be positive");
}

FeatureRect ToFeatureRect(const CropBox& crop, const FeatureMap& features) {
  return {(crop.x1 - 1) / features.cell_rows - 0.5,
          (crop.y1 - 1) / features.cell_cols - 0.5,
          crop.x2 / features.cell_rows - 0.5, crop.y2 / features.cell_cols - 0.5};
}

namespace {

// Sample taps of both alignment blocks for one crop at a time. Nothing
// crop-sized is stored: backward rebuilds the same taps, which costs far
// less than keeping B * s * s of them alive between the passes.
class AlignPlan {
 public:
  AlignPlan(const FeatureMap& features, int s)
      : features_(features), s_(s), H_(features.height()), W_(features.width()) {
    RequireAlignSize(s);
    // Sample positions over the whole image region are crop-independent.
    for (int i = 0; i < s; ++i) {
      const nd::AxisTap row =
          nd::ComputeAxisTap(ClampCoord(-0.5 + (i + 0.5) * static_cast<double>(H_) / s, H_), H_);
      for (int j = 0; j < s; ++j) {
        const nd::AxisTap col =
            nd::ComputeAxisTap(ClampCoord(-0.5 + (j + 0.5) * static_cast<double>(W_) / s, W_), W_);
        grid_.push_back(nd::CombineAxisTaps(row, col, W_));
      }
    }
    rows_.resize(static_cast<size_t>(s));
    cols_.resize(static_cast<size_t>(s));
    row_in_.resize(static_cast<size_t>(H_));
    col_in_.resize(static_cast<size_t>(W_));
  }

  // s * s bilinear taps over the crop, one per cell centre.
  void RoiTaps(const CropBox& crop, nd::BilinearTaps* out) {
    const FeatureRect r = ToFeatureRect(crop, features_);
    const double ch = (r.bottom - r.top) / s_;
    const double cw = (r.right - r.left) / s_;
    for (int i = 0; i < s_; ++i) {
      rows_[static_cast<size_t>(i)] = nd::ComputeAxisTap(ClampCoord(r.top + (i + 0.5) * ch, H_), H_);
      cols_[static_cast<size_t>(i)] =
          nd::ComputeAxisTap(ClampCoord(r.left + (i + 0.5) * cw, W_), W_);
    }
    for (const nd::AxisTap& row : rows_) {
      for (const nd::AxisTap& col : cols_) *out++ = nd::CombineAxisTaps(row, col, W_);
    }
  }

  // Whole-map taps with zero weight on every cell whose centre lies in the
  // crop's feature rectangle.
  void RodTaps(const CropBox& crop, nd::BilinearTaps* out) {
    const FeatureRect r = ToFeatureRect(crop, features_);
    for (int64_t k = 0; k < H_; ++k) {
      const double c = static_cast<double>(k);
      row_in_[static_cast<size_t>(k)] = c >= r.top && c <= r.bottom;
    }
    for (int64_t k = 0; k < W_; ++k) {
      const double c = static_cast<double>(k);
      col_in_[static_cast<size_t>(k)] = c >= r.left && c <= r.right;
    }
    for (nd::BilinearTaps t : grid_) {
      for (int q = 0; q < 4; ++q) {
        const int64_t flat = t.index[q];
        if (row_in_[static_cast<size_t>(flat / W_)] && col_in_[static_cast<size_t>(flat % W_)]) {
          t.weight[q] = 0.0;
        }
      }
      *out++ = t;
    }
  }

 private:
  const FeatureMap& features_;
  int s_;
  int64_t H_, W_;
  std::vector<nd::BilinearTaps> grid_;
  std::vector<nd::AxisTap> rows_, cols_;
  std::vector<char> row_in_, col_in_;
};

enum AlignBlock : unsigned { kRoi = 1, kRod = 2 };

// [B, n * C, s, s] with the selected blocks stacked along channels, RoI
// before RoD.
nd::Tensor Align(const FeatureMap& features, std::span<const CropBox> crops, int s,
                 unsigned blocks) {
  const nd::Tensor& F = features.tensor;
  if (F.rank() != 4 || F.dim(0) != 1) {
    throw std::domain_error("align: feature tensor must be [1, C, H, W]");
  }
  const int64_t B = static_cast<int64_t>(crops.size());
  const int64_t C = F.dim(1), HW = F.dim(2) * F.dim(3);
  const int64_t ss = static_cast<int64_t>(s) * s;
  const int64_t n = ((blocks & kRoi) ? 1 : 0) + ((blocks & kRod) ? 1 : 0);
  // Visits every (crop, block) with its taps; `block` is the output block.
  auto for_each_block = [=](const FeatureMap& f, std::span<const CropBox> boxes, auto&& body) {
    AlignPlan plan(f, s);
    std::vector<nd::BilinearTaps> taps(static_cast<size_t>(ss));
    for (int64_t b = 0; b < B; ++b) {
      int64_t block = 0;
      if (blocks & kRoi) {
        plan.RoiTaps(boxes[static_cast<size_t>(b)], taps.data());
        body(b, block++, taps);
      }
      if (blocks & kRod) {
        plan.RodTaps(boxes[static_cast<size_t>(b)], taps.data());
        body(b, block++, taps);
      }
    }
  };

  std::vector<double> out(static_cast<size_t>(B * n * C * ss));
  const double* fdata = F.data().data();
  for_each_block(features, crops, [&](int64_t b, int64_t block, const auto& taps) {
    double* dst = out.data() + (b * n + block) * C * ss;
    for (int64_t c = 0; c < C; ++c) {
      const double* plane = fdata + c * HW;
      for (int64_t k = 0; k < ss; ++k, ++dst) {
        const nd::BilinearTaps& t = taps[static_cast<size_t>(k)];
        *dst = t.weight[0] * plane[t.index[0]] + t.weight[1] * plane[t.index[1]] +
               t.weight[2] * plane[t.index[2]] + t.weight[3] * plane[t.index[3]];
      }
    }
  });

  FeatureMap geometry;  // backward only needs the cell sizes and extents
  geometry.tensor = nd::Tensor::Zeros({1, 1, F.dim(2), F.dim(3)});
  geometry.cell_rows = features.cell_rows;
  geometry.cell_cols = features.cell_cols;
  std::vector<CropBox> kept(crops.begin(), crops.end());
  return nd::MakeResult(
      {B, n * C, s, s}, std::move(out), {F},
      [geometry, kept, for_each_block, n, C, HW, ss](nd::Node& self) {
        auto& g = self.parents[0]->EnsureGrad();
        for_each_block(geometry, kept, [&](int64_t b, int64_t block, const auto& taps) {
          const double* src = self.grad.data() + (b * n + block) * C * ss;
          for (int64_t c = 0; c < C; ++c) {
            double* plane = g.data() + c * HW;
            for (int64_t k = 0; k < ss; ++k, ++src) {
              const nd::BilinearTaps& t = taps[static_cast<size_t>(k)];
              for (int q = 0; q < 4; ++q) plane[t.index[q]] += t.weight[q] * *src;
            }
          }
        });
      });
}

}  // namespace

nd::Tensor RoiAlign(const FeatureMap& features, std::span<const CropBox> crops, int s) {
  return Align(features, crops, s, kRoi);
}

nd::Tensor RodAlign(const FeatureMap& features, std::span<const CropBox> crops, int s) {
  return Align(features, crops, s, kRod);
}

CropModel::CropModel(const ModelConfig& config, uint64_t seed) : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  auto conv = [&](int in, int out, int k, int stride) {
    Layer l;
    l.weight = RandomNormal({out, in, k, k}, std::sqrt(2.0 / (in * k * k)), rng);
    l.bias = nd::Tensor::Zeros({out}, true);
    l.stride = stride;
    return l;
  };
  auto fc = [&](int in, int out, double gain) {
    Layer l;
    l.weight = RandomNormal({out, in}, std::sqrt(gain / in), rng);
    l.bias = nd::Tensor::Zeros({out}, true);
    return l;
  };
  const int C = config_.backbone_channels;
  int in = Image::kChannels;
  for (int stride : LayerStrides(config_.backbone_stride)) {
    backbone_.push_back(conv(in, C, 3, stride));
    in = C;
  }
  reduce_ = conv(C, config_.cdim, 1, 1);
  const int s = config_.align_size;
  fc1_ = fc(2 * config_.cdim * s * s, config_.fc_width, 2.0);
  fc2_ = fc(config_.fc_width, config_.fc_width, 2.0);
  out_ = fc(config_.fc_width, 1, 1.0);
}

CropModel::CropModel(CropModel&& other) noexcept
    : config_(other.config_),
      backbone_(std::move(other.backbone_)),
      reduce_(std::move(other.reduce_)),
      fc1_(std::move(other.fc1_)),
      fc2_(std::move(other.fc2_)),
      out_(std::move(other.out_)),
      mos_mean_(other.mos_mean_),
      mos_std_(other.mos_std_),
      feature_passes_(other.feature_passes_.load()) {}

CropModel& CropModel::operator=(CropModel&& other) noexcept {
  config_ = other.config_;
  backbone_ = std::move(other.backbone_);
  reduce_ = std::move(other.reduce_);
  fc1_ = std::move(other.fc1_);
  fc2_ = std::move(other.fc2_);
  out_ = std::move(other.out_);
  mos_mean_ = other.mos_mean_;
  mos_std_ = other.mos_std_;
  feature_passes_ = other.feature_passes_.load();
  return *this;
}

nd::Tensor CropModel::ImageTensor(const Image& image) {
  const int64_t H = image.height, W = image.width;
  std::vector<double> data(static_cast<size_t>(3 * H * W));
  for (int64_t r = 0; r < H; ++r) {
    for (int64_t c = 0; c < W; ++c) {
      for (int64_t ch = 0; ch < 3; ++ch) {
        data[static_cast<size_t>((ch * H + r) * W + c)] =
            image.pixels[static_cast<size_t>((r * W + c) * 3 + ch)];
      }
    }
  }
  return nd::Tensor::FromData({1, 3, H, W}, std::move(data));
}

FeatureMap CropModel::ExtractFeatures(const nd::Tensor& image, double row_scale,
                                      double col_scale) const {
  ++feature_passes_;
  nd::Tensor x = nd::Affine(image, 0.5, 2.0);
  for (const Layer& l : backbone_) {
    x = nd::Relu(nd::Conv2d(x, l.weight, l.bias, l.stride, 1));
  }
  FeatureMap fm;
  // Feature cell r covers resized rows [r * stride, (r + 1) * stride).
  fm.cell_rows = config_.backbone_stride / row_scale;
  fm.cell_cols = config_.backbone_stride / col_scale;
  fm.tensor = std::move(x);
  return fm;
}

FeatureMap CropModel::ExtractFeatures(const ResizedImage& resized) const {
  return ExtractFeatures(ImageTensor(resized.image), resized.row_scale,
                         resized.col_scale);
}

nd::Tensor CropModel::ScoreHead(const FeatureMap& features,
                                std::span<const CropBox> crops) const {
  FeatureMap reduced = features;
  reduced.tensor = nd::Conv1x1Reduce(features.tensor, reduce_.weight, reduce_.bias);
  const int s = config_.align_size;
  // Concat order is RoI first, RoD second; checkpoints record it.
  nd::Tensor aligned = nd::ConcatChannels(RoiAlign(reduced, crops, s),
                                          RodAlign(reduced, crops, s));
  nd::Tensor h = nd::Relu(nd::FullyConnected(aligned, fc1_.weight, fc1_.bias));
  h = nd::Relu(nd::FullyConnected(h, fc2_.weight, fc2_.bias));
  return nd::FullyConnected(h, out_.weight, out_.bias);
}

std::vector<CropScore> CropModel::ScoreCrops(const Image& image,
                                             std::span<const CropBox> candidates,
                                             ScoreTiming* timing) const {
  if (candidates.empty()) return {};
  for (const CropBox& c : candidates) {
    if (!c.IsValidFor(image.dims())) throw std::domain_error("score: crop outside image");
  }
  nd::NoGradGuard no_grad;
  const auto t0 = Clock::now();
  const ResizedImage resized = ResizeShortSide(image, config_.input_short_side);
  const auto t1 = Clock::now();
  const FeatureMap features = ExtractFeatures(resized);
  const auto t2 = Clock::now();
  const nd::Tensor scores = ScoreHead(features, candidates);
  const auto t3 = Clock::now();
  if (timing) {
    timing->resize_seconds = Seconds(t0, t1);
    timing->feature_seconds = Seconds(t1, t2);
    timing->head_seconds = Seconds(t2, t3);
    timing->total_seconds = Seconds(t0, t3);
  }
  std::vector<CropScore> out(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    out[i] = {static_cast<int>(i), scores.data()[i]};
  }
  return out;
}

std::vector<nd::Tensor> CropModel::Parameters() const {
  std::vector<nd::Tensor> out;
  for (const auto& [name, t] : NamedParameters()) out.push_back(t);
  return out;
}

nd::NamedTensors CropModel::NamedParameters() const {
  nd::NamedTensors out;
  for (size_t i = 0; i < backbone_.size(); ++i) {
    out.emplace_back("backbone." + std::to_string(i) + ".weight", backbone_[i].weight);
    out.emplace_back("backbone." + std::to_string(i) + ".bias", backbone_[i].bias);
  }
  out.emplace_back("reduce.weight", reduce_.weight);
  out.emplace_back("reduce.bias", reduce_.bias);
  out.emplace_back("head.fc1.weight", fc1_.weight);
  out.emplace_back("head.fc1.bias", fc1_.bias);
  out.emplace_back("head.fc2.weight", fc2_.weight);
  out.emplace_back("head.fc2.bias", fc2_.bias);
  out.emplace_back("head.out.weight", out_.weight);
  out.emplace_back("head.out.bias", out_.bias);
  return out;
}

void CropModel::LoadParameters(const nd::NamedTensors& tensors) {
  nd::NamedTensors mine = NamedParameters();
  if (mine.size() != tensors.size()) {
    throw std::runtime_error("checkpoint has " + std::to_string(tensors.size()) +
                             " tensors, model expects " + std::to_string(mine.size()));
  }
  for (size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].first != tensors[i].first ||
        mine[i].second.shape() != tensors[i].second.shape()) {
      throw std::runtime_error("checkpoint tensor mismatch at " + mine[i].first);
    }
    std::span<double> dst = mine[i].second.mutable_data();
    std::copy(tensors[i].second.data().begin(), tensors[i].second.data().end(),
              dst.begin());
  }
}

void CropModel::SetMosNormalization(double mean, double std) {
  if (!std::isfinite(mean) || !(std > 0.0)) {
    throw std::domain_error("MOS normalization needs a finite mean and positive std");
  }
  mos_mean_ = mean;
  mos_std_ = std;
}

std::vector<CropBox> PredictTopK(const CropModel& model, const Image& image,
                                 const GridSpec& spec, int k) {
  if (k < 1) throw std::domain_error("top-k: k must be >= 1");
  const std::vector<CropBox> boxes = CandidateBoxes(image.dims(), spec);
  const std::vector<CropScore> scores = model.ScoreCrops(image, boxes);
  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<size_t>(a)].score > scores[static_cast<size_t>(b)].score;
  });
  std::vector<CropBox> out;
  for (size_t i = 0; i < order.size() && static_cast<int>(i) < k; ++i) {
    out.push_back(boxes[static_cast<size_t>(order[i])]);
  }
  return out;
}

CropBox PredictBestForAspect(const CropModel& model, const Image& image,
                             const GridSpec& spec, double ratio, double tol) {
  if (!(ratio > 0.0) || !(tol >= 0.0)) {
    throw std::domain_error("aspect: ratio must be positive and tol non-negative");
  }
  std::vector<CropBox> band;
  for (const CropBox& b : CandidateBoxes(image.dims(), spec)) {
    if (std::fabs(b.AspectRatio() - ratio) <= tol * ratio) band.push_back(b);
  }
  if (band.empty()) {
    throw NotFoundError("no candidate within the aspect-ratio tolerance band");
  }
  const std::vector<CropScore> scores = model.ScoreCrops(image, band);
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].score > scores[best].score) best = i;
  }
  return band[best];
}

std::string ModelConfigToJson(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["backbone_channels"] = c.backbone_channels;
  j["backbone_stride"] = c.backbone_stride;
  j["align_size"] = c.align_size;
  j["cdim"] = c.cdim;
  j["fc_width"] = c.fc_width;
  j["input_short_side"] = c.input_short_side;
  j["delta"] = c.delta;
  j["lr"] = c.lr;
  j["epochs"] = c.epochs;
  j["crops_per_batch"] = c.crops_per_batch;
  j["augment"] = c.augment;
  return j.dump();
}

ModelConfig ModelConfigFromJson(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ModelConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("backbone_channels", c.backbone_channels);
  get("backbone_stride", c.backbone_stride);
  get("align_size", c.align_size);
  get("cdim", c.cdim);
  get("fc_width", c.fc_width);
  get("input_short_side", c.input_short_side);
  get("delta", c.delta);
  get("lr", c.lr);
  get("epochs", c.epochs);
  get("crops_per_batch", c.crops_per_batch);
  get("augment", c.augment);
  c.Validate();
  return c;
}

void SaveCheckpoint(const CropModel& model, const std::string& path) {
  nd::SaveTensors(model.NamedParameters(), path);
  nlohmann::ordered_json side;
  side["config"] = nlohmann::ordered_json::parse(ModelConfigToJson(model.config()));
  side["mos_mean"] = model.mos_mean();
  side["mos_std"] = model.mos_std();
  side["concat_order"] = "roi_rod";
  std::ofstream f(path + ".json", std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path + ".json");
  f << side.dump(2) << "\n";
}

CropModel LoadCheckpoint(const std::string& path) {
  std::ifstream f(path + ".json");
  if (!f) throw std::runtime_error("missing checkpoint sidecar " + path + ".json");
  std::stringstream ss;
  ss << f.rdbuf();
  const nlohmann::json side = nlohmann::json::parse(ss.str());
  if (side.value("concat_order", std::string()) != "roi_rod") {
    throw std::runtime_error("unsupported concat order in " + path + ".json");
  }
  CropModel model(ModelConfigFromJson(side.at("config").dump()), 0);
  model.LoadParameters(nd::LoadTensors(path));
  model.SetMosNormalization(side.at("mos_mean").get<double>(),
                            side.at("mos_std").get<double>());
  return model;
}

}  // namespace gaic
