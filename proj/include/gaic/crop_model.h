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

#include <atomic>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaic/grid_anchor.h"
#include "gaic/image.h"
#include "gaic/optim.h"
#include "gaic/tensor.h"

namespace gaic {

struct ModelConfig {
  int backbone_channels = 32;
  int backbone_stride = 16;  // 8 or 16
  int align_size = 9;        // s
  int cdim = 8;
  int fc_width = 128;
  int input_short_side = 256;
  double delta = 1.0;
  double lr = 1e-4;
  int epochs = 40;
  int crops_per_batch = 64;
  bool augment = false;  // random contrast/saturation in [0.8, 1.2]

  void Validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Backbone output for one image plus the exact mapping from original-image
// pixels to feature cells.
struct FeatureMap {
  nd::Tensor tensor;        // [1, C, H_f, W_f]
  double cell_rows = 1.0;   // original-image rows per feature cell
  double cell_cols = 1.0;   // original-image columns per feature cell

  int64_t channels() const { return tensor.dim(1); }
  int64_t height() const { return tensor.dim(2); }
  int64_t width() const { return tensor.dim(3); }
};

// A crop's extent in continuous feature coordinates, where integer
// coordinates are cell centres. Pixel rows x1..x2 (inclusive) span
// [x1 - 1, x2] in continuous image coordinates.
struct FeatureRect {
  double top, left, bottom, right;
};
FeatureRect ToFeatureRect(const CropBox& crop, const FeatureMap& features);

// s x s bilinear samples (one per cell centre) over the crop. [B, C, s, s].
nd::Tensor RoiAlign(const FeatureMap& features, std::span<const CropBox> crops,
                    int s);
// Samples over the whole map after zeroing every cell whose centre lies in
// the crop's feature rectangle. [B, C, s, s].
nd::Tensor RodAlign(const FeatureMap& features, std::span<const CropBox> crops,
                    int s);

struct CropScore {
  int index = 0;
  double score = 0.0;  // normalized-MOS units
};

struct ScoreTiming {
  double resize_seconds = 0.0;
  double feature_seconds = 0.0;
  double head_seconds = 0.0;
  double total_seconds = 0.0;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backbone (conv stack) + 1x1 channel reduction + RoI/RoD alignment + FC head.
class CropModel {
 public:
  CropModel(const ModelConfig& config, uint64_t seed);
  CropModel(CropModel&& other) noexcept;
  CropModel& operator=(CropModel&& other) noexcept;
  CropModel(const CropModel&) = delete;
  CropModel& operator=(const CropModel&) = delete;

  const ModelConfig& config() const { return config_; }

  // Image tensor is [1, 3, H, W] in [0, 1] pixel units; scales are resized
  // extent / original extent.
  FeatureMap ExtractFeatures(const nd::Tensor& image, double row_scale,
                             double col_scale) const;
  FeatureMap ExtractFeatures(const ResizedImage& resized) const;

  // Predicted scores [B, 1] for crops given in original-image pixels.
  nd::Tensor ScoreHead(const FeatureMap& features,
                       std::span<const CropBox> crops) const;

  // One backbone pass, then every candidate through the head. Output order
  // matches the input order. Empty input returns empty without a pass.
  std::vector<CropScore> ScoreCrops(const Image& image,
                                    std::span<const CropBox> candidates,
                                    ScoreTiming* timing = nullptr) const;

  int64_t feature_passes() const { return feature_passes_.load(); }
  void ResetFeaturePasses() { feature_passes_ = 0; }

  std::vector<nd::Tensor> Parameters() const;
  nd::NamedTensors NamedParameters() const;
  // Copies values from `tensors` (names and shapes must match).
  void LoadParameters(const nd::NamedTensors& tensors);

  double mos_mean() const { return mos_mean_; }
  double mos_std() const { return mos_std_; }
  void SetMosNormalization(double mean, double std);
  double ToMos(double normalized) const { return normalized * mos_std_ + mos_mean_; }

  static nd::Tensor ImageTensor(const Image& image);

 private:
  struct Layer {
    nd::Tensor weight;
    nd::Tensor bias;
    int stride = 1;
  };

  ModelConfig config_;
  std::vector<Layer> backbone_;
  Layer reduce_;
  Layer fc1_, fc2_, out_;
  double mos_mean_ = 0.0;
  double mos_std_ = 1.0;
  mutable std::atomic<int64_t> feature_passes_{0};
};

// Top-k candidates by predicted score; equal scores keep canonical order.
std::vector<CropBox> PredictTopK(const CropModel& model, const Image& image,
                                 const GridSpec& spec, int k);
// Best candidate with |W/H - ratio| <= tol * ratio. Throws NotFoundError
// when the band is empty.
CropBox PredictBestForAspect(const CropModel& model, const Image& image,
                             const GridSpec& spec, double ratio,
                             double tol = 0.05);

// Binary parameter container at `path` plus a JSON sidecar at path + ".json"
// holding the config, MOS statistics and the concat order.
void SaveCheckpoint(const CropModel& model, const std::string& path);
CropModel LoadCheckpoint(const std::string& path);
std::string ModelConfigToJson(const ModelConfig& config);
ModelConfig ModelConfigFromJson(const std::string& json);

}  // namespace gaic
