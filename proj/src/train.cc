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

#include "gaic/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gaic/ops.h"

namespace gaic {

std::pair<double, double> MosStatistics(const std::vector<TrainingExample>& examples) {
  double sum = 0.0;
  size_t n = 0;
  for (const TrainingExample& ex : examples) {
    for (double m : ex.mos) {
      sum += m;
      ++n;
    }
  }
  if (n == 0) throw std::domain_error("training set has no annotated crops");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const TrainingExample& ex : examples) {
    for (double m : ex.mos) ss += (m - mean) * (m - mean);
  }
  const double std = std::sqrt(ss / static_cast<double>(n));
  return {mean, std > 0.0 ? std : 1.0};
}

std::vector<int> SampleCrops(std::mt19937_64& rng, int available, int count) {
  if (available < 1) throw std::domain_error("image has no annotated crops");
  std::vector<int> out;
  out.reserve(static_cast<size_t>(count));
  if (available >= count) {
    // Partial Fisher-Yates.
    std::vector<int> pool(static_cast<size_t>(available));
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < count; ++i) {
      const auto j = i + static_cast<int>(UniformIndex(rng, static_cast<uint64_t>(available - i)));
      std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
      out.push_back(pool[static_cast<size_t>(i)]);
    }
  } else {
    for (int i = 0; i < count; ++i) {
      out.push_back(static_cast<int>(UniformIndex(rng, static_cast<uint64_t>(available))));
    }
  }
  return out;
}

Image Augment(const Image& image, std::mt19937_64& rng) {
  const double contrast = 0.8 + 0.4 * UniformReal(rng);
  const double saturation = 0.8 + 0.4 * UniformReal(rng);
  double mean = 0.0;
  for (double p : image.pixels) mean += p;
  mean /= static_cast<double>(image.pixels.size());
  Image out = image;
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      double gray = 0.0;
      for (int ch = 0; ch < Image::kChannels; ++ch) gray += out.at(r, c, ch);
      gray /= Image::kChannels;
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        double v = gray + saturation * (out.at(r, c, ch) - gray);
        v = mean + contrast * (v - mean);
        out.at(r, c, ch) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return out;
}

CropModel Train(const std::vector<TrainingExample>& examples,
                const ModelConfig& config, uint64_t seed, TrainLog* log,
                const EpochCallback& on_epoch) {
  if (examples.empty()) throw std::domain_error("training set is empty");
  for (const TrainingExample& ex : examples) {
    if (ex.crops.empty()) throw std::domain_error("training image without crops");
    if (ex.crops.size() != ex.mos.size()) {
      throw std::domain_error("crops and MOS lists differ in length");
    }
    for (const CropBox& c : ex.crops) {
      if (!c.IsValidFor(ex.image.dims())) throw std::domain_error("crop outside its image");
    }
  }
  config.Validate();

  CropModel model(config, seed);
  const auto [mean, std] = MosStatistics(examples);
  model.SetMosNormalization(mean, std);

  // Resizing is deterministic, so it is done once per image.
  std::vector<ResizedImage> resized;
  if (!config.augment) {
    resized.reserve(examples.size());
    for (const TrainingExample& ex : examples) {
      resized.push_back(ResizeShortSide(ex.image, config.input_short_side));
    }
  }

  std::vector<nd::Tensor> params = model.Parameters();
  nd::Adam adam(params, {.learning_rate = config.lr});
  // Separate stream from the one that initialised the weights.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<size_t> order(examples.size());
  if (log) {
    log->epoch_loss.clear();
    log->mos_mean = mean;
    log->mos_std = std;
  }

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    Shuffle(order, rng);
    double loss_sum = 0.0;
    for (size_t idx : order) {
      const TrainingExample& ex = examples[idx];
      const std::vector<int> pick =
          SampleCrops(rng, static_cast<int>(ex.crops.size()), config.crops_per_batch);
      std::vector<CropBox> crops;
      std::vector<double> target;
      for (int p : pick) {
        crops.push_back(ex.crops[static_cast<size_t>(p)]);
        target.push_back((ex.mos[static_cast<size_t>(p)] - mean) / std);
      }
      ResizedImage augmented;
      if (config.augment) {
        augmented = ResizeShortSide(Augment(ex.image, rng), config.input_short_side);
      }
      adam.ZeroGrad();
      const FeatureMap features =
          model.ExtractFeatures(config.augment ? augmented : resized[idx]);
      const nd::Tensor pred = model.ScoreHead(features, crops);
      const auto B = static_cast<int64_t>(crops.size());
      const nd::Tensor loss =
          nd::HuberLoss(pred, nd::Tensor::FromData({B, 1}, std::move(target)), config.delta);
      nd::Backward(loss);
      adam.Step();
      loss_sum += loss.item();
    }
    const double epoch_loss = loss_sum / static_cast<double>(examples.size());
    if (log) log->epoch_loss.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  model.ResetFeaturePasses();
  return model;
}

}  // namespace gaic
