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
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "gaic/crop_model.h"
#include "gaic/random.h"

namespace gaic {

// One training image with its annotated crops (original-image pixels).
struct TrainingExample {
  Image image;
  std::vector<CropBox> crops;
  std::vector<double> mos;  // parallel to crops
};

struct TrainLog {
  std::vector<double> epoch_loss;  // mean Huber loss per epoch
  double mos_mean = 0.0;
  double mos_std = 1.0;
};

// Mean and population std of every crop MOS in `examples`. A constant set
// reports std 1 so normalization is a pure shift.
std::pair<double, double> MosStatistics(const std::vector<TrainingExample>& examples);

// Crop indices for one step: without replacement when the image has at
// least `count` crops, with replacement otherwise.
std::vector<int> SampleCrops(std::mt19937_64& rng, int available, int count);

// Random contrast and saturation scaling by factors in [0.8, 1.2].
Image Augment(const Image& image, std::mt19937_64& rng);

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

// Adam + Huber training. Each epoch visits every image once in a seeded
// random order; one image and its sampled crops form one step.
CropModel Train(const std::vector<TrainingExample>& examples,
                const ModelConfig& config, uint64_t seed,
                TrainLog* log = nullptr, const EpochCallback& on_epoch = {});

}  // namespace gaic
