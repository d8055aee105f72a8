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

#include <string>
#include <vector>

#include "gaic/crop_model.h"
#include "gaic/dataset.h"
#include "gaic/metrics.h"

namespace gaic {

// Which per-crop values count as groundtruth during evaluation.
enum class Groundtruth {
  kMos,      // stored MOS (human ratings or noisy synthetic scores)
  kPlanted,  // noise-free planted rule; needs a synthetic dataset
};

std::vector<double> GroundtruthScores(const Dataset& dataset, const AnnotatedImage& image,
                                      Groundtruth truth);

// Images of `dataset` named by `ids`, in the order given. Throws
// std::domain_error on an unknown id.
std::vector<const AnnotatedImage*> SelectImages(const Dataset& dataset,
                                                const std::vector<std::string>& ids);

// Model scores for every candidate of every selected image. Images are
// scored on `threads` workers; the result is in input order either way.
std::vector<std::vector<double>> PredictImages(const CropModel& model,
                                               const std::vector<const AnnotatedImage*>& images,
                                               const std::string& dataset_path, int threads);

// External predictions, one JSON object per line and image:
//   {"id": ..., "scores": [one per candidate, canonical order]}  or
//   {"id": ..., "crop": {"x1":..,"y1":..,"x2":..,"y2":..}}
// A file must use one form throughout.
struct PredictionFile {
  bool single_choice = false;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> scores;  // per-candidate form
  std::vector<CropBox> crops;               // single-choice form
};
PredictionFile ParsePredictions(const std::string& text);
PredictionFile LoadPredictions(const std::string& path);
std::string ScoresToPredictionLine(const std::string& id, const std::vector<double>& scores);

// Report over `images` from per-candidate scores aligned with them.
EvalReport EvaluateScores(const Dataset& dataset, const std::vector<const AnnotatedImage*>& images,
                          const std::vector<std::vector<double>>& scores, Groundtruth truth,
                          int threads);
// Report for one chosen box per image; boxes off the grid are projected to
// the candidate with the highest IoU.
EvalReport EvaluateChoices(const Dataset& dataset, const std::vector<const AnnotatedImage*>& images,
                           const std::vector<CropBox>& choices, Groundtruth truth);

// Fraction of images whose top-scored candidate is the planted best crop.
double PlantedTop1Rate(const std::vector<const AnnotatedImage*>& images,
                       const std::vector<std::vector<double>>& scores);

}  // namespace gaic
