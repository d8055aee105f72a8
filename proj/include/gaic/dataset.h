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
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gaic/grid_anchor.h"
#include "gaic/image.h"
#include "gaic/train.h"

namespace gaic {

// Malformed dataset content. The message names the line and field.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CropAnnotation {
  CropBox crop;
  std::vector<int> ratings;  // each in [1, 5]; may be empty while annotating
  // Mean of `ratings` when there are any. Synthetic crops carry a real-valued
  // MOS with no ratings.
  std::optional<double> mos;
  double rating_std = 0.0;  // population std of `ratings`
  bool planted_best = false;
};

struct AnnotatedImage {
  std::string id;
  ImageDims dims;
  std::string image_path;  // relative to the dataset file; may be empty
  std::optional<CropBox> subject;  // synthetic images only
  std::vector<CropAnnotation> crops;  // canonical candidate order
};

struct SyntheticRule {
  double a = 6.0;            // weight of the thirds-point distance
  double b = 4.0;            // weight of the cropped-out subject fraction
  double noise_sigma = 0.1;
  uint64_t seed = 0;
};

struct Dataset {
  int format_version = 1;
  GridSpec grid_spec;
  std::optional<SyntheticRule> synthetic_rule;
  std::vector<AnnotatedImage> images;
};

inline constexpr int kDatasetFormatVersion = 1;

// (mean, population std). Throws std::domain_error on an empty list.
std::pair<double, double> ComputeMos(const std::vector<int>& ratings);

// Fraction of rated crops whose rating std is below `threshold`.
double ConsistencyFraction(const Dataset& dataset, double threshold);

// JSON lines: a header line, then one line per image. Reals are written with
// nine significant digits, so a second save of a loaded file is identical.
Dataset ParseDataset(const std::string& text);
std::string SerializeDataset(const Dataset& dataset);
Dataset LoadDataset(const std::string& path);
void SaveDataset(const Dataset& dataset, const std::string& path);

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

// Seeded uniform split; both lists keep dataset order.
DatasetSplit SplitDataset(const Dataset& dataset, int test_count, uint64_t seed);

// Loads pixels for every image listed in `ids` and pairs them with crops that
// carry a MOS. `dataset_path` anchors relative image paths.
std::vector<TrainingExample> LoadTrainingExamples(const Dataset& dataset,
                                                  const std::string& dataset_path,
                                                  const std::vector<std::string>& ids);

// Image path resolved against the dataset file location.
std::string ResolveImagePath(const std::string& dataset_path,
                             const AnnotatedImage& image);

struct SyntheticOptions {
  int count = 200;
  int min_short_side = 200;
  int max_short_side = 280;
  double min_aspect = 0.75;  // W / H of the whole image
  double max_aspect = 1.5;
  SyntheticRule rule;
};

// Composition score of `crop` for a subject rectangle, before clamping and
// noise: 5 - a * thirds distance - b * cropped-out fraction.
double PlantedScore(const CropBox& crop, const CropBox& subject, const SyntheticRule& rule);
// Noise-free MOS: PlantedScore clamped to [1, 5].
double PlantedMos(const CropBox& crop, const CropBox& subject, const SyntheticRule& rule);

struct SyntheticDataset {
  Dataset dataset;
  std::vector<Image> images;  // parallel to dataset.images
};

// Smooth random fields with one bright subject rectangle each. Crops follow
// the candidate grid for `spec`; MOS is the planted rule plus seeded noise.
// Image paths are set to "<image_dir>/<id>.ppm" but nothing is written.
SyntheticDataset GenerateSynthetic(const SyntheticOptions& options,
                                   const GridSpec& spec,
                                   const std::string& image_dir = "images");

// Writes the images under the dataset's directory and the dataset file.
void WriteSyntheticDataset(const SyntheticDataset& synthetic, const std::string& path);

}  // namespace gaic
