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

#include <array>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaic/grid_anchor.h"

namespace gaic {

// Groundtruth MOS and predicted scores for the candidates of one image,
// aligned index-for-index.
struct ScorePair {
  std::vector<double> g;
  std::vector<double> p;
};

// Raised when a rank correlation is requested for a constant vector.
class UndefinedCorrelationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// 1-based ranks, ascending by value; tied values share their average rank.
std::vector<double> FractionalRanks(std::span<const double> v);

// Spearman rank-order correlation with tie-aware (fractional) ranks.
double Srcc(std::span<const double> g, std::span<const double> p);
double Srcc(const ScorePair& pair);
double MeanSrcc(std::span<const ScorePair> pairs);

// Indices of the n highest scores, best first; equal scores keep index order.
std::vector<int> TopIndices(std::span<const double> scores, int n);

// Return-K-of-top-N accuracy. `returned[i]` holds the K crop indices returned
// for image i (K identical across images). The top-N set of an image is the
// first N positions of its MOS-descending order with ties broken by index.
double AccKN(std::span<const ScorePair> pairs,
             const std::vector<std::vector<int>>& returned, int N);

// Mean of AccKN over K = 1..4; `returned_per_k[K-1]` holds the K-crop lists.
double AvgAccN(std::span<const ScorePair> pairs,
               const std::array<std::vector<std::vector<int>>, 4>& returned_per_k,
               int N);

inline constexpr std::array<int, 2> kAccN = {5, 10};
inline constexpr int kMaxK = 4;

struct EvalReport {
  std::optional<double> mean_srcc;
  std::map<std::string, double> acc;  // keys "K/N"
  std::optional<double> acc5_bar;
  std::optional<double> acc10_bar;
  std::vector<double> per_image_srcc;
};

// Full report from per-candidate predictions: every image contributes its
// SRCC and its top-K predictions for K = 1..4. `threads` > 1 evaluates images
// concurrently; aggregation always runs in image order.
EvalReport Evaluate(std::span<const ScorePair> pairs, int threads = 1);

// Report for methods that return one crop per image (baselines, projected
// external boxes): only Acc_{1/5} and Acc_{1/10} are defined.
EvalReport EvaluateSingleChoice(std::span<const std::vector<double>> mos,
                                std::span<const int> chosen);

std::string EvalReportToJson(const EvalReport& report);
// Plain-text table, accuracies shown in percent.
std::string EvalReportTable(const EvalReport& report, const std::string& method);

double Iou(const CropBox& a, const CropBox& b);
// Mean of the four edge displacements, each normalized by its axis length.
double Bde(const CropBox& a, const CropBox& b, const ImageDims& dims);

// The whole image.
CropBox BaselineN(const ImageDims& dims);
// Centered box whose extents are 0.9 of the full-image box extents.
CropBox BaselineC(const ImageDims& dims);
// Largest-area candidate, first in the given order on ties.
CropBox BaselineL(std::span<const CropBox> candidates);
int BaselineLIndex(std::span<const CropBox> candidates);

// Index of the candidate with the highest IoU against `box`; first on ties.
int NearestAnchorBox(const CropBox& box, std::span<const CropBox> candidates);

}  // namespace gaic
