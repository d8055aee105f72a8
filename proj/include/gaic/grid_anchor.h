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
#include <vector>

namespace gaic {

// Parameters of the anchor grid: the image is split into M x N bins, crop
// corners live on bin centers, the top-left corner is restricted to the first
// m x n bins and the bottom-right corner to the last m x n bins.
struct GridSpec {
  int M = 12;
  int N = 12;
  int m = 4;
  int n = 4;
  double lambda = 0.5;   // minimum crop area as a fraction of the image area
  double alpha1 = 0.5;   // minimum W_crop / H_crop
  double alpha2 = 2.0;   // maximum W_crop / H_crop

  // Throws std::domain_error when the invariants do not hold.
  void Validate() const;

  // Area fraction covered by the smallest anchor-pair crop,
  // (M - 2m + 1)(N - 2n + 1) / (MN).
  double GeometricMinimumArea() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct ImageDims {
  int H = 0;
  int W = 0;

  void Validate() const;
  // Also checks that every bin spans at least one pixel.
  void ValidateFor(const GridSpec& spec) const;

  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

// Axis-aligned crop in 1-based inclusive pixel coordinates. x runs along the
// image height (rows) and y along the width (columns).
struct CropBox {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  int Height() const { return x2 - x1; }
  int Width() const { return y2 - y1; }
  int64_t Area() const { return int64_t{Height()} * Width(); }
  double AspectRatio() const {
    return static_cast<double>(Width()) / static_cast<double>(Height());
  }
  bool IsValidFor(const ImageDims& dims) const;

  friend bool operator==(const CropBox&, const CropBox&) = default;
  friend auto operator<=>(const CropBox&, const CropBox&) = default;
};

struct AnchorPair {
  int i1 = 0;
  int j1 = 0;
  int i2 = 0;
  int j2 = 0;

  void ValidateFor(const GridSpec& spec) const;

  friend bool operator==(const AnchorPair&, const AnchorPair&) = default;
};

struct Candidate {
  CropBox box;
  AnchorPair anchors;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct AnchorPoint {
  double x = 0.0;  // row
  double y = 0.0;  // column
};

AnchorPoint AnchorCenter(int i, int j, const ImageDims& dims,
                         const GridSpec& spec);

// Rounds both anchor centers half-up and clamps them into the image.
CropBox CropFromAnchors(const AnchorPair& pair, const ImageDims& dims,
                        const GridSpec& spec);

bool PassesAreaConstraint(const CropBox& crop, const ImageDims& dims,
                          const GridSpec& spec);
bool PassesAspectConstraint(const CropBox& crop, const GridSpec& spec);

// Canonical candidate order: aspect ratio ascending, then (x1, y1, x2, y2).
// Aspect ratios are compared exactly by cross-multiplication.
bool CanonicalLess(const CropBox& a, const CropBox& b);

// All anchor-pair crops passing both constraints, deduplicated and sorted in
// canonical order. An empty result is legal.
std::vector<Candidate> EnumerateCandidates(const ImageDims& dims,
                                           const GridSpec& spec);
std::vector<CropBox> CandidateBoxes(const ImageDims& dims,
                                    const GridSpec& spec);
int CountCandidates(const ImageDims& dims, const GridSpec& spec);

// H(H-1)W(W-1)/4, the number of unconstrained pixel-corner crops.
uint64_t FullPixelCandidateCount(const ImageDims& dims);

// One JSON object per line: {x1,y1,x2,y2,i1,j1,i2,j2,aspect_ratio}.
std::string CandidateToJsonLine(const Candidate& c);
std::string CandidatesToJsonLines(const std::vector<Candidate>& cands);

}  // namespace gaic
