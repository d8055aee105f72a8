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

#include "gaic/grid_anchor.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace gaic {

namespace {

int RoundHalfUp(double v) { return static_cast<int>(std::floor(v + 0.5)); }

}  // namespace

void GridSpec::Validate() const {
  if (M < 2 || N < 2) throw std::domain_error("grid: M and N must be >= 2");
  if (m < 1 || n < 1) throw std::domain_error("grid: m and n must be >= 1");
  if (M < 2 * m || N < 2 * n) {
    throw std::domain_error("grid: anchor regions overlap (need M >= 2m, N >= 2n)");
  }
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::domain_error("grid: lambda must lie in (0, 1)");
  }
  if (!(alpha1 > 0.0) || !(alpha1 <= alpha2) || !std::isfinite(alpha2)) {
    throw std::domain_error("grid: need 0 < alpha1 <= alpha2");
  }
}

double GridSpec::GeometricMinimumArea() const {
  return static_cast<double>(M - 2 * m + 1) * (N - 2 * n + 1) /
         (static_cast<double>(M) * N);
}

void ImageDims::Validate() const {
  if (H < 1 || W < 1) throw std::domain_error("image dims must be positive");
}

void ImageDims::ValidateFor(const GridSpec& spec) const {
  Validate();
  if (H < spec.M || W < spec.N) {
    throw std::domain_error("image smaller than the grid: need H >= M and W >= N");
  }
}

bool CropBox::IsValidFor(const ImageDims& dims) const {
  return 1 <= x1 && x1 < x2 && x2 <= dims.H && 1 <= y1 && y1 < y2 &&
         y2 <= dims.W;
}

void AnchorPair::ValidateFor(const GridSpec& spec) const {
  const bool ok = i1 >= 1 && i1 <= spec.m && j1 >= 1 && j1 <= spec.n &&
                  i2 >= spec.M - spec.m + 1 && i2 <= spec.M &&
                  j2 >= spec.N - spec.n + 1 && j2 <= spec.N;
  if (!ok) throw std::domain_error("anchor pair out of range");
}

AnchorPoint AnchorCenter(int i, int j, const ImageDims& dims,
                         const GridSpec& spec) {
  if (i < 1 || i > spec.M || j < 1 || j > spec.N) {
    throw std::domain_error("anchor bin index out of range");
  }
  return {(i - 0.5) * dims.H / spec.M, (j - 0.5) * dims.W / spec.N};
}

CropBox CropFromAnchors(const AnchorPair& pair, const ImageDims& dims,
                        const GridSpec& spec) {
  pair.ValidateFor(spec);
  const AnchorPoint tl = AnchorCenter(pair.i1, pair.j1, dims, spec);
  const AnchorPoint br = AnchorCenter(pair.i2, pair.j2, dims, spec);
  return {std::clamp(RoundHalfUp(tl.x), 1, dims.H),
          std::clamp(RoundHalfUp(tl.y), 1, dims.W),
          std::clamp(RoundHalfUp(br.x), 1, dims.H),
          std::clamp(RoundHalfUp(br.y), 1, dims.W)};
}

bool PassesAreaConstraint(const CropBox& crop, const ImageDims& dims,
                          const GridSpec& spec) {
  return static_cast<double>(crop.Area()) >=
         spec.lambda * static_cast<double>(dims.H) * dims.W;
}

bool PassesAspectConstraint(const CropBox& crop, const GridSpec& spec) {
  const double r = crop.AspectRatio();
  return spec.alpha1 <= r && r <= spec.alpha2;
}

bool CanonicalLess(const CropBox& a, const CropBox& b) {
  const int64_t lhs = int64_t{a.Width()} * b.Height();
  const int64_t rhs = int64_t{b.Width()} * a.Height();
  if (lhs != rhs) return lhs < rhs;
  return a < b;
}

std::vector<Candidate> EnumerateCandidates(const ImageDims& dims,
                                           const GridSpec& spec) {
  spec.Validate();
  dims.ValidateFor(spec);

  std::vector<Candidate> out;
  out.reserve(static_cast<size_t>(spec.m * spec.m * spec.n * spec.n));
  for (int i1 = 1; i1 <= spec.m; ++i1) {
    for (int j1 = 1; j1 <= spec.n; ++j1) {
      for (int i2 = spec.M - spec.m + 1; i2 <= spec.M; ++i2) {
        for (int j2 = spec.N - spec.n + 1; j2 <= spec.N; ++j2) {
          const AnchorPair pair{i1, j1, i2, j2};
          const CropBox box = CropFromAnchors(pair, dims, spec);
          if (PassesAreaConstraint(box, dims, spec) &&
              PassesAspectConstraint(box, spec)) {
            out.push_back({box, pair});
          }
        }
      }
    }
  }
  // Stable sort keeps anchor-loop order among equal boxes, so "first" in the
  // dedup below is the first anchor pair that produced the box.
  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return CanonicalLess(a.box, b.box);
                   });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Candidate& a, const Candidate& b) {
                          return a.box == b.box;
                        }),
            out.end());
  return out;
}

std::vector<CropBox> CandidateBoxes(const ImageDims& dims,
                                    const GridSpec& spec) {
  std::vector<CropBox> boxes;
  for (const Candidate& c : EnumerateCandidates(dims, spec)) {
    boxes.push_back(c.box);
  }
  return boxes;
}

int CountCandidates(const ImageDims& dims, const GridSpec& spec) {
  return static_cast<int>(EnumerateCandidates(dims, spec).size());
}

uint64_t FullPixelCandidateCount(const ImageDims& dims) {
  const uint64_t h = static_cast<uint64_t>(dims.H);
  const uint64_t w = static_cast<uint64_t>(dims.W);
  return h * (h - 1) / 2 * (w * (w - 1) / 2);
}

std::string CandidateToJsonLine(const Candidate& c) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "{\"x1\":%d,\"y1\":%d,\"x2\":%d,\"y2\":%d,\"i1\":%d,\"j1\":%d,"
                "\"i2\":%d,\"j2\":%d,\"aspect_ratio\":%.6f}",
                c.box.x1, c.box.y1, c.box.x2, c.box.y2, c.anchors.i1,
                c.anchors.j1, c.anchors.i2, c.anchors.j2, c.box.AspectRatio());
  return buf;
}

std::string CandidatesToJsonLines(const std::vector<Candidate>& cands) {
  std::string out;
  for (const Candidate& c : cands) {
    out += CandidateToJsonLine(c);
    out += '\n';
  }
  return out;
}

}  // namespace gaic
