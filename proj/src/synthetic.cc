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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numbers>

#include "gaic/dataset.h"
#include "gaic/random.h"

namespace gaic {

namespace {

// Continuous extent of pixel rows lo..hi (1-based, inclusive) is [lo - 1, hi].
struct Span {
  double lo, hi;
  double Length() const { return hi - lo; }
};

Span Rows(const CropBox& b) { return {b.x1 - 1.0, static_cast<double>(b.x2)}; }
Span Cols(const CropBox& b) { return {b.y1 - 1.0, static_cast<double>(b.y2)}; }

double Overlap(Span a, Span b) {
  return std::max(0.0, std::min(a.hi, b.hi) - std::max(a.lo, b.lo));
}

Image SmoothField(int h, int w, std::mt19937_64& rng) {
  Image img(h, w);
  constexpr int kWaves = 4;
  for (int ch = 0; ch < Image::kChannels; ++ch) {
    double fr[kWaves], fc[kWaves], phase[kWaves], amp[kWaves];
    for (int k = 0; k < kWaves; ++k) {
      fr[k] = (0.5 + 2.5 * UniformReal(rng)) / h;
      fc[k] = (0.5 + 2.5 * UniformReal(rng)) / w;
      phase[k] = 2.0 * std::numbers::pi * UniformReal(rng);
      amp[k] = 0.05 + 0.05 * UniformReal(rng);
    }
    const double base = 0.25 + 0.1 * UniformReal(rng);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double v = base;
        for (int k = 0; k < kWaves; ++k) {
          v += amp[k] * std::cos(2.0 * std::numbers::pi * (fr[k] * r + fc[k] * c) + phase[k]);
        }
        img.at(r, c, ch) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return img;
}

}  // namespace

double PlantedScore(const CropBox& crop, const CropBox& subject, const SyntheticRule& rule) {
  const Span cr = Rows(crop), cc = Cols(crop);
  const Span sr = Rows(subject), sc = Cols(subject);
  const double cx = 0.5 * (sr.lo + sr.hi);
  const double cy = 0.5 * (sc.lo + sc.hi);
  double best = INFINITY;
  for (double tr : {1.0 / 3.0, 2.0 / 3.0}) {
    for (double tc : {1.0 / 3.0, 2.0 / 3.0}) {
      const double dr = (cx - (cr.lo + tr * cr.Length())) / cr.Length();
      const double dc = (cy - (cc.lo + tc * cc.Length())) / cc.Length();
      best = std::min(best, std::hypot(dr, dc));
    }
  }
  const double inside = Overlap(cr, sr) * Overlap(cc, sc);
  const double cut = 1.0 - inside / (sr.Length() * sc.Length());
  return 5.0 - rule.a * best - rule.b * cut;
}

double PlantedMos(const CropBox& crop, const CropBox& subject, const SyntheticRule& rule) {
  return std::clamp(PlantedScore(crop, subject, rule), 1.0, 5.0);
}

SyntheticDataset GenerateSynthetic(const SyntheticOptions& options, const GridSpec& spec,
                                   const std::string& image_dir) {
  if (options.count < 1) throw std::domain_error("synthetic count must be >= 1");
  if (options.min_short_side < 2 || options.max_short_side < options.min_short_side ||
      !(options.min_aspect > 0.0) || options.max_aspect < options.min_aspect) {
    throw std::domain_error("synthetic size distribution is empty");
  }
  spec.Validate();
  SyntheticDataset out;
  out.dataset.grid_spec = spec;
  out.dataset.synthetic_rule = options.rule;
  std::mt19937_64 rng(options.rule.seed);

  for (int i = 0; i < options.count; ++i) {
    const int side = options.min_short_side +
                     static_cast<int>(UniformIndex(
                         rng, static_cast<uint64_t>(options.max_short_side - options.min_short_side + 1)));
    const double aspect =
        options.min_aspect + (options.max_aspect - options.min_aspect) * UniformReal(rng);
    int h = side, w = side;
    if (aspect >= 1.0) {
      w = static_cast<int>(std::lround(side * aspect));
    } else {
      h = static_cast<int>(std::lround(side / aspect));
    }
    ImageDims dims{h, w};
    dims.ValidateFor(spec);

    Image img = SmoothField(h, w, rng);
    const int sh = std::max(2, static_cast<int>(std::lround(h * (0.12 + 0.10 * UniformReal(rng)))));
    const int sw = std::max(2, static_cast<int>(std::lround(w * (0.12 + 0.10 * UniformReal(rng)))));
    const int sx1 = 1 + static_cast<int>(UniformIndex(rng, static_cast<uint64_t>(h - sh + 1)));
    const int sy1 = 1 + static_cast<int>(UniformIndex(rng, static_cast<uint64_t>(w - sw + 1)));
    const CropBox subject{sx1, sy1, sx1 + sh - 1, sy1 + sw - 1};
    double tint[3];
    for (double& t : tint) t = 0.8 + 0.2 * UniformReal(rng);
    for (int r = subject.x1 - 1; r < subject.x2; ++r) {
      for (int c = subject.y1 - 1; c < subject.y2; ++c) {
        for (int ch = 0; ch < Image::kChannels; ++ch) img.at(r, c, ch) = tint[ch];
      }
    }

    // Match what an 8-bit image file holds.
    for (double& p : img.pixels) p = std::round(p * 255.0) / 255.0;

    AnnotatedImage ann;
    char id[32];
    std::snprintf(id, sizeof id, "syn%04d", i);
    ann.id = id;
    ann.dims = dims;
    ann.image_path = image_dir.empty() ? ann.id + ".ppm" : image_dir + "/" + ann.id + ".ppm";
    ann.subject = subject;
    double best = -INFINITY;
    size_t best_index = 0;
    for (const CropBox& box : CandidateBoxes(dims, spec)) {
      CropAnnotation c;
      c.crop = box;
      const double clean = PlantedMos(box, subject, options.rule);
      if (clean > best) {
        best = clean;
        best_index = ann.crops.size();
      }
      const double noisy = std::clamp(PlantedScore(box, subject, options.rule) +
                                          options.rule.noise_sigma * StandardNormal(rng),
                                      1.0, 5.0);
      // Nine significant digits, as the dataset file stores it.
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.9g", noisy);
      c.mos = std::strtod(buf, nullptr);
      ann.crops.push_back(c);
    }
    if (!ann.crops.empty()) ann.crops[best_index].planted_best = true;
    out.dataset.images.push_back(std::move(ann));
    out.images.push_back(std::move(img));
  }
  return out;
}

void WriteSyntheticDataset(const SyntheticDataset& synthetic, const std::string& path) {
  for (size_t i = 0; i < synthetic.images.size(); ++i) {
    const std::string file = ResolveImagePath(path, synthetic.dataset.images[i]);
    std::filesystem::create_directories(std::filesystem::path(file).parent_path());
    WriteImage(synthetic.images[i], file);
  }
  SaveDataset(synthetic.dataset, path);
}

}  // namespace gaic
