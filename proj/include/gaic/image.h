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

#include "gaic/grid_anchor.h"

namespace gaic {

// 8-bit-derived RGB image stored as doubles in [0, 1], row-major HWC.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  static constexpr int kChannels = 3;

  Image() = default;
  Image(int h, int w, double fill = 0.0)
      : height(h), width(w),
        pixels(static_cast<size_t>(h) * w * kChannels, fill) {}

  double& at(int r, int c, int ch) {
    return pixels[(static_cast<size_t>(r) * width + c) * kChannels + ch];
  }
  double at(int r, int c, int ch) const {
    return pixels[(static_cast<size_t>(r) * width + c) * kChannels + ch];
  }
  ImageDims dims() const { return {height, width}; }
};

struct ResizedImage {
  Image image;
  // resized extent / original extent, per axis
  double row_scale = 1.0;
  double col_scale = 1.0;
};

// Bilinear resize (half-pixel centres) so that the shorter side equals
// `target`; the other side is rounded to keep the aspect ratio.
ResizedImage ResizeShortSide(const Image& image, int target);
Image ResizeBilinear(const Image& image, int out_h, int out_w);

// Copies the pixels of a crop (1-based inclusive bounds).
Image CropImage(const Image& image, const CropBox& box);

// Decode seam: binary PPM (P6) and PNG, chosen by file content.
Image ReadImage(const std::string& path);
// Encoder chosen by extension (.png, otherwise PPM).
void WriteImage(const Image& image, const std::string& path);
// PNG file contents, for serving over HTTP.
std::string EncodePng(const Image& image);

}  // namespace gaic
