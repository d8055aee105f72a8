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

#include "gaic/image.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace gaic {

Image ResizeBilinear(const Image& image, int out_h, int out_w) {
  if (image.height < 1 || image.width < 1 || out_h < 1 || out_w < 1) {
    throw std::domain_error("resize: degenerate image");
  }
  Image out(out_h, out_w);
  const double sy = static_cast<double>(image.height) / out_h;
  const double sx = static_cast<double>(image.width) / out_w;
  for (int r = 0; r < out_h; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int c = 0; c < out_w; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        const double top = (1 - wx) * image.at(y0, x0, ch) + wx * image.at(y0, x1, ch);
        const double bot = (1 - wx) * image.at(y1, x0, ch) + wx * image.at(y1, x1, ch);
        out.at(r, c, ch) = (1 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

ResizedImage ResizeShortSide(const Image& image, int target) {
  if (image.height < 2 || image.width < 2 || target < 1) {
    throw std::domain_error("resize: degenerate image");
  }
  int h, w;
  if (image.height <= image.width) {
    h = target;
    w = static_cast<int>(std::lround(static_cast<double>(image.width) * target / image.height));
  } else {
    w = target;
    h = static_cast<int>(std::lround(static_cast<double>(image.height) * target / image.width));
  }
  ResizedImage out;
  out.image = (h == image.height && w == image.width) ? image : ResizeBilinear(image, h, w);
  out.row_scale = static_cast<double>(h) / image.height;
  out.col_scale = static_cast<double>(w) / image.width;
  return out;
}

Image CropImage(const Image& image, const CropBox& box) {
  if (!box.IsValidFor(image.dims())) throw std::domain_error("crop outside image");
  Image out(box.x2 - box.x1 + 1, box.y2 - box.y1 + 1);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        out.at(r, c, ch) = image.at(box.x1 - 1 + r, box.y1 - 1 + c, ch);
      }
    }
  }
  return out;
}

namespace {

std::string ReadFile(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open image " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Image DecodePpm(const std::string& bytes, const std::string& path) {
  std::istringstream in(bytes);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw std::runtime_error(path + ": only binary PPM (P6) is supported");
  auto next_int = [&]() {
    while (in >> std::ws && in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
    }
    int v;
    if (!(in >> v)) throw std::runtime_error(path + ": malformed PPM header");
    return v;
  };
  const int w = next_int();
  const int h = next_int();
  const int maxval = next_int();
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) {
    throw std::runtime_error(path + ": unsupported PPM dimensions or depth");
  }
  in.get();
  Image img(h, w);
  const size_t n = img.pixels.size();
  std::string raw(n, '\0');
  in.read(raw.data(), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) throw std::runtime_error(path + ": truncated PPM");
  for (size_t i = 0; i < n; ++i) {
    img.pixels[i] = static_cast<unsigned char>(raw[i]) / static_cast<double>(maxval);
  }
  return img;
}

Image DecodePng(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw std::runtime_error(path + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&png);
    throw std::runtime_error(path + ": " + png.message);
  }
  Image img(static_cast<int>(png.height), static_cast<int>(png.width));
  for (size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = buf[i] / 255.0;
  return img;
}

std::vector<unsigned char> Quantize(const Image& image) {
  std::vector<unsigned char> out(image.pixels.size());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<unsigned char>(
        std::lround(std::clamp(image.pixels[i], 0.0, 1.0) * 255.0));
  }
  return out;
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == b; });
}

}  // namespace

Image ReadImage(const std::string& path) {
  const std::string bytes = ReadFile(path);
  if (bytes.size() >= 8 && static_cast<unsigned char>(bytes[0]) == 0x89 &&
      bytes.compare(1, 3, "PNG") == 0) {
    return DecodePng(path);
  }
  return DecodePpm(bytes, path);
}

std::string EncodePng(const Image& image) {
  const std::vector<unsigned char> bytes = Quantize(image);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, bytes.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("png encode: ") + png.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, bytes.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("png encode: ") + png.message);
  }
  out.resize(size);
  return out;
}

void WriteImage(const Image& image, const std::string& path) {
  const std::vector<unsigned char> bytes = Quantize(image);
  if (EndsWith(path, ".png")) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
      throw std::runtime_error(path + ": " + png.message);
    }
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write image " + path);
  f << "P6\n" << image.width << " " << image.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace gaic
