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

#include "gaic/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "gaic/random.h"

namespace gaic {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

double Round9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

[[noreturn]] void Fail(size_t line, const std::string& field, const std::string& what) {
  throw DatasetError("line " + std::to_string(line) + ": field '" + field + "': " + what);
}

const json& Field(const json& obj, const char* key, size_t line, const std::string& prefix) {
  auto it = obj.find(key);
  if (it == obj.end()) Fail(line, prefix + key, "missing");
  return *it;
}

int GetInt(const json& obj, const char* key, size_t line, const std::string& prefix = "") {
  const json& v = Field(obj, key, line, prefix);
  if (!v.is_number_integer()) Fail(line, prefix + key, "expected an integer");
  return v.get<int>();
}

double GetReal(const json& obj, const char* key, size_t line, const std::string& prefix = "") {
  const json& v = Field(obj, key, line, prefix);
  if (!v.is_number()) Fail(line, prefix + key, "expected a number");
  return v.get<double>();
}

CropBox ParseBox(const json& obj, size_t line, const std::string& prefix) {
  if (!obj.is_object()) Fail(line, prefix, "expected an object");
  return {GetInt(obj, "x1", line, prefix + "."), GetInt(obj, "y1", line, prefix + "."),
          GetInt(obj, "x2", line, prefix + "."), GetInt(obj, "y2", line, prefix + ".")};
}

ordered_json BoxJson(const CropBox& b) {
  ordered_json j;
  j["x1"] = b.x1;
  j["y1"] = b.y1;
  j["x2"] = b.x2;
  j["y2"] = b.y2;
  return j;
}

GridSpec ParseGridSpec(const json& j, size_t line) {
  if (!j.is_object()) Fail(line, "grid_spec", "expected an object");
  GridSpec s;
  const std::string p = "grid_spec.";
  s.M = GetInt(j, "M", line, p);
  s.N = GetInt(j, "N", line, p);
  s.m = GetInt(j, "m", line, p);
  s.n = GetInt(j, "n", line, p);
  s.lambda = GetReal(j, "lambda", line, p);
  s.alpha1 = GetReal(j, "alpha1", line, p);
  s.alpha2 = GetReal(j, "alpha2", line, p);
  try {
    s.Validate();
  } catch (const std::exception& e) {
    Fail(line, "grid_spec", e.what());
  }
  return s;
}

void ParseHeader(const json& j, size_t line, Dataset& ds) {
  if (!j.is_object()) Fail(line, "header", "expected an object");
  ds.format_version = GetInt(j, "format_version", line);
  if (ds.format_version != kDatasetFormatVersion) {
    Fail(line, "format_version", "unsupported version " + std::to_string(ds.format_version));
  }
  ds.grid_spec = ParseGridSpec(Field(j, "grid_spec", line, ""), line);
  if (auto it = j.find("synthetic_rule"); it != j.end()) {
    const std::string p = "synthetic_rule.";
    if (!it->is_object()) Fail(line, "synthetic_rule", "expected an object");
    SyntheticRule r;
    r.a = GetReal(*it, "a", line, p);
    r.b = GetReal(*it, "b", line, p);
    r.noise_sigma = GetReal(*it, "noise_sigma", line, p);
    const json& seed = Field(*it, "seed", line, p);
    if (!seed.is_number_unsigned()) Fail(line, p + "seed", "expected a non-negative integer");
    r.seed = seed.get<uint64_t>();
    ds.synthetic_rule = r;
  }
}

CropAnnotation ParseCrop(const json& j, size_t line, const std::string& prefix) {
  CropAnnotation a;
  a.crop = ParseBox(j, line, prefix);
  const json& ratings = Field(j, "ratings", line, prefix + ".");
  if (!ratings.is_array()) Fail(line, prefix + ".ratings", "expected an array");
  for (size_t r = 0; r < ratings.size(); ++r) {
    const std::string f = prefix + ".ratings[" + std::to_string(r) + "]";
    if (!ratings[r].is_number_integer()) Fail(line, f, "expected an integer");
    const int v = ratings[r].get<int>();
    if (v < 1 || v > 5) Fail(line, f, "rating " + std::to_string(v) + " outside [1, 5]");
    a.ratings.push_back(v);
  }
  if (!a.ratings.empty()) {
    const auto [mean, std] = ComputeMos(a.ratings);
    a.mos = mean;
    a.rating_std = std;
  }
  if (auto it = j.find("mos"); it != j.end()) {
    if (!it->is_number()) Fail(line, prefix + ".mos", "expected a number");
    const double m = it->get<double>();
    if (!std::isfinite(m) || m < 1.0 || m > 5.0) Fail(line, prefix + ".mos", "outside [1, 5]");
    if (a.mos && std::fabs(*a.mos - m) > 1e-8) {
      Fail(line, prefix + ".mos", "disagrees with the mean of the ratings");
    }
    if (!a.mos) a.mos = m;
  }
  if (auto it = j.find("planted_best"); it != j.end()) {
    if (!it->is_boolean()) Fail(line, prefix + ".planted_best", "expected a boolean");
    a.planted_best = it->get<bool>();
  }
  return a;
}

AnnotatedImage ParseImage(const json& j, size_t line, const GridSpec& spec) {
  if (!j.is_object()) Fail(line, "image", "expected an object");
  AnnotatedImage img;
  const json& id = Field(j, "id", line, "");
  if (!id.is_string() || id.get<std::string>().empty()) {
    Fail(line, "id", "expected a non-empty string");
  }
  img.id = id.get<std::string>();
  img.dims = {GetInt(j, "h", line), GetInt(j, "w", line)};
  try {
    img.dims.ValidateFor(spec);
  } catch (const std::exception& e) {
    Fail(line, "h", e.what());
  }
  if (auto it = j.find("image_path"); it != j.end()) {
    if (!it->is_string()) Fail(line, "image_path", "expected a string");
    img.image_path = it->get<std::string>();
  }
  if (auto it = j.find("subject"); it != j.end()) {
    img.subject = ParseBox(*it, line, "subject");
    if (!img.subject->IsValidFor(img.dims)) Fail(line, "subject", "outside the image");
  }
  const json& crops = Field(j, "crops", line, "");
  if (!crops.is_array()) Fail(line, "crops", "expected an array");
  for (size_t c = 0; c < crops.size(); ++c) {
    img.crops.push_back(ParseCrop(crops[c], line, "crops[" + std::to_string(c) + "]"));
  }
  const std::vector<CropBox> expected = CandidateBoxes(img.dims, spec);
  if (expected.size() != img.crops.size()) {
    Fail(line, "crops", "has " + std::to_string(img.crops.size()) + " entries, the grid yields " +
                            std::to_string(expected.size()));
  }
  for (size_t c = 0; c < expected.size(); ++c) {
    if (!(expected[c] == img.crops[c].crop)) {
      Fail(line, "crops[" + std::to_string(c) + "]",
           "does not match the candidate in canonical order");
    }
  }
  return img;
}

std::string ReadText(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open dataset " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace

std::pair<double, double> ComputeMos(const std::vector<int>& ratings) {
  if (ratings.empty()) throw std::domain_error("MOS of an empty rating list");
  double sum = 0.0;
  for (int r : ratings) sum += r;
  const double mean = sum / static_cast<double>(ratings.size());
  double ss = 0.0;
  for (int r : ratings) ss += (r - mean) * (r - mean);
  return {mean, std::sqrt(ss / static_cast<double>(ratings.size()))};
}

double ConsistencyFraction(const Dataset& dataset, double threshold) {
  size_t rated = 0, consistent = 0;
  for (const AnnotatedImage& img : dataset.images) {
    for (const CropAnnotation& c : img.crops) {
      if (c.ratings.empty()) continue;
      ++rated;
      if (c.rating_std < threshold) ++consistent;
    }
  }
  if (rated == 0) throw std::domain_error("dataset has no rated crops");
  return static_cast<double>(consistent) / static_cast<double>(rated);
}

Dataset ParseDataset(const std::string& text) {
  Dataset ds;
  std::istringstream in(text);
  std::string raw;
  size_t line = 0;
  bool have_header = false;
  std::set<std::string> ids;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(raw);
    } catch (const json::parse_error& e) {
      Fail(line, "<line>", std::string("invalid JSON: ") + e.what());
    }
    if (!have_header) {
      ParseHeader(j, line, ds);
      have_header = true;
      continue;
    }
    AnnotatedImage img = ParseImage(j, line, ds.grid_spec);
    if (!ids.insert(img.id).second) Fail(line, "id", "duplicate id '" + img.id + "'");
    ds.images.push_back(std::move(img));
  }
  return ds;
}

std::string SerializeDataset(const Dataset& ds) {
  std::string out;
  ordered_json header;
  header["format_version"] = ds.format_version;
  ordered_json gs;
  gs["M"] = ds.grid_spec.M;
  gs["N"] = ds.grid_spec.N;
  gs["m"] = ds.grid_spec.m;
  gs["n"] = ds.grid_spec.n;
  gs["lambda"] = Round9(ds.grid_spec.lambda);
  gs["alpha1"] = Round9(ds.grid_spec.alpha1);
  gs["alpha2"] = Round9(ds.grid_spec.alpha2);
  header["grid_spec"] = gs;
  if (ds.synthetic_rule) {
    ordered_json r;
    r["a"] = Round9(ds.synthetic_rule->a);
    r["b"] = Round9(ds.synthetic_rule->b);
    r["noise_sigma"] = Round9(ds.synthetic_rule->noise_sigma);
    r["seed"] = ds.synthetic_rule->seed;
    header["synthetic_rule"] = r;
  }
  out += header.dump() + "\n";
  for (const AnnotatedImage& img : ds.images) {
    ordered_json j;
    j["id"] = img.id;
    j["h"] = img.dims.H;
    j["w"] = img.dims.W;
    if (!img.image_path.empty()) j["image_path"] = img.image_path;
    if (img.subject) j["subject"] = BoxJson(*img.subject);
    ordered_json crops = ordered_json::array();
    for (const CropAnnotation& c : img.crops) {
      ordered_json cj = BoxJson(c.crop);
      cj["ratings"] = c.ratings;
      if (c.ratings.empty() && c.mos) cj["mos"] = Round9(*c.mos);
      if (c.planted_best) cj["planted_best"] = true;
      crops.push_back(std::move(cj));
    }
    j["crops"] = std::move(crops);
    out += j.dump() + "\n";
  }
  return out;
}

Dataset LoadDataset(const std::string& path) { return ParseDataset(ReadText(path)); }

void SaveDataset(const Dataset& dataset, const std::string& path) {
  WriteText(path, SerializeDataset(dataset));
}

DatasetSplit SplitDataset(const Dataset& dataset, int test_count, uint64_t seed) {
  const size_t n = dataset.images.size();
  if (test_count < 0 || (test_count > 0 && static_cast<size_t>(test_count) >= n)) {
    throw std::domain_error("test_count " + std::to_string(test_count) +
                            " must be below the dataset size " + std::to_string(n));
  }
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  Shuffle(order, rng);
  std::vector<bool> is_test(n, false);
  for (int i = 0; i < test_count; ++i) is_test[order[static_cast<size_t>(i)]] = true;
  DatasetSplit split;
  for (size_t i = 0; i < n; ++i) {
    (is_test[i] ? split.test_ids : split.train_ids).push_back(dataset.images[i].id);
  }
  return split;
}

std::string ResolveImagePath(const std::string& dataset_path, const AnnotatedImage& image) {
  if (image.image_path.empty()) {
    throw std::runtime_error("image '" + image.id + "' has no image_path");
  }
  const std::filesystem::path p(image.image_path);
  if (p.is_absolute()) return p.string();
  return (std::filesystem::path(dataset_path).parent_path() / p).string();
}

std::vector<TrainingExample> LoadTrainingExamples(const Dataset& dataset,
                                                  const std::string& dataset_path,
                                                  const std::vector<std::string>& ids) {
  std::map<std::string, const AnnotatedImage*> by_id;
  for (const AnnotatedImage& img : dataset.images) by_id[img.id] = &img;
  std::vector<TrainingExample> out;
  for (const std::string& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw std::domain_error("unknown image id '" + id + "'");
    const AnnotatedImage& img = *it->second;
    TrainingExample ex;
    for (const CropAnnotation& c : img.crops) {
      if (!c.mos) continue;
      ex.crops.push_back(c.crop);
      ex.mos.push_back(*c.mos);
    }
    if (ex.crops.empty()) continue;
    ex.image = ReadImage(ResolveImagePath(dataset_path, img));
    if (!(ex.image.dims() == img.dims)) {
      throw std::runtime_error("image '" + id + "' decodes to " +
                               std::to_string(ex.image.height) + "x" +
                               std::to_string(ex.image.width) + ", dataset says " +
                               std::to_string(img.dims.H) + "x" + std::to_string(img.dims.W));
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace gaic
