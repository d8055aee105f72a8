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

#include "gaic/pipeline.h"

#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace gaic {

using nlohmann::json;

std::vector<double> GroundtruthScores(const Dataset& dataset, const AnnotatedImage& image,
                                      Groundtruth truth) {
  std::vector<double> g;
  g.reserve(image.crops.size());
  if (truth == Groundtruth::kPlanted) {
    if (!dataset.synthetic_rule || !image.subject) {
      throw std::domain_error("image '" + image.id + "' has no planted rule to evaluate against");
    }
    for (const CropAnnotation& c : image.crops) {
      g.push_back(PlantedMos(c.crop, *image.subject, *dataset.synthetic_rule));
    }
    return g;
  }
  for (const CropAnnotation& c : image.crops) {
    if (!c.mos) throw std::domain_error("image '" + image.id + "' has unrated crops");
    g.push_back(*c.mos);
  }
  return g;
}

std::vector<const AnnotatedImage*> SelectImages(const Dataset& dataset,
                                                const std::vector<std::string>& ids) {
  std::map<std::string, const AnnotatedImage*> by_id;
  for (const AnnotatedImage& img : dataset.images) by_id[img.id] = &img;
  std::vector<const AnnotatedImage*> out;
  for (const std::string& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw std::domain_error("unknown image id '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::vector<double>> PredictImages(const CropModel& model,
                                               const std::vector<const AnnotatedImage*>& images,
                                               const std::string& dataset_path, int threads) {
  std::vector<std::vector<double>> out(images.size());
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (size_t i = next++; i < images.size(); i = next++) {
      try {
        const AnnotatedImage& img = *images[i];
        const Image pixels = ReadImage(ResolveImagePath(dataset_path, img));
        std::vector<CropBox> boxes;
        for (const CropAnnotation& c : img.crops) boxes.push_back(c.crop);
        for (const CropScore& s : model.ScoreCrops(pixels, boxes)) out[i].push_back(s.score);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(images.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

PredictionFile ParsePredictions(const std::string& text) {
  PredictionFile f;
  std::istringstream in(text);
  std::string raw;
  size_t line = 0;
  bool first = true;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "predictions line " + std::to_string(line) + ": ";
    try {
      const json j = json::parse(raw);
      const bool single = j.contains("crop");
      if (first) f.single_choice = single;
      if (single != f.single_choice) throw std::runtime_error("mixes 'crop' and 'scores' lines");
      first = false;
      f.ids.push_back(j.at("id").get<std::string>());
      if (single) {
        const json& c = j.at("crop");
        f.crops.push_back({c.at("x1").get<int>(), c.at("y1").get<int>(), c.at("x2").get<int>(),
                           c.at("y2").get<int>()});
      } else {
        f.scores.push_back(j.at("scores").get<std::vector<double>>());
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(where + e.what());
    }
  }
  return f;
}

PredictionFile LoadPredictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open predictions " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParsePredictions(ss.str());
}

std::string ScoresToPredictionLine(const std::string& id, const std::vector<double>& scores) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["scores"] = scores;
  return j.dump() + "\n";
}

EvalReport EvaluateScores(const Dataset& dataset, const std::vector<const AnnotatedImage*>& images,
                          const std::vector<std::vector<double>>& scores, Groundtruth truth,
                          int threads) {
  if (scores.size() != images.size()) throw std::invalid_argument("one score list per image");
  std::vector<ScorePair> pairs;
  for (size_t i = 0; i < images.size(); ++i) {
    if (scores[i].size() != images[i]->crops.size()) {
      throw std::invalid_argument("image '" + images[i]->id + "': expected " +
                                  std::to_string(images[i]->crops.size()) + " scores, got " +
                                  std::to_string(scores[i].size()));
    }
    pairs.push_back({GroundtruthScores(dataset, *images[i], truth), scores[i]});
  }
  return Evaluate(pairs, threads);
}

EvalReport EvaluateChoices(const Dataset& dataset, const std::vector<const AnnotatedImage*>& images,
                           const std::vector<CropBox>& choices, Groundtruth truth) {
  if (choices.size() != images.size()) throw std::invalid_argument("one choice per image");
  std::vector<std::vector<double>> mos;
  std::vector<int> chosen;
  for (size_t i = 0; i < images.size(); ++i) {
    if (!choices[i].IsValidFor(images[i]->dims)) {
      throw std::invalid_argument("image '" + images[i]->id + "': chosen crop outside the image");
    }
    std::vector<CropBox> boxes;
    for (const CropAnnotation& c : images[i]->crops) boxes.push_back(c.crop);
    mos.push_back(GroundtruthScores(dataset, *images[i], truth));
    chosen.push_back(NearestAnchorBox(choices[i], boxes));
  }
  return EvaluateSingleChoice(mos, chosen);
}

double PlantedTop1Rate(const std::vector<const AnnotatedImage*>& images,
                       const std::vector<std::vector<double>>& scores) {
  if (images.empty()) return 0.0;
  int hits = 0;
  for (size_t i = 0; i < images.size(); ++i) {
    const int top = TopIndices(scores[i], 1).at(0);
    if (images[i]->crops[static_cast<size_t>(top)].planted_best) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(images.size());
}

}  // namespace gaic
