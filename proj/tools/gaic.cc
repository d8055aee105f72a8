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

// gaic: command-line front end for candidate generation, synthetic data,
// training, evaluation, cropping, benchmarking and the annotation service.

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "gaic/alloc.h"
#include "gaic/annotate_service.h"
#include "gaic/crop_model.h"
#include "gaic/dataset.h"
#include "gaic/grid_anchor.h"
#include "gaic/metrics.h"
#include "gaic/pipeline.h"
#include "gaic/train.h"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace gaic::cli {

enum ExitCode { kOk = 0, kValidation = 2, kEnvironment = 3, kInternal = 4 };

// Bad flags or inputs; reported before any work starts where possible.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// The machine got in the way: ports, files that cannot be written.
struct EnvironmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void RequireFile(const std::string& path, const std::string& what) {
  if (path.empty()) throw ValidationError(what + " path is required");
  if (!fs::is_regular_file(path)) throw ValidationError(what + " not found: " + path);
}

void WriteOutput(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw EnvironmentError("cannot write " + path);
  f << text;
  if (!f) throw EnvironmentError("write failed: " + path);
}

// Settings shared by the subcommands. A config file holds one JSON object
// whose keys are GridSpec and ModelConfig field names.
struct Settings {
  GridSpec grid;
  ModelConfig model;
};

void ApplyConfigFile(const std::string& path, Settings& s) {
  if (path.empty()) return;
  RequireFile(path, "config file");
  json j;
  try {
    std::ifstream f(path);
    j = json::parse(f);
  } catch (const std::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError(path + ": expected a JSON object");
  json model = json::object();
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "M") s.grid.M = value.get<int>();
      else if (key == "N") s.grid.N = value.get<int>();
      else if (key == "m") s.grid.m = value.get<int>();
      else if (key == "n") s.grid.n = value.get<int>();
      else if (key == "lambda") s.grid.lambda = value.get<double>();
      else if (key == "alpha1") s.grid.alpha1 = value.get<double>();
      else if (key == "alpha2") s.grid.alpha2 = value.get<double>();
      else model[key] = value;
    } catch (const json::exception& e) {
      throw ValidationError(path + ": field '" + key + "': " + e.what());
    }
  }
  static const std::set<std::string> kModelKeys = {
      "backbone_channels", "backbone_stride", "align_size", "cdim",     "fc_width",
      "input_short_side",  "delta",           "lr",         "epochs",   "crops_per_batch",
      "augment"};
  for (const auto& [key, value] : model.items()) {
    if (!kModelKeys.contains(key)) throw ValidationError(path + ": unknown field '" + key + "'");
  }
  try {
    s.model = ModelConfigFromJson(model.dump());
  } catch (const std::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// "M=12,lambda=0.4" style overrides.
void ApplyGridOverrides(const std::string& text, GridSpec& g) {
  if (text.empty()) return;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const size_t eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("--grid expects key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0') throw ValidationError("--grid: bad number '" + value + "'");
    auto as_int = [&] {
      if (v != std::floor(v)) throw ValidationError("--grid: " + key + " must be an integer");
      return static_cast<int>(v);
    };
    if (key == "M") g.M = as_int();
    else if (key == "N") g.N = as_int();
    else if (key == "m") g.m = as_int();
    else if (key == "n") g.n = as_int();
    else if (key == "lambda") g.lambda = v;
    else if (key == "alpha1") g.alpha1 = v;
    else if (key == "alpha2") g.alpha2 = v;
    else throw ValidationError("--grid: unknown key '" + key + "'");
  }
}

void Validate(const Settings& s) {
  try {
    s.grid.Validate();
    s.model.Validate();
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
}

Dataset ReadDataset(const std::string& path) {
  RequireFile(path, "dataset");
  try {
    return LoadDataset(path);
  } catch (const DatasetError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

CropModel ReadCheckpoint(const std::string& path) {
  RequireFile(path, "checkpoint");
  try {
    return LoadCheckpoint(path);
  } catch (const std::exception& e) {
    throw ValidationError("checkpoint " + path + ": " + e.what());
  }
}

std::vector<std::string> AllIds(const Dataset& ds) {
  std::vector<std::string> ids;
  for (const AnnotatedImage& img : ds.images) ids.push_back(img.id);
  return ids;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  int image_h = 0, image_w = 0;
  std::string image, grid, out, config;
};

int Gen(const GenArgs& a) {
  Settings s;
  ApplyConfigFile(a.config, s);
  ApplyGridOverrides(a.grid, s.grid);
  Validate(s);
  ImageDims dims{a.image_h, a.image_w};
  if (!a.image.empty()) {
    if (a.image_h || a.image_w) throw ValidationError("give --image or --image-h/--image-w, not both");
    RequireFile(a.image, "image");
    dims = ReadImage(a.image).dims();
  } else if (a.image_h <= 0 || a.image_w <= 0) {
    throw ValidationError("--image-h and --image-w (or --image) are required");
  }
  try {
    dims.ValidateFor(s.grid);
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
  WriteOutput(a.out, CandidatesToJsonLines(EnumerateCandidates(dims, s.grid)));
  return kOk;
}

struct SynthArgs {
  std::string out, config, grid;
  int count = 200, min_side = 200, max_side = 280;
  double a = 6.0, b = 4.0, noise = 0.1;
  uint64_t seed = 0;
};

int Synth(const SynthArgs& a) {
  if (a.out.empty()) throw ValidationError("--out is required");
  Settings s;
  ApplyConfigFile(a.config, s);
  ApplyGridOverrides(a.grid, s.grid);
  Validate(s);
  SyntheticOptions opt;
  opt.count = a.count;
  opt.min_short_side = a.min_side;
  opt.max_short_side = a.max_side;
  opt.rule = {.a = a.a, .b = a.b, .noise_sigma = a.noise, .seed = a.seed};
  if (a.count < 1 || a.min_side < 2 || a.max_side < a.min_side || a.noise < 0) {
    throw ValidationError("synthetic options out of range");
  }
  const SyntheticDataset syn = GenerateSynthetic(opt, s.grid);
  try {
    WriteSyntheticDataset(syn, a.out);
  } catch (const std::exception& e) {
    throw EnvironmentError(e.what());
  }
  std::cerr << "wrote " << syn.dataset.images.size() << " images to " << a.out << "\n";
  return kOk;
}

struct SplitArgs {
  int test_count = 0;
  std::optional<uint64_t> split_seed;
};

DatasetSplit MakeSplit(const Dataset& ds, const SplitArgs& a, uint64_t seed) {
  try {
    return SplitDataset(ds, a.test_count, a.split_seed.value_or(seed));
  } catch (const std::domain_error& e) {
    throw ValidationError(e.what());
  }
}

struct TrainArgs {
  std::string data, out_checkpoint, config, log;
  uint64_t seed = 0;
  std::optional<int> epochs;
  std::optional<double> lr;
  SplitArgs split;
};

int TrainCmd(const TrainArgs& a) {
  Settings s;
  ApplyConfigFile(a.config, s);
  if (a.epochs) s.model.epochs = *a.epochs;
  if (a.lr) s.model.lr = *a.lr;
  Validate(s);
  if (a.out_checkpoint.empty()) throw ValidationError("--out-checkpoint is required");
  const Dataset ds = ReadDataset(a.data);
  const DatasetSplit split = MakeSplit(ds, a.split, a.seed);
  const std::vector<TrainingExample> examples = LoadTrainingExamples(ds, a.data, split.train_ids);
  if (examples.empty()) throw ValidationError("no training image has annotated crops");
  std::cerr << "training on " << examples.size() << " images, " << s.model.epochs << " epochs\n";

  std::string log_text;
  TrainLog log;
  const CropModel model = Train(examples, s.model, a.seed, &log, [&](int epoch, double loss) {
    ordered_json j;
    j["epoch"] = epoch;
    j["loss"] = loss;
    log_text += j.dump() + "\n";
    std::cerr << "epoch " << epoch << " loss " << loss << "\n";
  });
  try {
    if (const fs::path parent = fs::path(a.out_checkpoint).parent_path(); !parent.empty()) {
      fs::create_directories(parent);
    }
    SaveCheckpoint(model, a.out_checkpoint);
  } catch (const std::exception& e) {
    throw EnvironmentError(e.what());
  }
  WriteOutput(a.log.empty() ? a.out_checkpoint + ".log.jsonl" : a.log, log_text);
  return kOk;
}

struct EvalArgs {
  std::string data, checkpoint, predictions, baseline, out_report, truth = "mos",
                                                                   write_predictions;
  uint64_t seed = 0;
  int threads = 1;
  bool table = false;
  SplitArgs split;
};

int EvalCmd(const EvalArgs& a) {
  const int sources = !a.checkpoint.empty() + !a.predictions.empty() + !a.baseline.empty();
  if (sources != 1) throw ValidationError("give exactly one of --checkpoint, --predictions, --baseline");
  if (a.threads < 1) throw ValidationError("--threads must be >= 1");
  const Groundtruth truth = a.truth == "planted" ? Groundtruth::kPlanted : Groundtruth::kMos;
  const Dataset ds = ReadDataset(a.data);
  const std::vector<std::string> ids =
      a.split.test_count > 0 ? MakeSplit(ds, a.split, a.seed).test_ids : AllIds(ds);
  std::vector<const AnnotatedImage*> images = SelectImages(ds, ids);

  EvalReport report;
  std::string method;
  std::optional<double> planted_top1;
  try {
    if (!a.baseline.empty()) {
      method = "baseline_" + a.baseline;
      std::vector<CropBox> choices;
      for (const AnnotatedImage* img : images) {
        std::vector<CropBox> boxes;
        for (const auto& c : img->crops) boxes.push_back(c.crop);
        if (a.baseline == "n") choices.push_back(BaselineN(img->dims));
        else if (a.baseline == "c") choices.push_back(BaselineC(img->dims));
        else choices.push_back(BaselineL(boxes));
      }
      report = EvaluateChoices(ds, images, choices, truth);
    } else {
      std::vector<std::vector<double>> scores;
      bool per_candidate = true;
      if (!a.checkpoint.empty()) {
        method = "model";
        const CropModel model = ReadCheckpoint(a.checkpoint);
        scores = PredictImages(model, images, a.data, a.threads);
        if (!a.write_predictions.empty()) {
          std::string text;
          for (size_t i = 0; i < images.size(); ++i) {
            text += ScoresToPredictionLine(images[i]->id, scores[i]);
          }
          WriteOutput(a.write_predictions, text);
        }
      } else {
        method = "predictions";
        RequireFile(a.predictions, "predictions");
        const PredictionFile pf = LoadPredictions(a.predictions);
        images = SelectImages(ds, pf.ids);
        if (pf.single_choice) {
          per_candidate = false;
          report = EvaluateChoices(ds, images, pf.crops, truth);
        } else {
          scores = pf.scores;
        }
      }
      if (per_candidate) {
        report = EvaluateScores(ds, images, scores, truth, a.threads);
        if (truth == Groundtruth::kPlanted) planted_top1 = PlantedTop1Rate(images, scores);
      }
    }
  } catch (const std::logic_error& e) {
    throw ValidationError(e.what());
  }

  ordered_json j = ordered_json::parse(EvalReportToJson(report));
  j["method"] = method;
  j["groundtruth"] = a.truth;
  j["images"] = images.size();
  if (planted_top1) j["planted_top1"] = *planted_top1;
  WriteOutput(a.out_report, j.dump(2) + "\n");
  if (a.table) std::cerr << EvalReportTable(report, method);
  return kOk;
}

struct CropArgs {
  std::string image, checkpoint, aspect, out_dir, config, grid;
  int top_k = 0;
  double tol = 0.05;
};

double ParseAspect(const std::string& text) {
  const size_t colon = text.find(':');
  try {
    if (colon == std::string::npos) return std::stod(text);
    const double w = std::stod(text.substr(0, colon));
    const double h = std::stod(text.substr(colon + 1));
    if (!(w > 0) || !(h > 0)) throw std::invalid_argument("non-positive");
    return w / h;
  } catch (const std::exception&) {
    throw ValidationError("--aspect expects w:h, got '" + text + "'");
  }
}

int CropCmd(const CropArgs& a) {
  if ((a.top_k > 0) == !a.aspect.empty()) throw ValidationError("give exactly one of --top-k, --aspect");
  if (a.out_dir.empty()) throw ValidationError("--out-dir is required");
  if (a.tol < 0) throw ValidationError("--tol must be >= 0");
  Settings s;
  ApplyConfigFile(a.config, s);
  ApplyGridOverrides(a.grid, s.grid);
  Validate(s);
  RequireFile(a.image, "image");
  const Image image = ReadImage(a.image);
  const CropModel model = ReadCheckpoint(a.checkpoint);
  const std::vector<CropBox> boxes = CandidateBoxes(image.dims(), s.grid);
  const std::vector<CropScore> scores = model.ScoreCrops(image, boxes);

  std::vector<CropBox> chosen;
  if (a.top_k > 0) {
    chosen = PredictTopK(model, image, s.grid, std::min<int>(a.top_k, static_cast<int>(boxes.size())));
  } else {
    try {
      chosen.push_back(PredictBestForAspect(model, image, s.grid, ParseAspect(a.aspect), a.tol));
    } catch (const NotFoundError& e) {
      throw ValidationError(e.what());
    }
  }
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  ordered_json out = ordered_json::array();
  for (size_t r = 0; r < chosen.size(); ++r) {
    const size_t idx = static_cast<size_t>(std::find(boxes.begin(), boxes.end(), chosen[r]) - boxes.begin());
    const std::string file = (fs::path(a.out_dir) / ("crop_" + std::to_string(r + 1) + ".png")).string();
    try {
      WriteImage(CropImage(image, chosen[r]), file);
    } catch (const std::exception& e) {
      throw EnvironmentError(e.what());
    }
    ordered_json j;
    j["rank"] = r + 1;
    j["x1"] = chosen[r].x1;
    j["y1"] = chosen[r].y1;
    j["x2"] = chosen[r].x2;
    j["y2"] = chosen[r].y2;
    j["aspect_ratio"] = chosen[r].AspectRatio();
    j["score"] = scores[idx].score;
    j["mos"] = model.ToMos(scores[idx].score);
    j["file"] = fs::path(file).filename().string();
    out.push_back(std::move(j));
  }
  WriteOutput((fs::path(a.out_dir) / "crops.json").string(), out.dump(2) + "\n");
  return kOk;
}

struct BenchArgs {
  std::string image_dir, checkpoint, config, grid, out;
  int repeat = 3;
};

int BenchCmd(const BenchArgs& a) {
  if (a.repeat < 1) throw ValidationError("--repeat must be >= 1");
  if (!fs::is_directory(a.image_dir)) throw ValidationError("image directory not found: " + a.image_dir);
  Settings s;
  ApplyConfigFile(a.config, s);
  ApplyGridOverrides(a.grid, s.grid);
  Validate(s);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(a.image_dir)) {
    const std::string ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".ppm" || ext == ".png")) files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no .ppm or .png files in " + a.image_dir);
  CropModel model = ReadCheckpoint(a.checkpoint);

  ScoreTiming sum;
  int64_t scored = 0, crops = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int rep = 0; rep < a.repeat; ++rep) {
    for (const std::string& f : files) {
      const Image image = ReadImage(f);
      const std::vector<CropBox> boxes = CandidateBoxes(image.dims(), s.grid);
      ScoreTiming t;
      model.ScoreCrops(image, boxes, &t);
      sum.resize_seconds += t.resize_seconds;
      sum.feature_seconds += t.feature_seconds;
      sum.head_seconds += t.head_seconds;
      sum.total_seconds += t.total_seconds;
      crops += static_cast<int64_t>(boxes.size());
      ++scored;
    }
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ordered_json j;
  j["images"] = files.size();
  j["repeat"] = a.repeat;
  j["scored"] = scored;
  j["candidates_per_image"] = static_cast<double>(crops) / static_cast<double>(scored);
  j["images_per_second"] = static_cast<double>(scored) / sum.total_seconds;
  j["wall_seconds"] = wall;
  j["mean_seconds"] = {{"resize", sum.resize_seconds / scored},
                       {"features", sum.feature_seconds / scored},
                       {"head", sum.head_seconds / scored},
                       {"total", sum.total_seconds / scored}};
  j["head_fraction"] = sum.head_seconds / sum.total_seconds;
  j["feature_passes"] = model.feature_passes();
  j["note"] = "CPU timing; not comparable with GPU frame rates";
  WriteOutput(a.out, j.dump(2) + "\n");
  if (model.feature_passes() != scored) {
    std::cerr << "error: " << model.feature_passes() << " feature passes for " << scored
              << " images\n";
    return kInternal;
  }
  return kOk;
}

struct ServeArgs {
  std::string data, checkpoint, state_dir, static_dir, export_path, host = "127.0.0.1";
  std::optional<int> port;
};

int ServeCmd(const ServeArgs& a) {
  int port = 8080;
  if (a.port) {
    port = *a.port;
  } else if (const char* env = std::getenv("GAIC_PORT")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*env == '\0' || *end != '\0') throw ValidationError("GAIC_PORT is not a number");
    port = static_cast<int>(v);
  }
  if (port < 0 || port > 65535) throw ValidationError("port out of range");
  if (!a.data.empty()) ReadDataset(a.data);
  if (!a.checkpoint.empty()) ReadCheckpoint(a.checkpoint);
  if (!a.static_dir.empty() && !fs::is_directory(a.static_dir)) {
    throw ValidationError("static directory not found: " + a.static_dir);
  }

  ServiceOptions opt;
  opt.store.data_path = a.data;
  opt.store.state_dir = !a.state_dir.empty() ? a.state_dir
                        : !a.data.empty()   ? a.data + ".state"
                                            : "annotate_state";
  opt.checkpoint = a.checkpoint;
  opt.static_dir = a.static_dir;
  opt.export_path = a.export_path;

  // Signals are taken synchronously by a watcher thread; every other thread
  // inherits the blocked mask.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  std::unique_ptr<AnnotateService> service;
  try {
    service = std::make_unique<AnnotateService>(opt);
  } catch (const std::exception& e) {
    throw EnvironmentError(std::string("cannot open annotation state: ") + e.what());
  }
  httplib::Server server;
  // The library default adds SO_REUSEPORT, which would let a second server
  // share a busy port instead of failing.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  service->Register(server);
  if (port == 0) {
    port = server.bind_to_any_port(a.host);
    if (port < 0) throw EnvironmentError("cannot bind " + a.host);
  } else if (!server.bind_to_port(a.host, port)) {
    throw EnvironmentError("cannot bind " + a.host + ":" + std::to_string(port) + " (port busy?)");
  }
  std::cerr << "serving on http://" << a.host << ":" << port << "\n";
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&set, &sig);
    std::cerr << "signal " << sig << ", stopping\n";
    server.stop();
  });
  server.listen_after_bind();
  // listen returned on its own (not via a signal): release the watcher.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  return kOk;
}

int Run(int argc, char** argv) {
  CLI::App app{"Grid-anchor image cropping: candidates, training, evaluation, annotation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gaic 1.0");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "List candidate crops as JSON lines");
  g->add_option("--image-h", gen.image_h, "Image height in pixels");
  g->add_option("--image-w", gen.image_w, "Image width in pixels");
  g->add_option("--image", gen.image, "Take the size from an image file");
  g->add_option("--grid", gen.grid, "Grid overrides, e.g. M=12,lambda=0.4");
  g->add_option("--config", gen.config, "JSON config file");
  g->add_option("--out", gen.out, "Output path (default: stdout)");

  SynthArgs syn;
  auto* sy = app.add_subcommand("synth", "Generate a planted-rule synthetic dataset");
  sy->add_option("--out", syn.out, "Dataset path; images go to images/ next to it")->required();
  sy->add_option("--count", syn.count, "Number of images")->capture_default_str();
  sy->add_option("--seed", syn.seed, "Random seed")->capture_default_str();
  sy->add_option("--min-side", syn.min_side, "Smallest short side")->capture_default_str();
  sy->add_option("--max-side", syn.max_side, "Largest short side")->capture_default_str();
  sy->add_option("--a", syn.a, "Weight of the thirds distance")->capture_default_str();
  sy->add_option("--b", syn.b, "Weight of the cut-out subject fraction")->capture_default_str();
  sy->add_option("--noise", syn.noise, "MOS noise sigma")->capture_default_str();
  sy->add_option("--grid", syn.grid, "Grid overrides");
  sy->add_option("--config", syn.config, "JSON config file");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model on a dataset");
  t->add_option("--data", tr.data, "Dataset file")->required();
  t->add_option("--out-checkpoint", tr.out_checkpoint, "Checkpoint path")->required();
  t->add_option("--seed", tr.seed, "Random seed")->capture_default_str();
  t->add_option("--epochs", tr.epochs, "Epochs (default 40)");
  t->add_option("--lr", tr.lr, "Learning rate (default 1e-4)");
  t->add_option("--test-count", tr.split.test_count, "Hold out this many images")->capture_default_str();
  t->add_option("--split-seed", tr.split.split_seed, "Seed of the hold-out split (default: --seed)");
  t->add_option("--log", tr.log, "Per-epoch log (default: <checkpoint>.log.jsonl)");
  t->add_option("--config", tr.config, "JSON config file");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a model, a baseline or a predictions file");
  e->add_option("--data", ev.data, "Dataset file")->required();
  e->add_option("--checkpoint", ev.checkpoint, "Model checkpoint");
  e->add_option("--predictions", ev.predictions, "Predictions JSONL");
  e->add_option("--baseline", ev.baseline, "Baseline method")->check(CLI::IsMember({"n", "c", "l"}));
  e->add_option("--out-report", ev.out_report, "Report path (default: stdout)");
  e->add_option("--truth", ev.truth, "Groundtruth")->check(CLI::IsMember({"mos", "planted"}))->capture_default_str();
  e->add_option("--threads", ev.threads, "Worker threads")->capture_default_str();
  e->add_option("--seed", ev.seed, "Seed of the hold-out split")->capture_default_str();
  e->add_option("--test-count", ev.split.test_count, "Evaluate only the held-out images")->capture_default_str();
  e->add_option("--split-seed", ev.split.split_seed, "Overrides --seed for the split");
  e->add_option("--write-predictions", ev.write_predictions, "Also write model scores as JSONL");
  e->add_flag("--table", ev.table, "Print a summary table to stderr");

  CropArgs cr;
  auto* c = app.add_subcommand("crop", "Crop an image with a trained model");
  c->add_option("--image", cr.image, "Input image")->required();
  c->add_option("--checkpoint", cr.checkpoint, "Model checkpoint")->required();
  c->add_option("--top-k", cr.top_k, "Write the k best crops");
  c->add_option("--aspect", cr.aspect, "Best crop near this aspect ratio, w:h");
  c->add_option("--tol", cr.tol, "Relative aspect tolerance")->capture_default_str();
  c->add_option("--out-dir", cr.out_dir, "Output directory")->required();
  c->add_option("--grid", cr.grid, "Grid overrides");
  c->add_option("--config", cr.config, "JSON config file");

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "Time scoring over a directory of images");
  b->add_option("--image-dir", be.image_dir, "Directory of .ppm/.png images")->required();
  b->add_option("--checkpoint", be.checkpoint, "Model checkpoint")->required();
  b->add_option("--repeat", be.repeat, "Passes over the directory")->capture_default_str();
  b->add_option("--out", be.out, "Report path (default: stdout)");
  b->add_option("--grid", be.grid, "Grid overrides");
  b->add_option("--config", be.config, "JSON config file");

  ServeArgs se;
  auto* s = app.add_subcommand("serve", "Run the annotation service");
  s->add_option("--data", se.data, "Dataset to annotate");
  s->add_option("--checkpoint", se.checkpoint, "Model for the rankings view");
  s->add_option("--port", se.port, "Port (default: $GAIC_PORT or 8080; 0 picks one)");
  s->add_option("--host", se.host, "Listen address")->capture_default_str();
  s->add_option("--state-dir", se.state_dir, "Event log directory (default: <data>.state)");
  s->add_option("--static-dir", se.static_dir, "UI assets to serve at /");
  s->add_option("--export-path", se.export_path, "Default target of POST /api/export");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*g) return Gen(gen);
    if (*sy) return Synth(syn);
    if (*t) return TrainCmd(tr);
    if (*e) return EvalCmd(ev);
    if (*c) return CropCmd(cr);
    if (*b) return BenchCmd(be);
    if (*s) return ServeCmd(se);
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kValidation;
  } catch (const EnvironmentError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kEnvironment;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace gaic::cli

int main(int argc, char** argv) {
  gaic::KeepLargeBuffersOnHeap();
  return gaic::cli::Run(argc, argv);
}
