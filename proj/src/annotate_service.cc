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

#include "gaic/annotate_service.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "gaic/metrics.h"

namespace gaic {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string ReadAll(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Write to a sibling temp file, fsync, then rename over the target.
void WriteFileAtomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw std::runtime_error("cannot write " + tmp + ": " + std::strerror(errno));
  size_t done = 0;
  while (done < text.size()) {
    const ssize_t n = ::write(fd, text.data() + done, text.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw std::runtime_error("write failed: " + tmp);
    }
    done += static_cast<size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) throw std::runtime_error("fsync failed: " + tmp);
  fs::rename(tmp, path);
}

int64_t NowMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string EventLine(const RatingEvent& e) {
  ordered_json j;
  j["seq"] = e.seq;
  j["image"] = e.image_id;
  j["crop"] = e.crop_index;
  j["rater"] = e.rater;
  j["score"] = e.score;
  j["ts"] = e.timestamp_ms;
  return j.dump() + "\n";
}

RatingEvent ParseEvent(const json& j) {
  RatingEvent e;
  e.seq = j.at("seq").get<uint64_t>();
  e.image_id = j.at("image").get<std::string>();
  e.crop_index = j.at("crop").get<int>();
  e.rater = j.at("rater").get<std::string>();
  e.score = j.at("score").get<int>();
  e.timestamp_ms = j.at("ts").get<int64_t>();
  return e;
}

void ApplyRating(CropAnnotation& crop, int score) {
  crop.ratings.push_back(score);
  const auto [mean, std] = ComputeMos(crop.ratings);
  crop.mos = mean;
  crop.rating_std = std;
}

using StatePtr = std::shared_ptr<AnnotationStore::ImageState>;

std::vector<StatePtr> FreshStates(const Dataset& ds) {
  std::vector<StatePtr> out;
  for (const AnnotatedImage& img : ds.images) {
    auto st = std::make_shared<AnnotationStore::ImageState>();
    st->image = img;
    st->raters.resize(img.crops.size());
    out.push_back(std::move(st));
  }
  std::sort(out.begin(), out.end(),
            [](const StatePtr& a, const StatePtr& b) { return a->image.id < b->image.id; });
  return out;
}

StatePtr FindState(std::vector<StatePtr>& states, const std::string& id) {
  auto it = std::lower_bound(states.begin(), states.end(), id,
                             [](const StatePtr& s, const std::string& v) { return s->image.id < v; });
  return (it != states.end() && (*it)->image.id == id) ? *it : nullptr;
}

// Reads every complete event in the log. A final line without its newline is
// the remains of a write that was never acknowledged; `valid_bytes` stops
// before it so the caller can truncate.
std::vector<RatingEvent> ReadLog(const std::string& path, size_t* valid_bytes) {
  std::vector<RatingEvent> events;
  if (valid_bytes) *valid_bytes = 0;
  if (!fs::exists(path)) return events;
  const std::string text = ReadAll(path);
  size_t pos = 0, line = 0;
  while (pos < text.size()) {
    const size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    ++line;
    try {
      events.push_back(ParseEvent(json::parse(text.substr(pos, nl - pos))));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ": line " + std::to_string(line) + ": " + e.what());
    }
    if (events.back().seq != events.size()) {
      throw std::runtime_error(path + ": line " + std::to_string(line) + ": sequence gap");
    }
    pos = nl + 1;
  }
  if (valid_bytes) *valid_bytes = pos;
  return events;
}

}  // namespace

const AnnotationStore::ImageState* AnnotationStore::View::Find(const std::string& id) const {
  auto it = std::lower_bound(
      images.begin(), images.end(), id,
      [](const std::shared_ptr<const ImageState>& s, const std::string& v) { return s->image.id < v; });
  return (it != images.end() && (*it)->image.id == id) ? it->get() : nullptr;
}

Dataset AnnotationStore::View::ToDataset() const {
  Dataset ds;
  ds.grid_spec = grid_spec;
  ds.synthetic_rule = synthetic_rule;
  for (const auto& st : images) ds.images.push_back(st->image);
  return ds;
}

AnnotationStore::AnnotationStore(const StoreOptions& options) : options_(options) {
  if (options_.state_dir.empty()) throw std::invalid_argument("state_dir is required");
  if (options_.check_every < 1 || options_.snapshot_every < 1 || options_.target_raters < 1) {
    throw std::invalid_argument("store intervals must be >= 1");
  }
  if (!options_.data_path.empty()) seed_ = LoadDataset(options_.data_path);
  fs::create_directories(options_.state_dir);
  Replay();
  log_fd_ = ::open(LogPath().c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (log_fd_ < 0) {
    throw std::runtime_error("cannot open event log " + LogPath() + ": " + std::strerror(errno));
  }
}

AnnotationStore::~AnnotationStore() {
  if (log_fd_ >= 0) ::close(log_fd_);
}

std::string AnnotationStore::LogPath() const {
  return (fs::path(options_.state_dir) / "events.jsonl").string();
}

void AnnotationStore::Replay() {
  size_t valid = 0;
  const std::vector<RatingEvent> events = ReadLog(LogPath(), &valid);
  if (fs::exists(LogPath()) && fs::file_size(LogPath()) > valid) fs::resize_file(LogPath(), valid);

  Dataset base = seed_;
  uint64_t start = 0;
  std::map<std::string, std::vector<std::pair<int, std::string>>> snapshot_raters;
  const fs::path snap = fs::path(options_.state_dir) / "snapshot.json";
  if (fs::exists(snap)) {
    const json j = json::parse(ReadAll(snap.string()));
    const uint64_t covered = j.at("events").get<uint64_t>();
    // A snapshot ahead of the log cannot be trusted; rebuild from events.
    if (covered <= events.size()) {
      base = ParseDataset(j.at("dataset").get<std::string>());
      start = covered;
      for (const auto& [id, list] : j.at("raters").items()) {
        for (const auto& pair : list) {
          snapshot_raters[id].emplace_back(pair.at(0).get<int>(), pair.at(1).get<std::string>());
        }
      }
    }
  }

  std::vector<StatePtr> states = FreshStates(base);
  for (const auto& [id, list] : snapshot_raters) {
    StatePtr st = FindState(states, id);
    if (!st) throw std::runtime_error("snapshot names unknown image " + id);
    for (const auto& [crop, rater] : list) st->raters.at(static_cast<size_t>(crop)).insert(rater);
  }
  for (size_t i = start; i < events.size(); ++i) {
    const RatingEvent& e = events[i];
    StatePtr st = FindState(states, e.image_id);
    if (!st || e.crop_index < 0 || static_cast<size_t>(e.crop_index) >= st->image.crops.size()) {
      throw std::runtime_error("event " + std::to_string(e.seq) + " names an unknown crop");
    }
    ApplyRating(st->image.crops[static_cast<size_t>(e.crop_index)], e.score);
    st->raters[static_cast<size_t>(e.crop_index)].insert(e.rater);
  }

  auto view = std::make_shared<View>();
  view->grid_spec = seed_.grid_spec;
  view->synthetic_rule = seed_.synthetic_rule;
  view->images.assign(states.begin(), states.end());
  view->events = events.size();
  Publish(std::move(view));
}

std::shared_ptr<const AnnotationStore::View> AnnotationStore::Snapshot() const {
  std::lock_guard lock(view_mutex_);
  return view_;
}

void AnnotationStore::Publish(std::shared_ptr<const View> view) {
  std::lock_guard lock(view_mutex_);
  view_ = std::move(view);
}

RatingResult AnnotationStore::AddRating(const std::string& image_id, int crop_index,
                                        const std::string& rater, int score) {
  std::lock_guard lock(write_mutex_);
  const std::shared_ptr<const View> current = Snapshot();
  RatingResult res;
  auto it = std::lower_bound(
      current->images.begin(), current->images.end(), image_id,
      [](const std::shared_ptr<const ImageState>& s, const std::string& v) { return s->image.id < v; });
  if (it == current->images.end() || (*it)->image.id != image_id) {
    res.status = RatingStatus::kUnknownImage;
    return res;
  }
  const ImageState& old = **it;
  if (crop_index < 0 || static_cast<size_t>(crop_index) >= old.image.crops.size()) {
    res.status = RatingStatus::kUnknownCrop;
    return res;
  }
  if (score < 1 || score > 5) {
    res.status = RatingStatus::kBadScore;
    return res;
  }
  if (rater.empty()) {
    res.status = RatingStatus::kBadRater;
    return res;
  }
  const auto idx = static_cast<size_t>(crop_index);
  if (old.raters[idx].contains(rater)) {
    res.status = RatingStatus::kDuplicate;
    return res;
  }

  RatingEvent e{current->events + 1, image_id, crop_index, rater, score, NowMs()};
  const std::string line = EventLine(e);
  size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::write(log_fd_, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("event log write failed: " + std::string(std::strerror(errno)));
    }
    done += static_cast<size_t>(n);
  }
  if (::fsync(log_fd_) != 0) throw std::runtime_error("event log fsync failed");

  auto updated = std::make_shared<ImageState>(old);
  ApplyRating(updated->image.crops[idx], score);
  updated->raters[idx].insert(rater);
  auto view = std::make_shared<View>(*current);
  view->images[static_cast<size_t>(it - current->images.begin())] = updated;
  view->events = e.seq;
  Publish(view);

  const CropAnnotation& c = updated->image.crops[idx];
  res.mos = *c.mos;
  res.std = c.rating_std;
  res.count = static_cast<int>(c.ratings.size());

  if (++since_check_ >= options_.check_every) {
    since_check_ = 0;
    const int bad = VerifyAgainstLogLocked();
    if (bad > 0) {
      failures_ += bad;
      std::cerr << "annotate: " << bad << " crops disagree with the event log\n";
    }
  }
  if (++since_snapshot_ >= options_.snapshot_every) {
    since_snapshot_ = 0;
    WriteSnapshot();
  }
  return res;
}

int AnnotationStore::VerifyAgainstLog() const {
  std::lock_guard lock(write_mutex_);
  return VerifyAgainstLogLocked();
}

int AnnotationStore::VerifyAgainstLogLocked() const {
  std::vector<StatePtr> states = FreshStates(seed_);
  for (const RatingEvent& e : ReadLog(LogPath(), nullptr)) {
    StatePtr st = FindState(states, e.image_id);
    if (!st || static_cast<size_t>(e.crop_index) >= st->image.crops.size()) return 1;
    ApplyRating(st->image.crops[static_cast<size_t>(e.crop_index)], e.score);
  }
  const std::shared_ptr<const View> view = Snapshot();
  if (states.size() != view->images.size()) return 1;
  int bad = 0;
  for (size_t i = 0; i < states.size(); ++i) {
    const auto& want = states[i]->image.crops;
    const auto& have = view->images[i]->image.crops;
    for (size_t c = 0; c < want.size(); ++c) {
      if (want[c].ratings != have[c].ratings || want[c].mos != have[c].mos ||
          want[c].rating_std != have[c].rating_std) {
        ++bad;
      }
    }
  }
  return bad;
}

int AnnotationStore::consistency_failures() const {
  std::lock_guard lock(write_mutex_);
  return failures_;
}

void AnnotationStore::WriteSnapshot() {
  const std::shared_ptr<const View> view = Snapshot();
  ordered_json j;
  j["events"] = view->events;
  j["dataset"] = SerializeDataset(view->ToDataset());
  ordered_json raters = ordered_json::object();
  for (const auto& st : view->images) {
    ordered_json list = ordered_json::array();
    for (size_t c = 0; c < st->raters.size(); ++c) {
      for (const std::string& r : st->raters[c]) list.push_back({c, r});
    }
    if (!list.empty()) raters[st->image.id] = std::move(list);
  }
  j["raters"] = std::move(raters);
  WriteFileAtomic((fs::path(options_.state_dir) / "snapshot.json").string(), j.dump() + "\n");
}

void AnnotationStore::Export(const std::string& path) const {
  WriteFileAtomic(path, SerializeDataset(Snapshot()->ToDataset()));
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

void SendJson(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, int status, const std::string& message) {
  ordered_json j;
  j["error"] = message;
  SendJson(res, status, j);
}

ordered_json CropJson(const CropAnnotation& c, size_t index) {
  ordered_json j;
  j["index"] = index;
  j["x1"] = c.crop.x1;
  j["y1"] = c.crop.y1;
  j["x2"] = c.crop.x2;
  j["y2"] = c.crop.y2;
  j["aspect_ratio"] = c.crop.AspectRatio();
  j["count"] = c.ratings.size();
  if (c.mos) {
    j["mos"] = *c.mos;
    j["std"] = c.rating_std;
  }
  return j;
}

int ParseIndex(const std::string& s) {
  if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), ::isdigit)) return -1;
  return std::stoi(s);
}

}  // namespace

AnnotateService::AnnotateService(const ServiceOptions& options)
    : options_(options), store_(options.store) {
  if (options_.export_path.empty()) {
    options_.export_path = (fs::path(options_.store.state_dir) / "export.jsonl").string();
  }
}

AnnotateService::~AnnotateService() = default;

std::shared_ptr<const CropModel> AnnotateService::Model(const std::string& path) {
  const std::string key = path.empty() ? options_.checkpoint : path;
  if (key.empty()) return nullptr;
  std::lock_guard lock(model_mutex_);
  auto it = models_.find(key);
  if (it != models_.end()) return it->second;
  auto model = std::make_shared<const CropModel>(LoadCheckpoint(key));
  models_[key] = model;
  return model;
}

void AnnotateService::Register(httplib::Server& server) {
  server.Get("/api/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  server.Get("/api/images", [this](const httplib::Request&, httplib::Response& res) {
    const auto view = store_.Snapshot();
    ordered_json out = ordered_json::array();
    for (const auto& st : view->images) {
      const AnnotatedImage& img = st->image;
      size_t slots = 0;
      for (const CropAnnotation& c : img.crops) {
        slots += std::min(c.ratings.size(), static_cast<size_t>(store_.options().target_raters));
      }
      const size_t total = img.crops.size() * static_cast<size_t>(store_.options().target_raters);
      ordered_json j;
      j["id"] = img.id;
      j["h"] = img.dims.H;
      j["w"] = img.dims.W;
      j["n_candidates"] = img.crops.size();
      j["rating_progress"] = total == 0 ? 1.0 : static_cast<double>(slots) / total;
      out.push_back(std::move(j));
    }
    SendJson(res, 200, out);
  });

  server.Get("/api/images/:id/candidates", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
    const auto view = store_.Snapshot();
    const auto* st = view->Find(req.path_params.at("id"));
    if (!st) return SendError(res, 404, "unknown image");
    ordered_json j;
    j["id"] = st->image.id;
    j["h"] = st->image.dims.H;
    j["w"] = st->image.dims.W;
    ordered_json list = ordered_json::array();
    for (size_t i = 0; i < st->image.crops.size(); ++i) list.push_back(CropJson(st->image.crops[i], i));
    j["candidates"] = std::move(list);
    SendJson(res, 200, j);
  });

  // Assignment cursor: the first crop in canonical (aspect ratio) order that
  // this rater has not rated yet.
  server.Get("/api/images/:id/next", [this](const httplib::Request& req, httplib::Response& res) {
    const auto view = store_.Snapshot();
    const auto* st = view->Find(req.path_params.at("id"));
    if (!st) return SendError(res, 404, "unknown image");
    const std::string rater = req.get_param_value("rater");
    if (rater.empty()) return SendError(res, 422, "rater is required");
    ordered_json j;
    j["index"] = nullptr;
    size_t remaining = 0;
    for (size_t i = 0; i < st->raters.size(); ++i) {
      if (st->raters[i].contains(rater)) continue;
      if (remaining++ == 0) j["index"] = i;
    }
    j["remaining"] = remaining;
    SendJson(res, 200, j);
  });

  server.Get("/api/images/:id/image", [this](const httplib::Request& req, httplib::Response& res) {
    const auto view = store_.Snapshot();
    const auto* st = view->Find(req.path_params.at("id"));
    if (!st) return SendError(res, 404, "unknown image");
    if (st->image.image_path.empty() || options_.store.data_path.empty()) {
      return SendError(res, 404, "image has no pixels on file");
    }
    try {
      const Image img = ReadImage(ResolveImagePath(options_.store.data_path, st->image));
      res.set_content(EncodePng(img), "image/png");
    } catch (const std::exception& e) {
      SendError(res, 404, e.what());
    }
  });

  server.Post("/api/images/:id/crops/:idx/ratings", [this](const httplib::Request& req,
                                                           httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      return SendError(res, 400, "body is not JSON");
    }
    if (!body.is_object()) return SendError(res, 400, "body must be an object");
    const int idx = ParseIndex(req.path_params.at("idx"));
    const auto score_it = body.find("score");
    const auto rater_it = body.find("rater");
    int score = 0;
    if (score_it != body.end() && score_it->is_number_integer()) {
      const auto v = score_it->get<int64_t>();
      score = (v >= 1 && v <= 5) ? static_cast<int>(v) : 0;
    }
    std::string rater;
    if (rater_it != body.end() && rater_it->is_string()) rater = rater_it->get<std::string>();
    const RatingResult r = store_.AddRating(req.path_params.at("id"), idx, rater, score);
    switch (r.status) {
      case RatingStatus::kUnknownImage: return SendError(res, 404, "unknown image");
      case RatingStatus::kUnknownCrop: return SendError(res, 404, "unknown crop index");
      case RatingStatus::kDuplicate: return SendError(res, 409, "rater already rated this crop");
      case RatingStatus::kBadScore: return SendError(res, 422, "score must be an integer in 1..5");
      case RatingStatus::kBadRater: return SendError(res, 422, "rater must be a non-empty string");
      case RatingStatus::kOk: break;
    }
    ordered_json j;
    j["mos"] = r.mos;
    j["std"] = r.std;
    j["count"] = r.count;
    SendJson(res, 200, j);
  });

  server.Get("/api/images/:id/rankings", [this](const httplib::Request& req,
                                                 httplib::Response& res) {
    const auto view = store_.Snapshot();
    const auto* st = view->Find(req.path_params.at("id"));
    if (!st) return SendError(res, 404, "unknown image");
    std::shared_ptr<const CropModel> model;
    try {
      model = Model(req.get_param_value("checkpoint"));
    } catch (const std::exception& e) {
      return SendError(res, 409, std::string("checkpoint could not be loaded: ") + e.what());
    }
    if (!model) {
      return SendError(res, 409, "no checkpoint loaded; start with --checkpoint or pass ?checkpoint=");
    }
    Image pixels;
    try {
      pixels = ReadImage(ResolveImagePath(options_.store.data_path, st->image));
    } catch (const std::exception& e) {
      return SendError(res, 409, std::string("image pixels unavailable: ") + e.what());
    }
    std::vector<CropBox> boxes;
    for (const CropAnnotation& c : st->image.crops) boxes.push_back(c.crop);
    const std::vector<CropScore> scores = model->ScoreCrops(pixels, boxes);
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a].score > scores[b].score; });

    std::vector<double> g, p;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (!st->image.crops[i].mos) continue;
      g.push_back(*st->image.crops[i].mos);
      p.push_back(scores[i].score);
    }
    ordered_json j;
    j["id"] = st->image.id;
    j["rated"] = g.size();
    j["srcc"] = nullptr;
    if (g.size() >= 2) {
      try {
        j["srcc"] = Srcc(g, p);
      } catch (const UndefinedCorrelationError& e) {
        j["srcc_note"] = e.what();
      }
    } else {
      j["srcc_note"] = "fewer than two rated crops";
    }
    ordered_json list = ordered_json::array();
    for (size_t rank = 0; rank < order.size(); ++rank) {
      ordered_json c = CropJson(st->image.crops[order[rank]], order[rank]);
      c["rank"] = rank + 1;
      c["score"] = model->ToMos(scores[order[rank]].score);
      list.push_back(std::move(c));
    }
    j["crops"] = std::move(list);
    SendJson(res, 200, j);
  });

  server.Post("/api/export", [this](const httplib::Request& req, httplib::Response& res) {
    std::string path = options_.export_path;
    if (!req.body.empty()) {
      try {
        const json body = json::parse(req.body);
        if (body.contains("path")) path = body.at("path").get<std::string>();
      } catch (const std::exception&) {
        return SendError(res, 400, "body must be JSON with an optional string 'path'");
      }
    }
    const auto view = store_.Snapshot();
    try {
      WriteFileAtomic(path, SerializeDataset(view->ToDataset()));
    } catch (const std::exception& e) {
      return SendError(res, 500, e.what());
    }
    ordered_json j;
    j["path"] = path;
    j["images"] = view->images.size();
    j["events"] = view->events;
    SendJson(res, 200, j);
  });

  server.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                                  std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      SendError(res, 500, e.what());
    } catch (...) {
      SendError(res, 500, "internal error");
    }
  });

  if (!options_.static_dir.empty()) {
    if (!server.set_mount_point("/", options_.static_dir)) {
      throw std::runtime_error("static directory not found: " + options_.static_dir);
    }
  }
}

}  // namespace gaic
