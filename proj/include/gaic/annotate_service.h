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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gaic/crop_model.h"
#include "gaic/dataset.h"

namespace httplib {
class Server;
}

namespace gaic {

struct RatingEvent {
  uint64_t seq = 0;
  std::string image_id;
  int crop_index = 0;
  std::string rater;
  int score = 0;
  int64_t timestamp_ms = 0;
};

// Outcome of a rating request, mapped one-to-one onto HTTP statuses.
enum class RatingStatus { kOk, kUnknownImage, kUnknownCrop, kDuplicate, kBadScore, kBadRater };

struct RatingResult {
  RatingStatus status = RatingStatus::kOk;
  double mos = 0.0;
  double std = 0.0;
  int count = 0;
};

struct StoreOptions {
  // Seed dataset; ratings recorded there count toward MOS but carry no rater.
  std::string data_path;
  // Holds events.jsonl and the snapshot; created when missing.
  std::string state_dir;
  int snapshot_every = 500;
  int check_every = 100;
  int target_raters = 7;  // progress indicator only, never a cap
};

// Event-sourced rating store. Writers are serialized and each event is on disk
// (fsync) before AddRating returns. Readers take an immutable view that
// already contains every acknowledged event.
class AnnotationStore {
 public:
  struct ImageState {
    AnnotatedImage image;
    // Raters who have rated each crop through the service.
    std::vector<std::set<std::string>> raters;
  };
  struct View {
    GridSpec grid_spec;
    std::optional<SyntheticRule> synthetic_rule;
    std::vector<std::shared_ptr<const ImageState>> images;  // sorted by id
    uint64_t events = 0;

    const ImageState* Find(const std::string& id) const;
    Dataset ToDataset() const;
  };

  explicit AnnotationStore(const StoreOptions& options);
  ~AnnotationStore();
  AnnotationStore(const AnnotationStore&) = delete;
  AnnotationStore& operator=(const AnnotationStore&) = delete;

  std::shared_ptr<const View> Snapshot() const;
  RatingResult AddRating(const std::string& image_id, int crop_index, const std::string& rater,
                         int score);

  // Recomputes MOS and std of every crop from the seed dataset plus the event
  // log on disk and compares them with the cached values. Returns the number
  // of crops that disagree.
  int VerifyAgainstLog() const;
  int consistency_failures() const;

  // Writes the current view as a dataset file (atomic rename).
  void Export(const std::string& path) const;

  const StoreOptions& options() const { return options_; }
  std::string LogPath() const;

 private:
  void Replay();
  int VerifyAgainstLogLocked() const;
  void WriteSnapshot();
  void Publish(std::shared_ptr<const View> view);

  StoreOptions options_;
  Dataset seed_;
  mutable std::mutex view_mutex_;  // guards the pointer swap only
  std::shared_ptr<const View> view_;
  mutable std::mutex write_mutex_;
  int log_fd_ = -1;
  int since_snapshot_ = 0;
  int since_check_ = 0;
  int failures_ = 0;
};

struct ServiceOptions {
  StoreOptions store;
  std::string checkpoint;  // optional default model for rankings
  std::string static_dir;  // UI assets; empty disables static serving
  std::string export_path;  // default target of POST /api/export
};

// HTTP front end over an AnnotationStore.
class AnnotateService {
 public:
  explicit AnnotateService(const ServiceOptions& options);
  ~AnnotateService();

  void Register(httplib::Server& server);
  AnnotationStore& store() { return store_; }

  // Loads (and caches) a checkpoint; an empty path selects the default one.
  // Returns nullptr when no checkpoint is configured.
  std::shared_ptr<const CropModel> Model(const std::string& path);

 private:
  ServiceOptions options_;
  AnnotationStore store_;
  std::mutex model_mutex_;
  std::map<std::string, std::shared_ptr<const CropModel>> models_;
};

}  // namespace gaic
