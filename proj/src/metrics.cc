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

#include "gaic/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace gaic {

std::vector<double> FractionalRanks(std::span<const double> v) {
  const size_t n = v.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i + 1;
    while (j < n && v[order[j]] == v[order[i]]) ++j;
    // positions i..j-1 (0-based) share ranks i+1..j
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double Srcc(std::span<const double> g, std::span<const double> p) {
  if (g.size() != p.size()) throw std::domain_error("srcc: length mismatch");
  if (g.size() < 2) throw std::domain_error("srcc: need at least 2 entries");
  for (size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i]) || !std::isfinite(p[i])) {
      throw std::domain_error("srcc: non-finite entry");
    }
  }
  const std::vector<double> rg = FractionalRanks(g);
  const std::vector<double> rp = FractionalRanks(p);
  const double n = static_cast<double>(rg.size());
  // Ranks always average to (n + 1) / 2.
  const double mean = 0.5 * (n + 1.0);
  double cov = 0.0, vg = 0.0, vp = 0.0;
  for (size_t i = 0; i < rg.size(); ++i) {
    const double a = rg[i] - mean;
    const double b = rp[i] - mean;
    cov += a * b;
    vg += a * a;
    vp += b * b;
  }
  if (vg == 0.0 || vp == 0.0) {
    throw UndefinedCorrelationError("srcc: constant vector has no ranking");
  }
  return std::clamp(cov / std::sqrt(vg * vp), -1.0, 1.0);
}

double Srcc(const ScorePair& pair) { return Srcc(pair.g, pair.p); }

double MeanSrcc(std::span<const ScorePair> pairs) {
  if (pairs.empty()) throw std::domain_error("mean srcc: no images");
  double sum = 0.0;
  for (const ScorePair& p : pairs) sum += Srcc(p);
  return sum / static_cast<double>(pairs.size());
}

std::vector<int> TopIndices(std::span<const double> scores, int n) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  idx.resize(std::min<size_t>(idx.size(), static_cast<size_t>(std::max(n, 0))));
  return idx;
}

double AccKN(std::span<const ScorePair> pairs,
             const std::vector<std::vector<int>>& returned, int N) {
  if (pairs.empty()) throw std::domain_error("acc: no images");
  if (returned.size() != pairs.size()) {
    throw std::domain_error("acc: one returned list per image required");
  }
  if (N < 1) throw std::domain_error("acc: N must be >= 1");
  const size_t K = returned.front().size();
  if (K < 1) throw std::domain_error("acc: K must be >= 1");

  size_t hits = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const std::vector<double>& g = pairs[i].g;
    if (returned[i].size() != K) {
      throw std::domain_error("acc: K differs between images");
    }
    if (K > g.size()) {
      throw std::domain_error("acc: K exceeds the candidate count of an image");
    }
    std::vector<char> in_top(g.size(), 0);
    for (int idx : TopIndices(g, N)) in_top[static_cast<size_t>(idx)] = 1;
    for (int c : returned[i]) {
      if (c < 0 || static_cast<size_t>(c) >= g.size()) {
        throw std::domain_error("acc: returned crop index out of range");
      }
      hits += in_top[static_cast<size_t>(c)];
    }
  }
  return static_cast<double>(hits) /
         (static_cast<double>(pairs.size()) * static_cast<double>(K));
}

double AvgAccN(std::span<const ScorePair> pairs,
               const std::array<std::vector<std::vector<int>>, 4>& returned_per_k,
               int N) {
  double sum = 0.0;
  for (int k = 0; k < kMaxK; ++k) {
    sum += AccKN(pairs, returned_per_k[static_cast<size_t>(k)], N);
  }
  return sum / kMaxK;
}

namespace {

std::string AccKey(int k, int n) {
  return std::to_string(k) + "/" + std::to_string(n);
}

}  // namespace

EvalReport Evaluate(std::span<const ScorePair> pairs, int threads) {
  if (pairs.empty()) throw std::domain_error("evaluate: no images");
  const size_t T = pairs.size();

  // Per-image work is independent; results land in fixed slots so the
  // aggregation below does not depend on scheduling.
  std::vector<double> srcc(T);
  std::array<std::vector<std::vector<int>>, 4> returned;
  for (auto& r : returned) r.resize(T);
  std::vector<std::exception_ptr> errors(T);

  auto work = [&](size_t begin, size_t step) {
    for (size_t i = begin; i < T; i += step) {
      try {
        srcc[i] = Srcc(pairs[i]);
        for (int k = 1; k <= kMaxK; ++k) {
          if (static_cast<size_t>(k) > pairs[i].p.size()) {
            throw std::domain_error("evaluate: image has fewer than 4 candidates");
          }
          returned[static_cast<size_t>(k - 1)][i] = TopIndices(pairs[i].p, k);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const size_t nthreads =
      std::clamp<size_t>(static_cast<size_t>(std::max(threads, 1)), 1, T);
  if (nthreads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < nthreads; ++t) pool.emplace_back(work, t, nthreads);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EvalReport report;
  report.per_image_srcc = srcc;
  double sum = 0.0;
  for (double s : srcc) sum += s;
  report.mean_srcc = sum / static_cast<double>(T);
  for (int n : kAccN) {
    double bar = 0.0;
    for (int k = 1; k <= kMaxK; ++k) {
      const double a = AccKN(pairs, returned[static_cast<size_t>(k - 1)], n);
      report.acc[AccKey(k, n)] = a;
      bar += a;
    }
    (n == 5 ? report.acc5_bar : report.acc10_bar) = bar / kMaxK;
  }
  return report;
}

EvalReport EvaluateSingleChoice(std::span<const std::vector<double>> mos,
                                std::span<const int> chosen) {
  if (mos.size() != chosen.size() || mos.empty()) {
    throw std::domain_error("evaluate: one choice per image required");
  }
  std::vector<ScorePair> pairs;
  std::vector<std::vector<int>> returned;
  for (size_t i = 0; i < mos.size(); ++i) {
    pairs.push_back({mos[i], {}});
    returned.push_back({chosen[i]});
  }
  EvalReport report;
  for (int n : kAccN) report.acc[AccKey(1, n)] = AccKN(pairs, returned, n);
  return report;
}

namespace {

// Shortest representation that round-trips, as printed by the JSON library.
nlohmann::ordered_json OptionalNumber(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string EvalReportToJson(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["mean_srcc"] = OptionalNumber(report.mean_srcc);
  nlohmann::ordered_json acc = nlohmann::ordered_json::object();
  for (int n : kAccN) {
    for (int k = 1; k <= kMaxK; ++k) {
      const auto it = report.acc.find(AccKey(k, n));
      acc[AccKey(k, n)] = it == report.acc.end()
                              ? nlohmann::ordered_json(nullptr)
                              : nlohmann::ordered_json(it->second);
    }
  }
  j["acc"] = acc;
  j["acc5_bar"] = OptionalNumber(report.acc5_bar);
  j["acc10_bar"] = OptionalNumber(report.acc10_bar);
  return j.dump(2) + "\n";
}

std::string EvalReportTable(const EvalReport& report, const std::string& method) {
  auto cell = [](const std::optional<double>& v, double scale, const char* fmt) {
    if (!v) return std::string("--");
    char buf[32];
    std::snprintf(buf, sizeof(buf), fmt, *v * scale);
    return std::string(buf);
  };
  auto acc = [&](int k, int n) -> std::optional<double> {
    const auto it = report.acc.find(AccKey(k, n));
    if (it == report.acc.end()) return std::nullopt;
    return it->second;
  };

  std::ostringstream os;
  os << "Method | SRCC | Acc1/5 | Acc2/5 | Acc3/5 | Acc4/5 | Acc5_bar | "
        "Acc1/10 | Acc2/10 | Acc3/10 | Acc4/10 | Acc10_bar\n";
  os << method << " | " << cell(report.mean_srcc, 1.0, "%.3f");
  for (int n : kAccN) {
    for (int k = 1; k <= kMaxK; ++k) os << " | " << cell(acc(k, n), 100.0, "%.1f");
    os << " | "
       << cell(n == 5 ? report.acc5_bar : report.acc10_bar, 100.0, "%.1f");
  }
  os << "\n";
  return os.str();
}

double Iou(const CropBox& a, const CropBox& b) {
  const int64_t ih = std::max(0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const int64_t iw = std::max(0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const int64_t inter = ih * iw;
  const int64_t uni = a.Area() + b.Area() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double Bde(const CropBox& a, const CropBox& b, const ImageDims& dims) {
  const double H = dims.H;
  const double W = dims.W;
  return (std::abs(a.x1 - b.x1) / H + std::abs(a.x2 - b.x2) / H +
          std::abs(a.y1 - b.y1) / W + std::abs(a.y2 - b.y2) / W) /
         4.0;
}

CropBox BaselineN(const ImageDims& dims) {
  dims.Validate();
  return {1, 1, dims.H, dims.W};
}

CropBox BaselineC(const ImageDims& dims) {
  dims.Validate();
  auto centered = [](int len) {
    const int full = len - 1;
    const int span = std::max(
        1, static_cast<int>(std::floor(0.9 * static_cast<double>(full) + 0.5)));
    const int lo = 1 + (full - span) / 2;
    return std::pair{lo, lo + span};
  };
  if (dims.H < 2 || dims.W < 2) throw std::domain_error("baseline_c: image too small");
  const auto [x1, x2] = centered(dims.H);
  const auto [y1, y2] = centered(dims.W);
  return {x1, y1, x2, y2};
}

int BaselineLIndex(std::span<const CropBox> candidates) {
  if (candidates.empty()) throw std::domain_error("baseline_l: no candidates");
  int best = 0;
  for (size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].Area() > candidates[static_cast<size_t>(best)].Area()) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

CropBox BaselineL(std::span<const CropBox> candidates) {
  return candidates[static_cast<size_t>(BaselineLIndex(candidates))];
}

int NearestAnchorBox(const CropBox& box, std::span<const CropBox> candidates) {
  if (candidates.empty()) throw std::domain_error("nearest anchor: no candidates");
  int best = 0;
  double best_iou = Iou(box, candidates[0]);
  for (size_t i = 1; i < candidates.size(); ++i) {
    const double v = Iou(box, candidates[i]);
    if (v > best_iou) {
      best_iou = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace gaic
