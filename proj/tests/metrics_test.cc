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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "json.hpp"
#include "oracles.h"

namespace gaic {
namespace {

std::vector<double> RandomVector(std::mt19937_64& rng, size_t n, bool ties) {
  std::vector<double> v(n);
  if (ties) {
    std::uniform_int_distribution<int> d(1, 5);
    for (auto& x : v) x = d(rng);
  } else {
    std::normal_distribution<double> d;
    for (auto& x : v) x = d(rng);
  }
  return v;
}

bool IsConstant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
}

// Random strictly increasing piecewise-linear map.
std::function<double(double)> RandomMonotone(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> slope(0.1, 5.0);
  const double s1 = slope(rng), s2 = slope(rng), s3 = slope(rng);
  return [=](double x) {
    if (x < -0.5) return s1 * (x + 0.5) - s2 * 1.0;
    if (x < 0.5) return s2 * (x - 0.5);
    return s3 * (x - 0.5);
  };
}

TEST(Srcc, IdenticalAndReversed) {
  const std::vector<double> g = {0.3, 1.2, -0.4, 2.2, 0.9};
  EXPECT_DOUBLE_EQ(Srcc(g, g), 1.0);
  std::vector<double> p(g.size());
  std::transform(g.begin(), g.end(), p.begin(), [](double x) { return -3 * x + 1; });
  EXPECT_DOUBLE_EQ(Srcc(g, p), -1.0);
}

TEST(Srcc, KnownValueFromOracle) {
  const std::vector<double> g = {1, 2, 3, 4, 5};
  const std::vector<double> p = {1, 3, 2, 5, 4};
  // Rank enumeration oracle gives 0.8 (sum d^2 = 4 over n = 5).
  EXPECT_NEAR(oracle::SpearmanByEnumeration(g, p), 0.8, 1e-15);
  EXPECT_NEAR(Srcc(g, p), 0.8, 1e-15);
}

TEST(Srcc, TiesUseFractionalRanks) {
  const std::vector<double> v = {2, 1, 2, 3};
  EXPECT_EQ(FractionalRanks(v), (std::vector<double>{2.5, 1, 2.5, 4}));
}

TEST(Srcc, ConstantVectorIsAnError) {
  EXPECT_THROW(Srcc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
               UndefinedCorrelationError);
  EXPECT_THROW(Srcc(std::vector<double>{1, 2, 3}, std::vector<double>{4, 4, 4}),
               UndefinedCorrelationError);
  EXPECT_THROW(Srcc(std::vector<double>{1}, std::vector<double>{1}),
               std::domain_error);
}

TEST(Srcc, MatchesOracleOnRandomVectors) {
  std::mt19937_64 rng(2024);
  int compared = 0;
  for (int t = 0; t < 1000; ++t) {
    const size_t n = std::uniform_int_distribution<size_t>(2, 90)(rng);
    const auto g = RandomVector(rng, n, t % 2 == 0);
    const auto p = RandomVector(rng, n, t % 3 == 0);
    if (IsConstant(g) || IsConstant(p)) continue;
    EXPECT_NEAR(Srcc(g, p), oracle::SpearmanByEnumeration(g, p), 1e-12);
    ++compared;
  }
  EXPECT_GT(compared, 950);
}

TEST(Srcc, Properties) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 200; ++t) {
    const size_t n = std::uniform_int_distribution<size_t>(3, 90)(rng);
    const auto g = RandomVector(rng, n, t % 2 == 0);
    const auto p = RandomVector(rng, n, false);
    if (IsConstant(g)) continue;
    const double base = Srcc(g, p);
    EXPECT_NEAR(Srcc(p, g), base, 1e-15);

    std::vector<double> neg(p.size());
    std::transform(p.begin(), p.end(), neg.begin(), [](double x) { return -x; });
    EXPECT_NEAR(Srcc(g, neg), -base, 1e-12);

    const auto f = RandomMonotone(rng);
    std::vector<double> fg(g.size()), fp(p.size());
    std::transform(g.begin(), g.end(), fg.begin(), f);
    std::transform(p.begin(), p.end(), fp.begin(), f);
    EXPECT_NEAR(Srcc(fg, fp), base, 1e-12);
    EXPECT_GE(base, -1.0);
    EXPECT_LE(base, 1.0);
  }
}

TEST(MeanSrcc, Basics) {
  const std::vector<double> g = {1, 2, 3, 4};
  std::vector<ScorePair> one = {{g, {2, 1, 4, 3}}};
  EXPECT_DOUBLE_EQ(MeanSrcc(one), Srcc(one[0]));
  std::vector<ScorePair> two = {{g, g}, {g, {4, 3, 2, 1}}};
  EXPECT_DOUBLE_EQ(MeanSrcc(two), 0.0);
  EXPECT_THROW(MeanSrcc(std::vector<ScorePair>{}), std::domain_error);
}

TEST(AccKN, PerfectAndMiss) {
  const std::vector<double> g = {0.1, 0.9, 0.5, 0.7, 0.3, 0.2, 0.8};
  std::vector<ScorePair> pairs = {{g, {}}};
  for (int K = 1; K <= 4; ++K) {
    EXPECT_DOUBLE_EQ(AccKN(pairs, {TopIndices(g, K)}, 5), 1.0);
  }
  // Worst two crops are outside the top-5.
  EXPECT_DOUBLE_EQ(AccKN(pairs, {{0, 5}}, 5), 0.0);
  EXPECT_DOUBLE_EQ(AccKN(pairs, {{0, 1}}, 5), 0.5);
  EXPECT_THROW(AccKN(pairs, {{0, 1, 2, 3, 4, 5, 6, 0}}, 5), std::domain_error);
  EXPECT_THROW(AccKN(pairs, {{9}}, 5), std::domain_error);
}

TEST(AccKN, BoundaryTiesResolvedByCanonicalOrder) {
  // Crops 1, 2, 3 tie at the N boundary; the lowest indices win.
  const std::vector<double> g = {5, 3, 3, 3, 1};
  std::vector<ScorePair> pairs = {{g, {}}};
  EXPECT_DOUBLE_EQ(AccKN(pairs, {{1}}, 2), 1.0);
  EXPECT_DOUBLE_EQ(AccKN(pairs, {{2}}, 2), 0.0);
}

TEST(AccKN, MatchesSetMembershipOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<ScorePair> pairs;
    const int T = std::uniform_int_distribution<int>(1, 6)(rng);
    const int K = std::uniform_int_distribution<int>(1, 4)(rng);
    std::vector<std::vector<int>> returned;
    for (int i = 0; i < T; ++i) {
      const size_t n = std::uniform_int_distribution<size_t>(4, 90)(rng);
      pairs.push_back({RandomVector(rng, n, true), {}});
      std::vector<int> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<size_t>(K));
      returned.push_back(idx);
    }
    for (int N : {5, 10}) {
      int hits = 0;
      for (int i = 0; i < T; ++i) {
        for (int c : returned[static_cast<size_t>(i)]) {
          hits += oracle::InTopN(pairs[static_cast<size_t>(i)].g, c, N);
        }
      }
      EXPECT_EQ(AccKN(pairs, returned, N), static_cast<double>(hits) / (T * K));
    }
  }
}

TEST(AccKN, InvariantUnderMonotoneMosAndNonDecreasingInN) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    const size_t n = std::uniform_int_distribution<size_t>(10, 90)(rng);
    auto g = RandomVector(rng, n, t % 2 == 0);
    std::vector<ScorePair> pairs = {{g, {}}};
    const std::vector<std::vector<int>> returned = {{0, 3, 7}};
    double prev = 0.0;
    for (int N = 1; N <= 12; ++N) {
      const double a = AccKN(pairs, returned, N);
      EXPECT_GE(a, prev);
      EXPECT_LE(a, 1.0);
      prev = a;
    }
    const auto f = RandomMonotone(rng);
    std::vector<ScorePair> mapped = {{g, {}}};
    std::transform(g.begin(), g.end(), mapped[0].g.begin(), f);
    EXPECT_EQ(AccKN(pairs, returned, 5), AccKN(mapped, returned, 5));
  }
}

TEST(AccKN, RandomPredictorExpectation) {
  // A uniformly random top-1 choice hits the top-N set with probability N/C.
  const int C = 40;
  std::vector<double> g(C);
  std::iota(g.begin(), g.end(), 0.0);
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> pick(0, C - 1);
  const int trials = 100000;
  std::vector<ScorePair> pairs(trials, ScorePair{g, {}});
  std::vector<std::vector<int>> returned(trials);
  for (auto& r : returned) r = {pick(rng)};
  for (int N : {5, 10}) {
    const double q = static_cast<double>(N) / C;
    const double sigma = std::sqrt(q * (1 - q) / trials);
    EXPECT_NEAR(AccKN(pairs, returned, N), q, 3 * sigma);
  }
}

TEST(AvgAccN, MeanOverK) {
  const std::vector<double> g = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<ScorePair> pairs = {{g, {}}};
  std::array<std::vector<std::vector<int>>, 4> perfect;
  for (int k = 1; k <= 4; ++k) perfect[k - 1] = {TopIndices(g, k)};
  EXPECT_DOUBLE_EQ(AvgAccN(pairs, perfect, 5), 1.0);
  EXPECT_DOUBLE_EQ(AvgAccN(pairs, perfect, 4), 1.0);
  std::array<std::vector<std::vector<int>>, 4> mixed = {
      std::vector<std::vector<int>>{{7}}, {{7, 0}}, {{7, 0, 6}}, {{7, 0, 6, 1}}};
  const double expected = (1.0 + 0.5 + 2.0 / 3.0 + 0.5) / 4.0;
  EXPECT_DOUBLE_EQ(AvgAccN(pairs, mixed, 5), expected);
}

TEST(Evaluate, PerfectPredictor) {
  std::mt19937_64 rng(3);
  std::vector<ScorePair> pairs;
  for (int i = 0; i < 10; ++i) {
    auto g = RandomVector(rng, 30, false);
    pairs.push_back({g, g});
  }
  const EvalReport r = Evaluate(pairs);
  EXPECT_DOUBLE_EQ(*r.mean_srcc, 1.0);
  EXPECT_DOUBLE_EQ(*r.acc5_bar, 1.0);
  EXPECT_DOUBLE_EQ(*r.acc10_bar, 1.0);
  EXPECT_EQ(r.acc.size(), 8u);
  const auto j = nlohmann::json::parse(EvalReportToJson(r));
  EXPECT_EQ(j["acc"]["4/10"].get<double>(), 1.0);
  EXPECT_TRUE(j.contains("acc5_bar"));
}

TEST(Evaluate, ParallelMatchesSequential) {
  std::mt19937_64 rng(17);
  std::vector<ScorePair> pairs;
  for (int i = 0; i < 57; ++i) {
    const size_t n = std::uniform_int_distribution<size_t>(10, 90)(rng);
    pairs.push_back({RandomVector(rng, n, true), RandomVector(rng, n, false)});
  }
  const std::string seq = EvalReportToJson(Evaluate(pairs, 1));
  const std::string par = EvalReportToJson(Evaluate(pairs, 4));
  EXPECT_EQ(seq, par);
}

TEST(Iou, Basics) {
  const CropBox a{1, 1, 50, 50};
  EXPECT_DOUBLE_EQ(Iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(Iou(a, {60, 60, 80, 80}), 0.0);
  EXPECT_DOUBLE_EQ(Iou({1, 1, 101, 101}, {6, 6, 96, 96}), 0.81);
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> d(1, 100);
  for (int t = 0; t < 500; ++t) {
    int xs[4] = {d(rng), d(rng), d(rng), d(rng)};
    if (xs[0] == xs[1] || xs[2] == xs[3]) continue;
    CropBox b{std::min(xs[0], xs[1]), std::min(xs[2], xs[3]),
              std::max(xs[0], xs[1]), std::max(xs[2], xs[3])};
    EXPECT_DOUBLE_EQ(Iou(a, b), Iou(b, a));
    EXPECT_GE(Iou(a, b), 0.0);
    EXPECT_LE(Iou(a, b), 1.0);
  }
}

TEST(Bde, Basics) {
  const ImageDims dims{200, 300};
  const CropBox a{21, 31, 180, 270};
  EXPECT_DOUBLE_EQ(Bde(a, a, dims), 0.0);
  EXPECT_DOUBLE_EQ(Bde(a, {41, 31, 180, 270}, dims), 0.025);
  std::mt19937 rng(4);
  std::uniform_int_distribution<int> r(1, 200), c(1, 300);
  for (int t = 0; t < 200; ++t) {
    int x1 = r(rng), x2 = r(rng), y1 = c(rng), y2 = c(rng);
    if (x1 == x2 || y1 == y2) continue;
    CropBox b{std::min(x1, x2), std::min(y1, y2), std::max(x1, x2), std::max(y1, y2)};
    const double literal = (std::fabs(double(a.x1) - b.x1) / 200.0 +
                            std::fabs(double(a.x2) - b.x2) / 200.0 +
                            std::fabs(double(a.y1) - b.y1) / 300.0 +
                            std::fabs(double(a.y2) - b.y2) / 300.0) / 4.0;
    EXPECT_NEAR(Bde(a, b, dims), literal, 1e-15);
    EXPECT_DOUBLE_EQ(Bde(a, b, dims), Bde(b, a, dims));
  }
}

TEST(Baselines, NAndC) {
  EXPECT_EQ(BaselineN({100, 100}), (CropBox{1, 1, 100, 100}));
  const CropBox c = BaselineC({100, 200});
  // 90 by 180 pixels, i.e. 0.9 of the full-image box extents (99, 199).
  EXPECT_EQ(c.Height() + 1, 90);
  EXPECT_EQ(c.Width() + 1, 180);
  EXPECT_EQ(c.x1 - 1, 100 - c.x2);
  EXPECT_EQ(c.y1 - 1, 200 - c.y2);
  EXPECT_NEAR(Iou(BaselineC({101, 201}), BaselineN({101, 201})), 0.81, 1e-12);
}

TEST(Baselines, LargestCandidate) {
  const GridSpec spec;
  const auto boxes = CandidateBoxes({240, 240}, spec);
  const CropBox l = BaselineL(boxes);
  EXPECT_EQ(l, CropFromAnchors({1, 1, 12, 12}, {240, 240}, spec));
  for (const auto& b : boxes) EXPECT_LE(b.Area(), l.Area());
  EXPECT_THROW(BaselineL(std::vector<CropBox>{}), std::domain_error);
}

TEST(NearestAnchorBox, Basics) {
  const auto boxes = CandidateBoxes({240, 320}, GridSpec{});
  EXPECT_EQ(NearestAnchorBox(boxes[17], boxes), 17);
  const std::vector<CropBox> far = {{1, 1, 5, 5}, {10, 10, 20, 20}};
  EXPECT_EQ(NearestAnchorBox({100, 100, 120, 120}, far), 0);
  EXPECT_THROW(NearestAnchorBox({1, 1, 2, 2}, std::vector<CropBox>{}),
               std::domain_error);
  std::mt19937 rng(9);
  std::uniform_int_distribution<int> r(1, 240), c(1, 320);
  for (int t = 0; t < 200; ++t) {
    int x1 = r(rng), x2 = r(rng), y1 = c(rng), y2 = c(rng);
    if (x1 == x2 || y1 == y2) continue;
    CropBox b{std::min(x1, x2), std::min(y1, y2), std::max(x1, x2), std::max(y1, y2)};
    int best = 0;
    for (size_t i = 0; i < boxes.size(); ++i) {
      if (Iou(b, boxes[i]) > Iou(b, boxes[static_cast<size_t>(best)])) {
        best = static_cast<int>(i);
      }
    }
    EXPECT_EQ(NearestAnchorBox(b, boxes), best);
  }
}

}  // namespace
}  // namespace gaic
