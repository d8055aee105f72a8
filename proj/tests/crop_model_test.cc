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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "gaic/crop_model.h"
#include "gaic/finite_diff.h"
#include "gaic/ops.h"
#include "gaic/train.h"
#include "smooth_point.h"
#include "test_util.h"

namespace gaic {
namespace {

using gaic::testing::RandomTensor;
using nd::Tensor;

ModelConfig TinyConfig() {
  ModelConfig c;
  c.backbone_channels = 4;
  c.align_size = 3;
  c.cdim = 2;
  c.fc_width = 8;
  c.input_short_side = 32;
  return c;
}

Image NoiseImage(int h, int w, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(h, w);
  for (double& p : img.pixels) p = UniformReal(rng);
  return img;
}

FeatureMap MakeFeatures(Tensor t, double cell_rows, double cell_cols) {
  FeatureMap f;
  f.tensor = std::move(t);
  f.cell_rows = cell_rows;
  f.cell_cols = cell_cols;
  return f;
}

// Reference alignment built from BilinearSample on an explicit copy of the
// map. For RoD the copy has every cell centred inside the crop rectangle
// zeroed.
std::vector<double> AlignOracle(const FeatureMap& f, const CropBox& crop, int s, bool rod) {
  const int64_t C = f.channels(), H = f.height(), W = f.width();
  std::vector<double> plane(f.tensor.data().begin(), f.tensor.data().end());
  const double top = (crop.x1 - 1) / f.cell_rows - 0.5;
  const double bottom = crop.x2 / f.cell_rows - 0.5;
  const double left = (crop.y1 - 1) / f.cell_cols - 0.5;
  const double right = crop.y2 / f.cell_cols - 0.5;
  double r0 = top, c0 = left, rh = (bottom - top) / s, cw = (right - left) / s;
  if (rod) {
    for (int64_t r = 0; r < H; ++r) {
      for (int64_t c = 0; c < W; ++c) {
        if (r >= top && r <= bottom && c >= left && c <= right) {
          for (int64_t ch = 0; ch < C; ++ch) plane[static_cast<size_t>((ch * H + r) * W + c)] = 0;
        }
      }
    }
    r0 = -0.5;
    c0 = -0.5;
    rh = static_cast<double>(H) / s;
    cw = static_cast<double>(W) / s;
  }
  const Tensor map = Tensor::FromData({C, H, W}, plane);
  std::vector<double> out(static_cast<size_t>(C * s * s));
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      const double x = std::clamp(r0 + (i + 0.5) * rh, 0.0, H - 1.0);
      const double y = std::clamp(c0 + (j + 0.5) * cw, 0.0, W - 1.0);
      const Tensor v = nd::BilinearSample(map, x, y);
      for (int64_t ch = 0; ch < C; ++ch) out[static_cast<size_t>((ch * s + i) * s + j)] = v.data()[ch];
    }
  }
  return out;
}

CropBox RandomCrop(std::mt19937_64& rng, int H, int W) {
  int a = 1 + static_cast<int>(UniformIndex(rng, H)), b = 1 + static_cast<int>(UniformIndex(rng, H));
  int c = 1 + static_cast<int>(UniformIndex(rng, W)), d = 1 + static_cast<int>(UniformIndex(rng, W));
  if (a > b) std::swap(a, b);
  if (c > d) std::swap(c, d);
  return {a, c, std::max(b, a + 1), std::max(d, c + 1)};
}

TEST(FeatureExtraction, StrideLaw) {
  for (int stride : {8, 16}) {
    ModelConfig c = TinyConfig();
    c.backbone_stride = stride;
    CropModel model(c, 1);
    const Tensor img = Tensor::Zeros({1, 3, 256, 384});
    const FeatureMap f = model.ExtractFeatures(img, 1.0, 1.0);
    EXPECT_EQ(f.height(), 256 / stride);
    EXPECT_EQ(f.width(), 384 / stride);
    EXPECT_EQ(f.cell_rows, stride);
    // Non-multiples round up.
    const FeatureMap g = model.ExtractFeatures(Tensor::Zeros({1, 3, 257, 100}), 1.0, 1.0);
    EXPECT_EQ(g.height(), (257 + stride - 1) / stride);
    EXPECT_EQ(g.width(), (100 + stride - 1) / stride);
  }
}

TEST(FeatureExtraction, ScaleRecordedExactly) {
  CropModel model(TinyConfig(), 1);
  const ResizedImage r = ResizeShortSide(NoiseImage(45, 70, 3), 32);
  const FeatureMap f = model.ExtractFeatures(r);
  EXPECT_DOUBLE_EQ(f.cell_rows, 16.0 * 45.0 / 32.0);
  EXPECT_DOUBLE_EQ(f.cell_cols, 16.0 * 70.0 / r.image.width);
}

TEST(FeatureExtraction, BitIdenticalRepeats) {
  CropModel model(TinyConfig(), 2);
  const Tensor img = CropModel::ImageTensor(NoiseImage(40, 50, 4));
  const FeatureMap a = model.ExtractFeatures(img, 1.0, 1.0);
  const FeatureMap b = model.ExtractFeatures(img, 1.0, 1.0);
  EXPECT_TRUE(std::equal(a.tensor.data().begin(), a.tensor.data().end(), b.tensor.data().begin()));
  EXPECT_EQ(model.feature_passes(), 2);
}

TEST(RoiAlign, ConstantMapGivesConstantOutput) {
  std::mt19937_64 rng(5);
  const FeatureMap f = MakeFeatures(Tensor::Full({1, 2, 6, 9}, 0.7), 7.5, 5.25);
  for (int t = 0; t < 200; ++t) {
    const CropBox crop = RandomCrop(rng, 45, 47);
    const Tensor out = RoiAlign(f, std::span(&crop, 1), 9);
    for (double v : out.data()) EXPECT_NEAR(v, 0.7, 1e-12);
  }
}

TEST(RoiAlign, FullCropOnAlignedGridReadsCellCentres) {
  std::mt19937_64 rng(6);
  const Tensor t = RandomTensor({1, 3, 5, 5}, rng);
  const FeatureMap f = MakeFeatures(t, 8.0, 8.0);
  const CropBox full{1, 1, 40, 40};
  const Tensor out = RoiAlign(f, std::span(&full, 1), 5);
  for (int64_t i = 0; i < t.numel(); ++i) EXPECT_NEAR(out.data()[i], t.data()[i], 1e-15);
}

TEST(RoiAlign, MatchesOracle) {
  std::mt19937_64 rng(7);
  const FeatureMap f = MakeFeatures(RandomTensor({1, 3, 7, 8}, rng), 6.0, 5.5);
  std::vector<CropBox> crops;
  for (int i = 0; i < 50; ++i) crops.push_back(RandomCrop(rng, 42, 44));
  const Tensor out = RoiAlign(f, crops, 4);
  ASSERT_EQ(out.shape(), (nd::Shape{50, 3, 4, 4}));
  for (size_t b = 0; b < crops.size(); ++b) {
    const std::vector<double> ref = AlignOracle(f, crops[b], 4, false);
    for (size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(out.data()[b * ref.size() + k], ref[k], 1e-12);
  }
}

TEST(RoiAlign, TranslationConsistent) {
  std::mt19937_64 rng(8);
  const int64_t C = 2, H = 6, W = 7;
  const double pad = 0.3;
  // Random interior framed by a one-cell border of the pad value, so samples
  // clamped at the map edge read the same value the shifted map pads with.
  Tensor base = RandomTensor({1, C, H, W}, rng);
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t r = 0; r < H; ++r) {
      for (int64_t k = 0; k < W; ++k) {
        if (r == 0 || k == 0 || r == H - 1 || k == W - 1) {
          base.mutable_data()[static_cast<size_t>((c * H + r) * W + k)] = pad;
        }
      }
    }
  }
  std::vector<double> shifted(static_cast<size_t>(C * (H + 1) * (W + 1)), pad);
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t r = 0; r < H; ++r) {
      for (int64_t k = 0; k < W; ++k) {
        shifted[static_cast<size_t>((c * (H + 1) + r + 1) * (W + 1) + k + 1)] =
            base.data()[(c * H + r) * W + k];
      }
    }
  }
  const FeatureMap f = MakeFeatures(base, 8.0, 8.0);
  const FeatureMap g = MakeFeatures(Tensor::FromData({1, C, H + 1, W + 1}, shifted), 8.0, 8.0);
  for (int t = 0; t < 100; ++t) {
    const CropBox crop = RandomCrop(rng, 48, 56);
    const CropBox moved{crop.x1 + 8, crop.y1 + 8, crop.x2 + 8, crop.y2 + 8};
    const Tensor a = RoiAlign(f, std::span(&crop, 1), 5);
    const Tensor b = RoiAlign(g, std::span(&moved, 1), 5);
    for (int64_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-9);
  }
}

TEST(RodAlign, FullCropIsAllZero) {
  std::mt19937_64 rng(9);
  const FeatureMap f = MakeFeatures(RandomTensor({1, 2, 5, 6}, rng), 8.0, 8.0);
  const CropBox full{1, 1, 40, 48};
  const Tensor out = RodAlign(f, std::span(&full, 1), 9);
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(RodAlign, CropBetweenCentresLeavesMapIntact) {
  // With 8-pixel cells, pixels 10..11 span feature coordinates
  // [0.625, 0.875]: no cell centre falls inside, so nothing is zeroed.
  const FeatureMap f = MakeFeatures(Tensor::Full({1, 2, 5, 6}, -1.25), 8.0, 8.0);
  const CropBox crop{10, 10, 11, 11};
  const Tensor intact = RodAlign(f, std::span(&crop, 1), 9);
  for (double v : intact.data()) EXPECT_NEAR(v, -1.25, 1e-12);
  // Pixels 10..12 reach 1.0 and zero the centre (1, 1).
  const CropBox touching{10, 10, 12, 12};
  const Tensor out = RodAlign(f, std::span(&touching, 1), 9);
  EXPECT_GT(*std::max_element(out.data().begin(), out.data().end()), -1.25);
}

TEST(RodAlign, MatchesOracleAndZeroesInterior) {
  std::mt19937_64 rng(10);
  const int s = 9;
  for (int trial = 0; trial < 100; ++trial) {
    const int64_t H = 4 + static_cast<int64_t>(UniformIndex(rng, 12));
    const int64_t W = 4 + static_cast<int64_t>(UniformIndex(rng, 12));
    const double cell = 4.0 + UniformReal(rng) * 12.0;
    const FeatureMap f = MakeFeatures(RandomTensor({1, 3, H, W}, rng), cell, cell);
    const int img_h = static_cast<int>(H * cell), img_w = static_cast<int>(W * cell);
    const CropBox crop = RandomCrop(rng, img_h, img_w);
    const Tensor out = RodAlign(f, std::span(&crop, 1), s);
    const std::vector<double> ref = AlignOracle(f, crop, s, true);
    const FeatureRect r = ToFeatureRect(crop, f);
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < s; ++j) {
        const double x = std::clamp(-0.5 + (i + 0.5) * H / s, 0.0, H - 1.0);
        const double y = std::clamp(-0.5 + (j + 0.5) * W / s, 0.0, W - 1.0);
        const nd::BilinearTaps taps = nd::ComputeBilinearTaps(x, y, H, W);
        bool all_zeroed = true;
        for (int q = 0; q < 4; ++q) {
          const double row = static_cast<double>(taps.index[q] / W);
          const double col = static_cast<double>(taps.index[q] % W);
          all_zeroed &= row >= r.top && row <= r.bottom && col >= r.left && col <= r.right;
        }
        for (int c = 0; c < 3; ++c) {
          const size_t k = static_cast<size_t>((c * s + i) * s + j);
          EXPECT_NEAR(out.data()[k], ref[k], 1e-12);
          if (all_zeroed) {
            EXPECT_EQ(out.data()[k], 0.0);
          }
        }
      }
    }
  }
}

TEST(Alignment, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(11);
  const std::vector<CropBox> crops = {{3, 5, 30, 41}, {1, 1, 48, 48}, {20, 10, 28, 44}};
  for (bool rod : {false, true}) {
    const nd::FiniteDiffReport r = nd::FiniteDiffCheck(
        [&](const std::vector<Tensor>& in) {
          const FeatureMap f = MakeFeatures(in[0], 7.0, 8.0);
          const Tensor out = rod ? RodAlign(f, crops, 4) : RoiAlign(f, crops, 4);
          return nd::Sum(nd::Mul(out, Tensor::FromData(out.shape(), [&] {
            std::vector<double> w(static_cast<size_t>(out.numel()));
            for (size_t i = 0; i < w.size(); ++i) w[i] = std::cos(0.3 * static_cast<double>(i));
            return w;
          }())));
        },
        {RandomTensor({1, 2, 7, 6}, rng)});
    EXPECT_TRUE(r.passed) << (rod ? "rod " : "roi ") << r.ToString();
  }
}

TEST(CropModel, ReplayMatchesScoreHead) {
  const CropModel model(TinyConfig(), 12);
  const Tensor img = CropModel::ImageTensor(NoiseImage(32, 40, 13));
  const std::vector<CropBox> crops = {{1, 1, 32, 40}, {5, 3, 28, 30}, {9, 12, 30, 40}};
  const Tensor direct = model.ScoreHead(model.ExtractFeatures(img, 1.0, 1.0), crops);
  const Tensor replay = testing::ReplayForward(model, img, crops).scores;
  ASSERT_EQ(direct.shape(), replay.shape());
  for (size_t i = 0; i < direct.data().size(); ++i) EXPECT_EQ(direct.data()[i], replay.data()[i]);
}

// A step of 1e-3 is only meaningful where no relu flips inside the stencil,
// so the model seed is the first one for which that holds.
TEST(CropModel, FullModelGradientMatchesFiniteDifferences) {
  const Tensor img = CropModel::ImageTensor(NoiseImage(32, 40, 13));
  const std::vector<CropBox> crops = {{1, 1, 32, 40}, {5, 3, 28, 30}, {9, 12, 30, 40}};
  const std::optional<uint64_t> seed = testing::FirstSmoothSeed(TinyConfig(), img, crops, 1e-3);
  ASSERT_TRUE(seed.has_value());
  CropModel model(TinyConfig(), *seed);
  const nd::FiniteDiffReport r = nd::FiniteDiffCheck(
      [&](const std::vector<Tensor>&) {
        return nd::Mean(model.ScoreHead(model.ExtractFeatures(img, 1.0, 1.0), crops));
      },
      model.Parameters());
  EXPECT_TRUE(r.passed) << "seed " << *seed << ": " << r.ToString();
}

TEST(CropModel, FullModelGradientAcrossSeedsWithSmallStep) {
  const Tensor img = CropModel::ImageTensor(NoiseImage(32, 40, 13));
  const std::vector<CropBox> crops = {{1, 1, 32, 40}, {5, 3, 28, 30}, {9, 12, 30, 40}};
  int checked = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    CropModel model(TinyConfig(), seed);
    if (!testing::ReluPatternStable(model, img, crops, 1e-5)) continue;
    ++checked;
    const nd::FiniteDiffReport r = nd::FiniteDiffCheck(
        [&](const std::vector<Tensor>&) {
          return nd::Mean(model.ScoreHead(model.ExtractFeatures(img, 1.0, 1.0), crops));
        },
        model.Parameters(), 1e-5, 1e-6);
    EXPECT_TRUE(r.passed) << "seed " << seed << ": " << r.ToString();
  }
  EXPECT_GE(checked, 5);
}

TEST(CropModel, ImageGradientSpotChecks) {
  CropModel model(TinyConfig(), 14);
  Tensor img = CropModel::ImageTensor(NoiseImage(32, 32, 15));
  img.set_requires_grad(true);
  const std::vector<CropBox> crops = {{1, 1, 32, 32}, {4, 6, 27, 30}};
  auto score = [&] {
    return nd::Mean(model.ScoreHead(model.ExtractFeatures(img, 1.0, 1.0), crops));
  };
  nd::Backward(score());
  const std::vector<double> analytic(img.grad().begin(), img.grad().end());
  double scale = 0.0;
  for (double g : analytic) scale = std::max(scale, std::fabs(g));
  std::mt19937_64 rng(16);
  for (int t = 0; t < 5; ++t) {
    const size_t i = UniformIndex(rng, analytic.size());
    const double orig = img.mutable_data()[i];
    img.mutable_data()[i] = orig + 1e-3;
    const double plus = score().item();
    img.mutable_data()[i] = orig - 1e-3;
    const double minus = score().item();
    img.mutable_data()[i] = orig;
    EXPECT_LT(std::fabs((plus - minus) / 2e-3 - analytic[i]) / scale, 1e-3) << "pixel " << i;
  }
}

TEST(ScoreCrops, OrderDuplicatesAndEmpty) {
  CropModel model(TinyConfig(), 17);
  const Image img = NoiseImage(40, 48, 18);
  const std::vector<CropBox> crops = {{1, 1, 40, 48}, {3, 4, 30, 40}, {1, 1, 40, 48}};
  const std::vector<CropScore> s = model.ScoreCrops(img, crops);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[1].index, 1);
  EXPECT_EQ(s[0].score, s[2].score);
  EXPECT_NE(s[0].score, s[1].score);

  model.ResetFeaturePasses();
  EXPECT_TRUE(model.ScoreCrops(img, {}).empty());
  EXPECT_EQ(model.feature_passes(), 0);
  const CropBox outside{1, 1, 41, 48};
  EXPECT_THROW(model.ScoreCrops(img, std::span(&outside, 1)), std::domain_error);
}

TEST(ScoreCrops, OneBackbonePassPerImage) {
  CropModel model(TinyConfig(), 19);
  const Image img = NoiseImage(48, 64, 20);
  const std::vector<CropBox> all = CandidateBoxes(img.dims(), GridSpec{});
  for (size_t n : {size_t{1}, size_t{7}, all.size()}) {
    model.ResetFeaturePasses();
    model.ScoreCrops(img, std::span(all.data(), n));
    EXPECT_EQ(model.feature_passes(), 1) << n << " candidates";
  }
}

TEST(ScoreCrops, ZeroHeadGivesZeroScores) {
  CropModel model(TinyConfig(), 21);
  nd::NamedTensors params = model.NamedParameters();
  for (auto& [name, t] : params) {
    if (name.starts_with("head.")) {
      for (double& v : t.mutable_data()) v = 0.0;
    }
  }
  const Image img = NoiseImage(40, 40, 22);
  const std::vector<CropBox> crops = CandidateBoxes(img.dims(), GridSpec{});
  for (const CropScore& s : model.ScoreCrops(img, crops)) EXPECT_EQ(s.score, 0.0);
}

TEST(ScoreCrops, ConcatOrderMatters) {
  // Swapping the RoI and RoD blocks of fc1's input columns must change the
  // score of a crop whose two blocks differ.
  CropModel model(TinyConfig(), 23);
  const Image img = NoiseImage(40, 40, 24);
  const CropBox crop{5, 5, 30, 32};
  const double before = model.ScoreCrops(img, std::span(&crop, 1))[0].score;
  for (auto& [name, t] : model.NamedParameters()) {
    if (name != "head.fc1.weight") continue;
    const int64_t rows = t.dim(0), cols = t.dim(1), half = cols / 2;
    std::span<double> w = t.mutable_data();
    for (int64_t r = 0; r < rows; ++r) {
      std::swap_ranges(w.begin() + r * cols, w.begin() + r * cols + half,
                       w.begin() + r * cols + half);
    }
  }
  EXPECT_NE(model.ScoreCrops(img, std::span(&crop, 1))[0].score, before);
}

std::vector<TrainingExample> TinyExamples(int count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TrainingExample> out;
  for (int i = 0; i < count; ++i) {
    TrainingExample ex;
    ex.image = NoiseImage(32, 40, seed + static_cast<uint64_t>(i));
    ex.crops = CandidateBoxes(ex.image.dims(), GridSpec{});
    for (size_t k = 0; k < ex.crops.size(); ++k) ex.mos.push_back(1.0 + 4.0 * UniformReal(rng));
    out.push_back(std::move(ex));
  }
  return out;
}

TEST(ScoreCrops, TrainedModelSeesOutsideTheCrop) {
  ModelConfig c = TinyConfig();
  c.epochs = 3;
  CropModel model = Train(TinyExamples(4, 30), c, 31);
  Image img = NoiseImage(32, 40, 32);
  const CropBox crop{9, 11, 24, 30};
  const double before = model.ScoreCrops(img, std::span(&crop, 1))[0].score;
  for (int r = 0; r < img.height; ++r) {
    for (int col = 0; col < img.width; ++col) {
      const bool inside = r + 1 >= crop.x1 && r + 1 <= crop.x2 && col + 1 >= crop.y1 &&
                          col + 1 <= crop.y2;
      if (inside) continue;
      for (int ch = 0; ch < 3; ++ch) img.at(r, col, ch) = 1.0 - img.at(r, col, ch);
    }
  }
  const double after = model.ScoreCrops(img, std::span(&crop, 1))[0].score;
  EXPECT_GT(std::fabs(after - before), 1e-6);
}

double GradNorm(const Tensor& pred, bool huber, const std::vector<double>& target) {
  Tensor p = pred.Detach();
  p.set_requires_grad(true);
  const Tensor g = Tensor::FromData(p.shape(), target);
  nd::Backward(huber ? nd::HuberLoss(p, g, 1.0) : nd::SquaredLoss(p, g));
  double s = 0.0;
  for (double v : p.grad()) s += v * v;
  return std::sqrt(s);
}

TEST(Loss, HuberBoundsOutlierInfluence) {
  const int B = 64;
  std::mt19937_64 rng(33);
  const Tensor pred = RandomTensor({B, 1}, rng, 0.5);
  std::vector<double> target(B);
  for (double& t : target) t = 0.3 * StandardNormal(rng);
  const double huber_clean = GradNorm(pred, true, target);
  const double l2_clean = GradNorm(pred, false, target);
  std::vector<double> dirty = target;
  dirty[0] = 100.0;
  const double huber_dirty = GradNorm(pred, true, dirty);
  const double l2_dirty = GradNorm(pred, false, dirty);
  // One clipped element can add at most delta / B to the norm.
  EXPECT_LE(huber_dirty, huber_clean + 1.0 / B + 1e-15);
  EXPECT_GT(l2_dirty, 10.0 * l2_clean);
  // Scaling the outlier further leaves the Huber gradient unchanged.
  dirty[0] = 1e6;
  EXPECT_DOUBLE_EQ(GradNorm(pred, true, dirty), huber_dirty);
  EXPECT_GT(GradNorm(pred, false, dirty), 1e3 * l2_dirty);
}

TEST(Predict, TopKIsScoreOrderedPermutation) {
  CropModel model(TinyConfig(), 40);
  const Image img = NoiseImage(40, 56, 41);
  const std::vector<CropBox> all = CandidateBoxes(img.dims(), GridSpec{});
  const std::vector<CropScore> scores = model.ScoreCrops(img, all);
  const std::vector<CropBox> top = PredictTopK(model, img, GridSpec{}, static_cast<int>(all.size()));
  ASSERT_EQ(top.size(), all.size());
  EXPECT_EQ(std::set<CropBox>(top.begin(), top.end()), std::set<CropBox>(all.begin(), all.end()));
  auto score_of = [&](const CropBox& b) {
    return scores[static_cast<size_t>(std::find(all.begin(), all.end(), b) - all.begin())].score;
  };
  for (size_t i = 1; i < top.size(); ++i) EXPECT_GE(score_of(top[i - 1]), score_of(top[i]));
  EXPECT_EQ(PredictTopK(model, img, GridSpec{}, 3).size(), 3u);
  EXPECT_THROW(PredictTopK(model, img, GridSpec{}, 0), std::domain_error);
}

TEST(Predict, AspectBand) {
  CropModel model(TinyConfig(), 42);
  const Image img = NoiseImage(48, 48, 43);
  const CropBox best = PredictBestForAspect(model, img, GridSpec{}, 1.0, 0.0);
  EXPECT_EQ(best.Width(), best.Height());
  std::vector<CropBox> squares;
  for (const CropBox& b : CandidateBoxes(img.dims(), GridSpec{})) {
    if (b.Width() == b.Height()) squares.push_back(b);
  }
  const std::vector<CropScore> s = model.ScoreCrops(img, squares);
  for (size_t i = 0; i < squares.size(); ++i) {
    if (squares[i] == best) {
      for (const CropScore& o : s) EXPECT_LE(o.score, s[i].score);
    }
  }
  const CropBox wide = PredictBestForAspect(model, NoiseImage(45, 80, 44), GridSpec{}, 16.0 / 9.0);
  EXPECT_LE(std::fabs(wide.AspectRatio() - 16.0 / 9.0), 0.05 * 16.0 / 9.0);
  EXPECT_THROW(PredictBestForAspect(model, img, GridSpec{}, 3.0, 0.01), NotFoundError);
}

TEST(Checkpoint, RoundTrip) {
  const std::string path = (std::filesystem::temp_directory_path() / "gaic_ckpt_test.bin").string();
  CropModel model(TinyConfig(), 50);
  model.SetMosNormalization(3.2, 0.7);
  SaveCheckpoint(model, path);
  CropModel loaded = LoadCheckpoint(path);
  EXPECT_EQ(loaded.config(), model.config());
  EXPECT_EQ(loaded.mos_mean(), 3.2);
  EXPECT_EQ(loaded.mos_std(), 0.7);
  const Image img = NoiseImage(40, 40, 51);
  const std::vector<CropBox> crops = CandidateBoxes(img.dims(), GridSpec{});
  const auto a = model.ScoreCrops(img, crops);
  const auto b = loaded.ScoreCrops(img, crops);
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].score, b[i].score);

  std::ofstream(path + ".json") << R"({"config":{},"mos_mean":0,"mos_std":1,"concat_order":"rod_roi"})";
  EXPECT_THROW(LoadCheckpoint(path), std::runtime_error);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");
}

TEST(Training, NormalizedTargetsAreStandard) {
  const std::vector<TrainingExample> ex = TinyExamples(5, 60);
  const auto [mean, std] = MosStatistics(ex);
  double s = 0, ss = 0;
  size_t n = 0;
  for (const auto& e : ex) {
    for (double m : e.mos) {
      const double z = (m - mean) / std;
      s += z;
      ss += z * z;
      ++n;
    }
  }
  EXPECT_NEAR(s / n, 0.0, 1e-9);
  EXPECT_NEAR(std::sqrt(ss / n), 1.0, 1e-9);
}

TEST(Training, SameSeedSameLossCurveAndWeights) {
  ModelConfig c = TinyConfig();
  c.epochs = 2;
  const auto ex = TinyExamples(3, 61);
  TrainLog la, lb;
  CropModel a = Train(ex, c, 7, &la);
  CropModel b = Train(ex, c, 7, &lb);
  EXPECT_EQ(la.epoch_loss, lb.epoch_loss);
  EXPECT_TRUE(nd::SerializeTensors(a.NamedParameters()) ==
              nd::SerializeTensors(b.NamedParameters()));
  TrainLog lc;
  Train(ex, c, 8, &lc);
  EXPECT_NE(la.epoch_loss, lc.epoch_loss);
}

TEST(Training, ConstantMosOverfits) {
  ModelConfig c = TinyConfig();
  c.epochs = 200;  // one image, so one step per epoch
  std::vector<TrainingExample> ex = TinyExamples(1, 62);
  std::fill(ex[0].mos.begin(), ex[0].mos.end(), 3.5);
  TrainLog log;
  Train(ex, c, 9, &log);
  const double best = *std::min_element(log.epoch_loss.begin(), log.epoch_loss.end());
  EXPECT_LT(best, 1e-4);
}

TEST(Training, Errors) {
  EXPECT_THROW(Train({}, TinyConfig(), 1), std::domain_error);
  std::vector<TrainingExample> ex = TinyExamples(1, 63);
  ex[0].mos.pop_back();
  EXPECT_THROW(Train(ex, TinyConfig(), 1), std::domain_error);
}

TEST(Training, SamplingWithAndWithoutReplacement) {
  std::mt19937_64 rng(64);
  const std::vector<int> a = SampleCrops(rng, 90, 64);
  EXPECT_EQ(std::set<int>(a.begin(), a.end()).size(), 64u);
  const std::vector<int> b = SampleCrops(rng, 10, 64);
  EXPECT_EQ(b.size(), 64u);
  for (int i : b) EXPECT_TRUE(i >= 0 && i < 10);
}

}  // namespace
}  // namespace gaic
