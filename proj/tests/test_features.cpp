#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "courtfusion/errors.hpp"
#include "courtfusion/features.hpp"
#include "oracles.hpp"

using namespace courtfusion;
using namespace courtfusion::features;

namespace {

GrayImage random_image(int w, int h, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> data(static_cast<std::size_t>(w) * h);
  for (auto& v : data) v = u(gen);
  return GrayImage(w, h, std::move(data));
}

std::vector<Detection> random_detections(std::mt19937_64& gen, int n) {
  std::uniform_real_distribution<double> pos(0, 200), size(20, 80), score(0, 1);
  std::vector<Detection> out;
  for (int i = 0; i < n; ++i)
    out.push_back(Detection::from_box({pos(gen), pos(gen), size(gen), size(gen) * 2}, score(gen)));
  return out;
}

}  // namespace

TEST(Gradients, ConstantImageHasNoGradient) {
  const GradientField g = gradients(GrayImage(10, 12, 0.4));
  for (double m : g.magnitude) EXPECT_EQ(m, 0.0);
}

TEST(Gradients, HorizontalRampPointsAlongX) {
  const int w = 20, h = 9;
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<double>(x) / w;
  const GradientField g = gradients(img);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(y) * w + x;
      EXPECT_NEAR(g.orientation[i], 0.0, 1e-12);
      EXPECT_NEAR(g.magnitude[i], 2.0 / w, 1e-12);
    }
}

TEST(Gradients, MatchesPerPixelOracle) {
  std::mt19937_64 gen(21);
  const GrayImage img = random_image(16, 16, gen);
  const GradientField g = gradients(img);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const auto [gx, gy] = oracle::gradient_at(img, x, y);
      const auto i = static_cast<std::size_t>(y) * 16 + x;
      EXPECT_EQ(g.magnitude[i], std::hypot(gx, gy));
      EXPECT_NEAR(g.orientation[i], oracle::orientation_deg(gx, gy), 1e-12);
      EXPECT_GE(g.orientation[i], 0.0);
      EXPECT_LT(g.orientation[i], 180.0);
    }
}

TEST(Gradients, TinyImageRejected) {
  EXPECT_THROW(gradients(GrayImage(2, 5, 0.0)), ImageTooSmall);
}

TEST(GrayImage, RejectsOutOfRangeAndMismatchedData) {
  EXPECT_THROW(GrayImage(2, 2, std::vector<double>{0, 0.5, 1.5, 0}), InputError);
  EXPECT_THROW(GrayImage(2, 2, std::vector<double>{0, 0.5}), LengthMismatch);
}

TEST(Hog, ConstantWindowGivesZeroDescriptor) {
  const HogDescriptor d = hog(GrayImage(64, 128, 0.7), {0, 0, 64, 128});
  ASSERT_EQ(d.values.size(), 3780u);
  for (double v : d.values) EXPECT_EQ(v, 0.0);
}

TEST(Hog, DefaultLayoutLength) {
  const HogParams p;
  EXPECT_EQ(p.blocks_x(), 7);
  EXPECT_EQ(p.blocks_y(), 15);
  EXPECT_EQ(p.descriptor_length(), 7u * 15u * 4u * 9u);
  EXPECT_EQ(p.descriptor_length(), 3780u);
}

TEST(Hog, MatchesNaiveOracle) {
  std::mt19937_64 gen(22);
  const GrayImage img = random_image(96, 160, gen);
  const HogParams p;
  for (const auto [x, y] : {std::pair{0, 0}, std::pair{32, 32}, std::pair{13, 7}}) {
    const auto got = hog(img, {x, y, 64, 128}, p).values;
    const auto ref = oracle::hog(img, x, y, p);
    ASSERT_EQ(got.size(), ref.size());
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got[i], ref[i], 1e-12) << "index " << i;
  }
}

TEST(Hog, MatchesNaiveOracleWithOtherParameters) {
  std::mt19937_64 gen(23);
  const GrayImage img = random_image(40, 48, gen);
  HogParams p;
  p.window_w = 32;
  p.window_h = 40;
  p.cell = 4;
  p.block = 3;
  p.bins = 6;
  p.clip = 0.15;
  const auto got = hog(img, {4, 8, 32, 40}, p).values;
  const auto ref = oracle::hog(img, 4, 8, p);
  ASSERT_EQ(got.size(), p.descriptor_length());
  ASSERT_EQ(got.size(), ref.size());
  for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got[i], ref[i], 1e-12);
}

TEST(Hog, WindowErrors) {
  const GrayImage img(64, 128, 0.1);
  EXPECT_THROW(hog(img, {8, 0, 64, 128}), WindowOutOfBounds);
  EXPECT_THROW(hog(img, {0, 0, 60, 128}), BadGeometry);
  HogParams p;
  p.window_w = 60;
  EXPECT_THROW(p.validate(), BadGeometry);
}

TEST(HogProperty, NonnegativeWithBoundedBlockNorms) {
  std::mt19937_64 gen(24);
  const HogParams p;
  const std::size_t block_len = 4 * 9;
  for (int trial = 0; trial < 10; ++trial) {
    const GrayImage img = random_image(64, 128, gen);
    const auto v = hog(img, {0, 0, 64, 128}, p).values;
    for (std::size_t b = 0; b < v.size(); b += block_len) {
      double n = 0.0;
      for (std::size_t k = b; k < b + block_len; ++k) {
        EXPECT_GE(v[k], 0.0);
        n += v[k] * v[k];
      }
      EXPECT_LE(std::sqrt(n), 1.0 + 1e-9);
    }
  }
}

TEST(HogProperty, BrightnessScaleInvariance) {
  std::mt19937_64 gen(25);
  std::uniform_real_distribution<double> scale(0.05, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const GrayImage img = random_image(64, 128, gen);
    const double c = scale(gen);
    std::vector<double> scaled(img.data().begin(), img.data().end());
    for (auto& v : scaled) v *= c;
    const auto a = hog(img, {0, 0, 64, 128}).values;
    const auto b = hog(GrayImage(64, 128, std::move(scaled)), {0, 0, 64, 128}).values;
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-9);
  }
}

TEST(SvmScore, Examples) {
  std::mt19937_64 gen(26);
  const auto d = hog(random_image(64, 128, gen), {0, 0, 64, 128});
  LinearSvmModel zero{std::vector<double>(d.values.size(), 0.0), 1.0, 0.0, {}};
  EXPECT_EQ(svm_score(zero, d), 1.0);
  LinearSvmModel self{d.values, 0.0, 0.0, {}};
  EXPECT_NEAR(svm_score(self, d), oracle::dot(d.values, d.values), 1e-12);
}

TEST(SvmScore, MatchesSequentialDot) {
  std::mt19937_64 gen(27);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w(3780), x(3780);
    for (auto& e : w) e = nd(gen);
    for (auto& e : x) e = nd(gen);
    const double bias = nd(gen);
    LinearSvmModel m{w, bias, 0.0, {}};
    EXPECT_NEAR(svm_score(m, x), oracle::dot(w, x) + bias, 1e-12 * 100);
  }
  LinearSvmModel m{std::vector<double>(5, 1.0), 0.0, 0.0, {}};
  EXPECT_THROW(svm_score(m, std::vector<double>(6, 1.0)), LengthMismatch);
}

TEST(Detect, RejectingModelFindsNothing) {
  std::mt19937_64 gen(28);
  LinearSvmModel m{std::vector<double>(3780, 1.0), 0.0, std::numeric_limits<double>::infinity(), {}};
  EXPECT_TRUE(detect(random_image(128, 160, gen), m, 8, 0.5).empty());
}

TEST(Detect, FindsSinglePlantedPatch) {
  std::mt19937_64 gen(29);
  GrayImage img(192, 256, 0.5);
  const GrayImage patch = random_image(64, 128, gen);
  const int px = 64, py = 96;
  for (int y = 0; y < 128; ++y)
    for (int x = 0; x < 64; ++x) img.at(px + x, py + y) = patch.at(x, y);

  LinearSvmModel m;
  m.weights = hog(img, {px, py, 64, 128}).values;
  const double self = oracle::dot(m.weights, m.weights);
  m.bias = 0.0;
  m.threshold = 0.9 * self;

  const auto dets = detect(img, m, 8, 0.5);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].box.x, px);
  EXPECT_EQ(dets[0].box.y, py);
  EXPECT_NEAR(dets[0].score, self, 1e-9);
  EXPECT_EQ(dets[0].foot_point, (Point2{px + 32.0, py + 128.0}));
  EXPECT_EQ(detect(img, m, 8, 0.5).size(), 1u);
}

TEST(Nms, Examples) {
  EXPECT_TRUE(nms({}, 0.5).empty());

  const auto a = Detection::from_box({10, 10, 64, 128}, 0.9);
  const auto b = Detection::from_box({10, 10, 64, 128}, 0.8);
  const auto same = nms({b, a}, 0.5);
  ASSERT_EQ(same.size(), 1u);
  EXPECT_EQ(same[0].score, 0.9);

  // Horizontal offset giving IoU = 0.8 for 64-wide boxes.
  const double dx = 64.0 * 0.2 / 1.8;
  const auto c = Detection::from_box({10 + dx, 10, 64, 128}, 0.7);
  EXPECT_NEAR(iou(a.box, c.box), 0.8, 1e-12);
  const auto overlap = nms({c, a}, 0.5);
  ASSERT_EQ(overlap.size(), 1u);
  EXPECT_EQ(overlap[0].score, 0.9);

  const auto d = Detection::from_box({200, 10, 64, 128}, 0.1);
  EXPECT_EQ(nms({a, d}, 0.5).size(), 2u);
}

TEST(NmsProperty, Idempotent) {
  std::mt19937_64 gen(30);
  for (int trial = 0; trial < 200; ++trial) {
    const auto once = nms(random_detections(gen, 15), 0.3);
    const auto twice = nms(once, 0.3);
    ASSERT_EQ(once.size(), twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      EXPECT_EQ(once[i].score, twice[i].score);
      EXPECT_EQ(once[i].box.x, twice[i].box.x);
    }
    for (std::size_t i = 0; i < once.size(); ++i)
      for (std::size_t j = i + 1; j < once.size(); ++j) EXPECT_LE(iou(once[i].box, once[j].box), 0.3);
  }
}

TEST(Detection, FootPointIsBottomCenter) {
  const auto d = Detection::from_box({4, 6, 10, 20}, 1.0);
  EXPECT_EQ(d.foot_point, (Point2{9, 26}));
  EXPECT_THROW(Detection::from_box({0, 0, 0, 5}, 1.0), BadGeometry);
}

TEST(CosineSimilarity, Examples) {
  const std::vector<double> a{1, 2, 3};
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-15);
  const std::vector<double> e1{1, 0, 0}, e2{0, 1, 0};
  EXPECT_EQ(cosine_similarity(e1, e2), 0.0);
  EXPECT_THROW(cosine_similarity(e1, std::vector<double>{0, 0, 0}), ZeroVector);
  EXPECT_THROW(cosine_similarity(e1, std::vector<double>{1, 0}), LengthMismatch);
}

TEST(CosineSimilarity, MatchesNaiveOracle) {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(50), b(50);
    for (auto& e : a) e = nd(gen);
    for (auto& e : b) e = nd(gen);
    const double c = cosine_similarity(a, b);
    EXPECT_NEAR(c, oracle::cosine(a, b), 1e-12);
    EXPECT_LE(std::fabs(c), 1.0);
  }
}

TEST(Resample, FullRegionAtSameSizeIsIdentity) {
  std::mt19937_64 gen(32);
  const GrayImage img = random_image(20, 30, gen);
  const GrayImage out = resample(img, {0, 0, 20, 30}, 20, 30);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 20; ++x) EXPECT_NEAR(out.at(x, y), img.at(x, y), 1e-15);
  EXPECT_THROW(resample(img, {5, 5, 20, 30}, 10, 10), WindowOutOfBounds);
}

TEST(ReidFeature, HasDescriptorLayout) {
  std::mt19937_64 gen(33);
  const GrayImage img = random_image(100, 100, gen);
  EXPECT_EQ(reid_feature(img, {10, 10, 30, 60}).size(), 3780u);
}
