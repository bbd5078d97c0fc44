// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/imaging.hpp"

#include <gtest/gtest.h>

#include <opencv2/imgcodecs.hpp>

#include "test_support.hpp"

namespace zoomcot {
namespace {

cv::Mat gradient(int w, int h) {
  cv::Mat m(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.at<cv::Vec3b>(y, x) = cv::Vec3b(x % 256, y % 256, (x + y) % 256);
  }
  return m;
}

TEST(Crop, FullFrameIsIdentical) {
  const auto root = ImageView::root(gradient(100, 80));
  const auto c = crop(root, BoxPx::full_frame(100, 80));
  EXPECT_EQ(c.origin(), root.origin());
  EXPECT_EQ(c.width(), 100);
  EXPECT_EQ(cv::norm(c.pixels(), root.pixels(), cv::NORM_INF), 0.0);
}

TEST(Crop, SubRegionOriginAndPixels) {
  const auto root = ImageView::root(gradient(100, 100));
  const auto c = crop(root, {10, 10, 20, 20, 100, 100});
  EXPECT_EQ(c.width(), 10);
  EXPECT_EQ(c.height(), 10);
  EXPECT_EQ(c.origin(), (BoxPx{10, 10, 20, 20, 100, 100}));
  EXPECT_EQ(c.pixels().at<cv::Vec3b>(0, 0), cv::Vec3b(10, 10, 20));
}

TEST(Crop, CropOfCropMatchesDirect) {
  const auto root = ImageView::root(gradient(200, 150));
  const auto outer = crop(root, {40, 30, 140, 130, 200, 150});
  const auto inner = crop(outer, {10, 20, 60, 70, 100, 100});
  EXPECT_EQ(inner.origin(), (BoxPx{50, 50, 100, 100, 200, 150}));
  const auto direct = crop(root, inner.origin());
  EXPECT_EQ(cv::norm(inner.pixels(), direct.pixels(), cv::NORM_INF), 0.0);
}

TEST(Crop, CropOfResizedViewMapsAffinely) {
  const auto root = ImageView::root(gradient(400, 400));
  const auto half = resize_to_budget(root, {100, 200 * 200});
  ASSERT_EQ(half.width(), 200);
  const auto c = crop(half, {50, 50, 100, 100, 200, 200});
  EXPECT_EQ(c.origin(), (BoxPx{100, 100, 200, 200, 400, 400}));
}

TEST(Crop, EmptyIntersectionThrows) {
  const auto root = ImageView::root(gradient(50, 50));
  EXPECT_THROW(crop(root, {60, 60, 70, 70, 50, 50}), DegenerateCrop);
}

TEST(Budget, InBudgetIsUnchanged) {
  const auto v = ImageView::root(gradient(512, 512));
  const auto r = resize_to_budget(v, PixelBudget{});
  EXPECT_TRUE(r.same_pixels(v));
  EXPECT_TRUE(resize_to_budget(r, PixelBudget{}).same_pixels(r));
}

TEST(Budget, DefaultsMatchPublishedLimits) {
  const PixelBudget b;
  EXPECT_EQ(b.min_pixels, 12544);
  EXPECT_EQ(b.max_pixels, 262144);
}

TEST(Budget, SmallViewUpsampled) {
  const auto r = resize_to_budget(ImageView::root(gradient(50, 50)), PixelBudget{});
  EXPECT_GE(r.pixel_count(), 12544);
  EXPECT_LE(r.pixel_count(), 262144);
  EXPECT_EQ(r.width(), r.height());
  EXPECT_EQ(r.origin(), BoxPx::full_frame(50, 50));
}

TEST(Budget, WideViewDownscaledKeepsRatio) {
  const auto s = budget_size(4000, 1000, PixelBudget{});
  EXPECT_TRUE(s.resized);
  EXPECT_LE(static_cast<std::int64_t>(s.width) * s.height, 262144);
  EXPECT_GE(static_cast<std::int64_t>(s.width) * s.height, 12544);
  EXPECT_NEAR(static_cast<double>(s.width) / 4.0, s.height, 1.0);
}

TEST(Budget, RandomSizesStayInBudget) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(1, 5000);
  for (int i = 0; i < 5000; ++i) {
    const int w = d(rng), h = d(rng);
    const auto s = budget_size(w, h, PixelBudget{});
    const auto px = static_cast<std::int64_t>(s.width) * s.height;
    ASSERT_LE(px, 262144) << w << "x" << h;
    // Extreme aspect ratios cannot reach the minimum without breaking the
    // ratio; everything else must.
    if (std::max(w, h) / std::min(w, h) < 50) ASSERT_GE(px, 12544) << w << "x" << h;
    const double shorter_expected =
        w < h ? static_cast<double>(s.height) * w / h : static_cast<double>(s.width) * h / w;
    ASSERT_NEAR(std::min(s.width, s.height), shorter_expected, 1.0) << w << "x" << h;
  }
}

TEST(Io, LoadProbeAndEncode) {
  testing::TempDir dir("imaging");
  const auto path = dir / "g.png";
  cv::imwrite(path.string(), gradient(33, 21));
  EXPECT_EQ(probe_image_size(path), cv::Size(33, 21));
  const auto v = load_image(path);
  EXPECT_EQ(v.origin(), BoxPx::full_frame(33, 21));
  const std::string png = encode_png(v);
  ASSERT_GT(png.size(), 8u);
  EXPECT_EQ(png.substr(1, 3), "PNG");
  EXPECT_THROW(load_image(dir / "missing.png"), ImageError);
  EXPECT_THROW(probe_image_size(dir / "missing.png"), ImageError);
}

}  // namespace
}  // namespace zoomcot
