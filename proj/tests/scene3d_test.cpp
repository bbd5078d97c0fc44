// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/scene3d.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_support.hpp"

namespace zoomcot {
namespace {

DepthRaster flat(int w, int h, float v) { return {w, h, std::vector<float>(w * h, v)}; }

InstanceMask rect_mask(int id, const std::string& cat, int w, int x1, int y1, int x2, int y2) {
  std::vector<std::int64_t> px;
  for (int y = y1; y < y2; ++y) {
    for (int x = x1; x < x2; ++x) px.push_back(static_cast<std::int64_t>(y) * w + x);
  }
  return {id, cat, InstanceMask::encode(px)};
}

void paint(DepthRaster& d, int x1, int y1, int x2, int y2, float v) {
  for (int y = y1; y < y2; ++y) {
    for (int x = x1; x < x2; ++x) d.values[y * d.width + x] = v;
  }
}

SceneObject obj(int id, double depth, std::int64_t area, BoxPx box = {0, 0, 1, 1, 10, 10}) {
  SceneObject o;
  o.object_id = id;
  o.category = "c" + std::to_string(id);
  o.depth_raw = depth;
  o.area = area;
  o.box = box;
  return o;
}

TEST(Mask, EncodeMergesRunsAndPixelsRoundTrip) {
  const std::vector<std::int64_t> px{1, 2, 3, 7, 8, 20};
  const auto runs = InstanceMask::encode(px);
  EXPECT_EQ(runs, (std::vector<MaskRun>{{1, 3}, {7, 2}, {20, 1}}));
  InstanceMask m{1, "x", runs};
  EXPECT_EQ(m.pixels(), px);
  EXPECT_EQ(m.pixel_count(), 6);
}

TEST(Mask, BoxOfRectangle) {
  const auto m = rect_mask(1, "cup", 20, 3, 4, 9, 11);
  EXPECT_EQ(mask_box(m, 20, 15), (BoxPx{3, 4, 9, 11, 20, 15}));
  EXPECT_THROW(mask_box(InstanceMask{2, "e", {}}, 20, 15), GeometryError);
}

TEST(AreaFloor, HalfPercent) {
  EXPECT_EQ(default_area_floor(flat(100, 100, 0.5f)), 50);
  EXPECT_EQ(default_area_floor(flat(10, 10, 0.5f)), 1);
}

TEST(Merge, SmallRegionAbsorbedByAdjacentSimilarDepth) {
  auto d = flat(20, 20, 0.9f);
  paint(d, 0, 0, 10, 10, 0.3f);
  paint(d, 10, 0, 12, 2, 0.32f);
  std::vector<InstanceMask> masks{rect_mask(1, "table", 20, 0, 0, 10, 10),
                                  rect_mask(2, "speck", 20, 10, 0, 12, 2)};
  const auto out = merge_small_regions(masks, d, 10);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].object_id, 1);
  EXPECT_EQ(out[0].pixel_count(), 104);
}

TEST(Merge, DepthGapBlocksMerge) {
  auto d = flat(20, 20, 0.9f);
  paint(d, 0, 0, 10, 10, 0.3f);
  paint(d, 10, 0, 12, 2, 0.8f);
  std::vector<InstanceMask> masks{rect_mask(1, "table", 20, 0, 0, 10, 10),
                                  rect_mask(2, "speck", 20, 10, 0, 12, 2)};
  EXPECT_EQ(merge_small_regions(masks, d, 10).size(), 2u);
}

TEST(Merge, NonAdjacentNotMerged) {
  auto d = flat(20, 20, 0.3f);
  std::vector<InstanceMask> masks{rect_mask(1, "table", 20, 0, 0, 10, 10),
                                  rect_mask(2, "speck", 20, 15, 15, 17, 17)};
  EXPECT_EQ(merge_small_regions(masks, d, 10).size(), 2u);
}

TEST(Merge, ConservesForegroundPixels) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto d = flat(40, 30, 0.5f);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    for (auto& v : d.values) v = u(rng);
    std::vector<InstanceMask> masks;
    std::int64_t total = 0;
    std::vector<bool> seen(40 * 30, false);
    for (int i = 0; i < 8; ++i) {
      const BoxPx b = testing::random_box(rng, 40, 30);
      auto m = rect_mask(i + 1, "o", 40, b.x1, b.y1, b.x2, b.y2);
      for (auto p : m.pixels()) {
        if (!seen[p]) ++total;
        seen[p] = true;
      }
      masks.push_back(std::move(m));
    }
    const auto out = merge_small_regions(masks, d, 30, 0.6);
    std::int64_t after = 0;
    for (const auto& m : out) after += m.pixel_count();
    ASSERT_EQ(after, total);
  }
}

TEST(ObjectDepth, MedianOfMask) {
  auto d = flat(4, 1, 0.0f);
  d.values = {0.1f, 0.2f, 0.9f, 0.4f};
  const InstanceMask m{1, "x", {{0, 4}}};
  EXPECT_NEAR(object_depth(m, d), 0.3, 1e-6);
  EXPECT_NEAR(object_depth(InstanceMask{1, "x", {{0, 3}}}, d), 0.2, 1e-6);
}

TEST(Rank, OrderByDepthThenAreaThenId) {
  const auto ranked = rank_objects({obj(1, 0.5, 10), obj(2, 0.2, 10), obj(3, 0.5, 30), obj(4, 0.5, 30)});
  EXPECT_EQ(ranked[0].depth_rank, 4);
  EXPECT_EQ(ranked[1].depth_rank, 1);
  EXPECT_EQ(ranked[2].depth_rank, 2);
  EXPECT_EQ(ranked[3].depth_rank, 3);
  EXPECT_EQ(ranked[0].object_id, 1);  // input order kept
}

TEST(Localize, ClipsTranslatesAndRenormalizes) {
  const auto scene = rank_objects({obj(1, 0.2, 100, {0, 0, 10, 10, 100, 100}),
                                   obj(2, 0.6, 100, {40, 40, 60, 60, 100, 100}),
                                   obj(3, 0.4, 100, {80, 80, 90, 90, 100, 100})});
  const auto local = localize_objects(scene, {5, 5, 50, 50, 100, 100});
  ASSERT_EQ(local.size(), 2u);
  EXPECT_EQ(local[0].object_id, 1);
  EXPECT_EQ(local[0].box, (BoxPx{0, 0, 5, 5, 45, 45}));
  EXPECT_EQ(local[1].box, (BoxPx{35, 35, 45, 45, 45, 45}));
  EXPECT_DOUBLE_EQ(local[0].depth_raw, 0.0);
  EXPECT_DOUBLE_EQ(local[1].depth_raw, 1.0);
  EXPECT_EQ(local[0].depth_rank, 1);
  EXPECT_EQ(local[1].depth_rank, 2);
}

TEST(Localize, LoneObjectMapsToHalf) {
  const auto scene = rank_objects({obj(1, 0.2, 100, {0, 0, 10, 10, 100, 100})});
  const auto local = localize_objects(scene, {0, 0, 50, 50, 100, 100});
  ASSERT_EQ(local.size(), 1u);
  EXPECT_DOUBLE_EQ(local[0].depth_raw, 0.5);
  EXPECT_TRUE(localize_objects(scene, {60, 60, 70, 70, 100, 100}).empty());
}

TEST(Localize, TiesKeepGlobalOrder) {
  const auto scene = rank_objects({obj(1, 0.5, 100, {0, 0, 10, 10, 100, 100}),
                                   obj(2, 0.5, 400, {20, 0, 40, 20, 100, 100})});
  const auto local = localize_objects(scene, {5, 0, 25, 10, 100, 100});
  ASSERT_EQ(local.size(), 2u);
  // Object 2 is larger globally and ranks first even though its clipped part
  // is the same size as object 1's.
  EXPECT_EQ(local[1].depth_rank, 1);
  EXPECT_EQ(local[0].depth_rank, 2);
}

TEST(BuildScene, FromMasksAndDepth) {
  auto d = flat(20, 10, 0.9f);
  paint(d, 0, 0, 5, 5, 0.1f);
  paint(d, 10, 2, 15, 8, 0.6f);
  const auto scene = build_scene({rect_mask(1, "cup", 20, 0, 0, 5, 5),
                                  rect_mask(2, "lamp", 20, 10, 2, 15, 8),
                                  InstanceMask{3, "empty", {}}},
                                 d);
  ASSERT_EQ(scene.size(), 2u);
  EXPECT_EQ(scene[0].box, (BoxPx{0, 0, 5, 5, 20, 10}));
  EXPECT_EQ(scene[0].depth_rank, 1);
  EXPECT_EQ(scene[1].depth_rank, 2);
  EXPECT_NEAR(scene[1].depth_raw, 0.6, 1e-6);
  EXPECT_EQ(scene[1].area, 30);
}

}  // namespace
}  // namespace zoomcot
