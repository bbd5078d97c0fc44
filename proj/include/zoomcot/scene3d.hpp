// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zoomcot/geometry.hpp"

namespace zoomcot {

inline constexpr double kDefaultMergeDepthGap = 0.15;

/// Row-major normalized depth, values in [0,1].
struct DepthRaster {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  std::int64_t pixel_count() const { return static_cast<std::int64_t>(width) * height; }
};

/// One run of foreground pixels: `length` consecutive row-major indices from `start`.
struct MaskRun {
  std::int64_t start = 0;
  std::int64_t length = 0;
  friend bool operator==(const MaskRun&, const MaskRun&) = default;
};

struct InstanceMask {
  int object_id = 0;
  std::string category;
  std::vector<MaskRun> runs;

  std::int64_t pixel_count() const;
  /// Sorted row-major pixel indices.
  std::vector<std::int64_t> pixels() const;
  /// Rebuilds canonical runs (sorted, merged) from pixel indices.
  static std::vector<MaskRun> encode(std::span<const std::int64_t> sorted_pixels);
};

struct SceneObject {
  int object_id = 0;
  std::string category;
  BoxPx box;
  double depth_raw = 0.0;
  int depth_rank = 0;  // 1 = nearest; 0 = not yet ranked
  std::int64_t area = 0;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// 0.5% of the raster's pixels, at least one pixel.
std::int64_t default_area_floor(const DepthRaster& depth);

/// Tight pixel extent of a mask; throws GeometryError for an empty mask.
BoxPx mask_box(const InstanceMask& mask, int width, int height);

/// Absorbs regions smaller than `area_floor` into an adjacent (4-connected)
/// region whose mean depth differs by less than `max_depth_gap`. Repeats to a
/// fixed point. Foreground pixel count is conserved; absorbed masks disappear.
std::vector<InstanceMask> merge_small_regions(std::vector<InstanceMask> masks,
                                              const DepthRaster& depth,
                                              std::int64_t area_floor,
                                              double max_depth_gap = kDefaultMergeDepthGap);

/// Median depth under the mask, clamped into the mask's interquartile band.
double object_depth(const InstanceMask& mask, const DepthRaster& depth);

/// Assigns ranks 1..K by (depth_raw asc, area desc, object_id asc), stable for
/// remaining ties. Output keeps the input order.
std::vector<SceneObject> rank_objects(std::vector<SceneObject> objs);

/// Objects whose boxes overlap `crop`, clipped and translated into the crop's
/// own frame, with depths min-max renormalized over the subset (a lone or
/// flat subset maps to 0.5) and ranks reassigned in global rank order.
std::vector<SceneObject> localize_objects(const std::vector<SceneObject>& objs,
                                          const BoxPx& crop);

/// Full pseudo-3D object list from masks and depth: box, median depth, rank.
std::vector<SceneObject> build_scene(const std::vector<InstanceMask>& masks,
                                     const DepthRaster& depth);

}  // namespace zoomcot
