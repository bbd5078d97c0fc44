// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/scene3d.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace zoomcot {
namespace {

double quantile(std::vector<double>& sorted_values, double q) {
  const double pos = q * static_cast<double>(sorted_values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted_values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo]);
}

}  // namespace

std::int64_t InstanceMask::pixel_count() const {
  std::int64_t n = 0;
  for (const auto& r : runs) n += std::max<std::int64_t>(r.length, 0);
  return n;
}

std::vector<std::int64_t> InstanceMask::pixels() const {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(pixel_count()));
  for (const auto& r : runs) {
    for (std::int64_t i = 0; i < r.length; ++i) out.push_back(r.start + i);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<MaskRun> InstanceMask::encode(std::span<const std::int64_t> sorted_pixels) {
  std::vector<MaskRun> runs;
  for (const std::int64_t p : sorted_pixels) {
    if (!runs.empty() && runs.back().start + runs.back().length == p) {
      ++runs.back().length;
    } else {
      runs.push_back({p, 1});
    }
  }
  return runs;
}

std::int64_t default_area_floor(const DepthRaster& depth) {
  return std::max<std::int64_t>(1, (depth.pixel_count() * 5) / 1000);
}

BoxPx mask_box(const InstanceMask& mask, int width, int height) {
  if (width <= 0 || height <= 0) throw GeometryError("mask_box: empty frame");
  int x1 = width, y1 = height, x2 = -1, y2 = -1;
  const std::int64_t total = static_cast<std::int64_t>(width) * height;
  for (const auto& r : mask.runs) {
    if (r.length <= 0) continue;
    if (r.start < 0 || r.start + r.length > total) {
      throw GeometryError("mask " + std::to_string(mask.object_id) + " exceeds raster bounds");
    }
    const int ys = static_cast<int>(r.start / width);
    const int ye = static_cast<int>((r.start + r.length - 1) / width);
    y1 = std::min(y1, ys);
    y2 = std::max(y2, ye);
    if (ys != ye) {
      x1 = 0;
      x2 = width - 1;
    } else {
      x1 = std::min(x1, static_cast<int>(r.start % width));
      x2 = std::max(x2, static_cast<int>((r.start + r.length - 1) % width));
    }
  }
  if (x2 < 0) throw GeometryError("mask " + std::to_string(mask.object_id) + " is empty");
  return {x1, y1, x2 + 1, y2 + 1, width, height};
}

std::vector<InstanceMask> merge_small_regions(std::vector<InstanceMask> masks,
                                              const DepthRaster& depth,
                                              std::int64_t area_floor,
                                              double max_depth_gap) {
  const int w = depth.width;
  const int h = depth.height;
  const std::int64_t total = depth.pixel_count();
  const std::size_t n = masks.size();

  // Overlaps resolve to the earlier mask.
  std::vector<int> label(static_cast<std::size_t>(total), -1);
  std::vector<std::vector<std::int64_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const std::int64_t p : masks[i].pixels()) {
      if (p < 0 || p >= total) {
        throw std::invalid_argument("mask " + std::to_string(masks[i].object_id) +
                                    " exceeds raster bounds");
      }
      if (label[p] >= 0) continue;
      label[p] = static_cast<int>(i);
      members[i].push_back(p);
    }
  }

  std::vector<double> depth_sum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const std::int64_t p : members[i]) depth_sum[i] += depth.values[p];
  }
  auto mean = [&](std::size_t i) {
    return depth_sum[i] / static_cast<double>(members[i].size());
  };

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::size_t> small;
    for (std::size_t i = 0; i < n; ++i) {
      const auto size = static_cast<std::int64_t>(members[i].size());
      if (size > 0 && size < area_floor) small.push_back(i);
    }
    std::stable_sort(small.begin(), small.end(), [&](std::size_t a, std::size_t b) {
      return members[a].size() < members[b].size();
    });

    for (const std::size_t i : small) {
      const auto size = static_cast<std::int64_t>(members[i].size());
      if (size == 0 || size >= area_floor) continue;

      std::vector<int> neighbours;
      for (const std::int64_t p : members[i]) {
        const int x = static_cast<int>(p % w);
        const int y = static_cast<int>(p / w);
        const std::int64_t adj[4] = {x > 0 ? p - 1 : -1, x + 1 < w ? p + 1 : -1,
                                     y > 0 ? p - w : -1, y + 1 < h ? p + w : -1};
        for (const std::int64_t q : adj) {
          if (q >= 0 && label[q] >= 0 && label[q] != static_cast<int>(i)) {
            neighbours.push_back(label[q]);
          }
        }
      }
      std::sort(neighbours.begin(), neighbours.end());
      neighbours.erase(std::unique(neighbours.begin(), neighbours.end()), neighbours.end());

      int best = -1;
      double best_gap = 0.0;
      for (const int j : neighbours) {
        const double gap = std::abs(mean(i) - mean(static_cast<std::size_t>(j)));
        if (gap >= max_depth_gap) continue;
        const bool better =
            best < 0 || gap < best_gap ||
            (gap == best_gap && members[j].size() > members[static_cast<std::size_t>(best)].size());
        if (better) {
          best = j;
          best_gap = gap;
        }
      }
      if (best < 0) continue;

      const auto target = static_cast<std::size_t>(best);
      for (const std::int64_t p : members[i]) label[p] = best;
      members[target].insert(members[target].end(), members[i].begin(), members[i].end());
      depth_sum[target] += depth_sum[i];
      members[i].clear();
      depth_sum[i] = 0.0;
      changed = true;
    }
  }

  std::vector<InstanceMask> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (members[i].empty()) continue;
    std::sort(members[i].begin(), members[i].end());
    InstanceMask m = std::move(masks[i]);
    m.runs = InstanceMask::encode(members[i]);
    out.push_back(std::move(m));
  }
  return out;
}

double object_depth(const InstanceMask& mask, const DepthRaster& depth) {
  std::vector<double> values;
  for (const std::int64_t p : mask.pixels()) {
    if (p < 0 || p >= depth.pixel_count()) {
      throw std::invalid_argument("mask " + std::to_string(mask.object_id) +
                                  " exceeds raster bounds");
    }
    values.push_back(depth.values[p]);
  }
  if (values.empty()) {
    throw std::invalid_argument("mask " + std::to_string(mask.object_id) + " is empty");
  }
  std::sort(values.begin(), values.end());
  const std::size_t k = values.size();
  const double median =
      (k % 2 == 1) ? values[k / 2] : 0.5 * (values[k / 2 - 1] + values[k / 2]);
  // Anchor correction: keep the estimate inside the interquartile band.
  const double q1 = quantile(values, 0.25);
  const double q3 = quantile(values, 0.75);
  return std::clamp(median, q1, q3);
}

std::vector<SceneObject> rank_objects(std::vector<SceneObject> objs) {
  std::vector<std::size_t> order(objs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& oa = objs[a];
    const auto& ob = objs[b];
    if (oa.depth_raw != ob.depth_raw) return oa.depth_raw < ob.depth_raw;
    if (oa.area != ob.area) return oa.area > ob.area;
    return oa.object_id < ob.object_id;
  });
  for (std::size_t r = 0; r < order.size(); ++r) objs[order[r]].depth_rank = static_cast<int>(r + 1);
  return objs;
}

std::vector<SceneObject> localize_objects(const std::vector<SceneObject>& objs,
                                          const BoxPx& crop) {
  if (!crop.valid()) throw GeometryError("localize_objects: invalid crop " + to_string(crop));
  const bool ranked = std::all_of(objs.begin(), objs.end(),
                                  [](const SceneObject& o) { return o.depth_rank > 0; });
  const std::vector<SceneObject> global = ranked ? objs : rank_objects(objs);

  std::vector<SceneObject> local;
  for (const auto& o : global) {
    if (!o.box.same_frame(crop)) {
      throw GeometryError("localize_objects: object box and crop from different frames");
    }
    const auto inter = intersection(o.box, crop);
    if (!inter) continue;
    SceneObject l = o;
    l.box = {inter->x1 - crop.x1, inter->y1 - crop.y1, inter->x2 - crop.x1,
             inter->y2 - crop.y1, crop.width(), crop.height()};
    l.area = area(l.box);
    local.push_back(std::move(l));
  }
  if (local.empty()) return local;

  const auto [lo, hi] = std::minmax_element(
      local.begin(), local.end(),
      [](const SceneObject& a, const SceneObject& b) { return a.depth_raw < b.depth_raw; });
  const double dmin = lo->depth_raw;
  const double span = hi->depth_raw - dmin;

  std::vector<std::size_t> order(local.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return local[a].depth_rank < local[b].depth_rank;
  });
  for (std::size_t r = 0; r < order.size(); ++r) local[order[r]].depth_rank = static_cast<int>(r + 1);
  for (auto& l : local) l.depth_raw = span > 0.0 ? (l.depth_raw - dmin) / span : 0.5;
  return local;
}

std::vector<SceneObject> build_scene(const std::vector<InstanceMask>& masks,
                                     const DepthRaster& depth) {
  std::vector<SceneObject> objs;
  for (const auto& m : masks) {
    if (m.pixel_count() == 0) continue;
    SceneObject o;
    o.object_id = m.object_id;
    o.category = m.category;
    o.box = mask_box(m, depth.width, depth.height);
    o.depth_raw = object_depth(m, depth);
    o.area = static_cast<std::int64_t>(m.pixels().size());
    objs.push_back(std::move(o));
  }
  return rank_objects(std::move(objs));
}

}  // namespace zoomcot
