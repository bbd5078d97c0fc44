// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace zoomcot {
namespace {

// Products like 0.334 * 1000 land a few ulps off the integer they denote;
// snapping keeps outward rounding from adding a spurious pixel.
double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v)) ? r : v;
}

int floor_px(double v) { return static_cast<int>(std::floor(snap(v))); }
int ceil_px(double v) { return static_cast<int>(std::ceil(snap(v))); }

// Restores a nonempty span of at least one pixel inside [0, limit).
void ensure_span(int& lo, int& hi, int limit) {
  lo = std::clamp(lo, 0, limit);
  hi = std::clamp(hi, 0, limit);
  if (hi > lo) return;
  if (lo < limit) {
    hi = lo + 1;
  } else {
    lo = limit - 1;
    hi = limit;
  }
}

}  // namespace

BoxRatio BoxRatio::checked(double x1, double y1, double x2, double y2) {
  BoxRatio b{x1, y1, x2, y2};
  if (!b.valid()) throw GeometryError("invalid ratio box " + to_string(b));
  return b;
}

bool BoxRatio::valid() const noexcept {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
         std::isfinite(y2) && 0.0 <= x1 && x1 < x2 && x2 <= 1.0 && 0.0 <= y1 &&
         y1 < y2 && y2 <= 1.0;
}

BoxPx BoxPx::full_frame(int w, int h) {
  if (w <= 0 || h <= 0) throw GeometryError("frame dimensions must be positive");
  return {0, 0, w, h, w, h};
}

BoxPx BoxPx::checked(int x1, int y1, int x2, int y2, int frame_w, int frame_h) {
  BoxPx b{x1, y1, x2, y2, frame_w, frame_h};
  if (!b.valid()) throw GeometryError("invalid pixel box " + to_string(b));
  return b;
}

bool BoxPx::valid() const noexcept {
  return frame_w > 0 && frame_h > 0 && 0 <= x1 && x1 < x2 && x2 <= frame_w &&
         0 <= y1 && y1 < y2 && y2 <= frame_h;
}

std::string to_string(const BoxRatio& b) {
  std::ostringstream os;
  os << '[' << b.x1 << ", " << b.y1 << ", " << b.x2 << ", " << b.y2 << ']';
  return os.str();
}

std::string to_string(const BoxPx& b) {
  std::ostringstream os;
  os << '(' << b.x1 << ',' << b.y1 << ',' << b.x2 << ',' << b.y2 << ") in " << b.frame_w
     << 'x' << b.frame_h;
  return os.str();
}

BoxPx ratio_to_px(const BoxRatio& b, int w, int h) {
  if (w <= 0 || h <= 0) throw GeometryError("frame dimensions must be positive");
  BoxPx out{floor_px(b.x1 * w), floor_px(b.y1 * h), ceil_px(b.x2 * w), ceil_px(b.y2 * h), w, h};
  ensure_span(out.x1, out.x2, w);
  ensure_span(out.y1, out.y2, h);
  return out;
}

BoxRatio px_to_ratio(const BoxPx& b) {
  if (b.frame_w <= 0 || b.frame_h <= 0) throw GeometryError("pixel box has no frame");
  const double w = b.frame_w;
  const double h = b.frame_h;
  return {b.x1 / w, b.y1 / h, b.x2 / w, b.y2 / h};
}

BoxPx local_to_global(const BoxRatio& local, const BoxPx& parent) {
  if (!parent.valid()) throw GeometryError("invalid parent box " + to_string(parent));
  const BoxPx in_parent = ratio_to_px(local, parent.width(), parent.height());
  return {parent.x1 + in_parent.x1, parent.y1 + in_parent.y1, parent.x1 + in_parent.x2,
          parent.y1 + in_parent.y2, parent.frame_w, parent.frame_h};
}

BoxRatio compose(const BoxRatio& outer, const BoxRatio& inner) {
  const double w = outer.width();
  const double h = outer.height();
  return {std::clamp(outer.x1 + inner.x1 * w, 0.0, 1.0),
          std::clamp(outer.y1 + inner.y1 * h, 0.0, 1.0),
          std::clamp(outer.x1 + inner.x2 * w, 0.0, 1.0),
          std::clamp(outer.y1 + inner.y2 * h, 0.0, 1.0)};
}

BoxPx clip_to_frame(const BoxPx& b) {
  return {std::clamp(b.x1, 0, b.frame_w), std::clamp(b.y1, 0, b.frame_h),
          std::clamp(b.x2, 0, b.frame_w), std::clamp(b.y2, 0, b.frame_h),
          b.frame_w, b.frame_h};
}

std::optional<BoxPx> intersection(const BoxPx& a, const BoxPx& b) {
  BoxPx r{std::max(a.x1, b.x1), std::max(a.y1, b.y1), std::min(a.x2, b.x2),
          std::min(a.y2, b.y2), a.frame_w, a.frame_h};
  if (r.empty()) return std::nullopt;
  return r;
}

BoxPx bounding_union(const BoxPx& a, const BoxPx& b) {
  return {std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2),
          std::max(a.y2, b.y2), a.frame_w, a.frame_h};
}

BoxPx adjust_roi(const BoxPx& a, const BoxPx& gt) {
  if (!a.same_frame(gt)) throw GeometryError("adjust_roi: boxes from different frames");
  if (gt.frame_w <= 0 || gt.frame_h <= 0) throw GeometryError("adjust_roi: empty frame");
  BoxPx target = clip_to_frame(gt);
  ensure_span(target.x1, target.x2, target.frame_w);
  ensure_span(target.y1, target.y2, target.frame_h);
  const BoxPx clipped = clip_to_frame(a);
  if (clipped.empty()) return target;
  return bounding_union(clipped, target);
}

std::int64_t area(const BoxPx& b) {
  if (b.empty()) return 0;
  return static_cast<std::int64_t>(b.width()) * b.height();
}

double iou(const BoxPx& a, const BoxPx& b) {
  if (!a.same_frame(b)) throw GeometryError("iou: boxes from different frames");
  const auto inter = intersection(a, b);
  const std::int64_t i = inter ? area(*inter) : 0;
  const std::int64_t u = area(a) + area(b) - i;
  if (u <= 0) return 0.0;
  return static_cast<double>(i) / static_cast<double>(u);
}

double iou(const BoxRatio& a, const BoxRatio& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double i = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double u = std::max(a.area(), 0.0) + std::max(b.area(), 0.0) - i;
  if (u <= 0.0) return 0.0;
  return std::clamp(i / u, 0.0, 1.0);
}

}  // namespace zoomcot
