// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace zoomcot {

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Axis-aligned box in fractions of the enclosing view, [x1,x2) x [y1,y2).
struct BoxRatio {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 1.0;
  double y2 = 1.0;

  static BoxRatio full() { return {}; }
  /// Throws GeometryError unless 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1.
  static BoxRatio checked(double x1, double y1, double x2, double y2);

  bool valid() const noexcept;
  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }

  friend bool operator==(const BoxRatio&, const BoxRatio&) = default;
};

/// Pixel box in a global frame of frame_w x frame_h pixels, half-open.
///
/// Raw values (e.g. a proposal that spills past the frame) are representable;
/// valid() states the in-frame, nonempty invariant.
struct BoxPx {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;
  int frame_w = 0;
  int frame_h = 0;

  static BoxPx full_frame(int w, int h);
  static BoxPx checked(int x1, int y1, int x2, int y2, int frame_w, int frame_h);

  bool valid() const noexcept;
  bool empty() const noexcept { return x2 <= x1 || y2 <= y1; }
  int width() const noexcept { return x2 - x1; }
  int height() const noexcept { return y2 - y1; }
  bool same_frame(const BoxPx& o) const noexcept {
    return frame_w == o.frame_w && frame_h == o.frame_h;
  }
  /// Set containment, ignoring frames.
  bool contains(const BoxPx& o) const noexcept {
    return x1 <= o.x1 && y1 <= o.y1 && x2 >= o.x2 && y2 >= o.y2;
  }

  friend bool operator==(const BoxPx&, const BoxPx&) = default;
};

std::string to_string(const BoxRatio& b);
std::string to_string(const BoxPx& b);

/// Scales to pixels, rounding outward (floor mins, ceil maxes) so the pixel
/// box always contains the ratio box. Never returns an empty box.
BoxPx ratio_to_px(const BoxRatio& b, int w, int h);
BoxRatio px_to_ratio(const BoxPx& b);

/// Maps a box given in a view's ratio coordinates into the global frame of
/// the view's parent box. The result lies within parent.
BoxPx local_to_global(const BoxRatio& local, const BoxPx& parent);

/// Ratio-space composition: `inner` expressed in the view `outer` cuts out.
BoxRatio compose(const BoxRatio& outer, const BoxRatio& inner);

/// Clamps all edges into the frame. The result may be empty.
BoxPx clip_to_frame(const BoxPx& b);
std::optional<BoxPx> intersection(const BoxPx& a, const BoxPx& b);
BoxPx bounding_union(const BoxPx& a, const BoxPx& b);

/// Grows `a` to the minimal box covering both a (clipped) and gt, inside the
/// frame. A gt that is degenerate after clipping is inflated to 1 px.
BoxPx adjust_roi(const BoxPx& a, const BoxPx& gt);

std::int64_t area(const BoxPx& b);

/// Throws GeometryError if the boxes live in different frames.
double iou(const BoxPx& a, const BoxPx& b);
double iou(const BoxRatio& a, const BoxRatio& b);

}  // namespace zoomcot
