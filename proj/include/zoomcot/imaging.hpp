// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>

#include <opencv2/core.hpp>

#include "zoomcot/geometry.hpp"

namespace zoomcot {

class DegenerateCrop : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable pixel view plus the global-frame box it was cut from.
///
/// A view may have been resized, so its pixel grid need not match the size
/// of origin(); ratio coordinates on the view map affinely onto origin().
class ImageView {
 public:
  ImageView(cv::Mat pixels, BoxPx origin);
  /// A root view whose origin is the full frame of `pixels`.
  static ImageView root(cv::Mat pixels);

  int width() const noexcept { return pixels_->cols; }
  int height() const noexcept { return pixels_->rows; }
  std::int64_t pixel_count() const noexcept {
    return static_cast<std::int64_t>(width()) * height();
  }
  const BoxPx& origin() const noexcept { return origin_; }
  const cv::Mat& pixels() const noexcept { return *pixels_; }
  /// True when both views share the same pixel buffer.
  bool same_pixels(const ImageView& o) const noexcept { return pixels_ == o.pixels_; }

 private:
  std::shared_ptr<const cv::Mat> pixels_;
  BoxPx origin_;
};

struct PixelBudget {
  std::int64_t min_pixels = 112 * 112;
  std::int64_t max_pixels = 512 * 512;

  bool valid() const noexcept { return 0 < min_pixels && min_pixels <= max_pixels; }
};

struct BudgetedSize {
  int width = 0;
  int height = 0;
  bool resized = false;
};

/// Target dimensions under the budget, aspect ratio preserved. Pure arithmetic.
BudgetedSize budget_size(int width, int height, const PixelBudget& budget);

/// Crops `b`, given in the view's own pixel grid (frame = view size).
/// The box is clipped to the view first; an empty remainder throws DegenerateCrop.
ImageView crop(const ImageView& view, const BoxPx& b);

/// Bilinear resize into the budget; returns the input view when already inside.
ImageView resize_to_budget(const ImageView& view, const PixelBudget& budget);

ImageView load_image(const std::filesystem::path& path);
/// Reads only enough to report dimensions; throws ImageError when unreadable.
cv::Size probe_image_size(const std::filesystem::path& path);
std::string encode_png(const ImageView& view);

}  // namespace zoomcot
