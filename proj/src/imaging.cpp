// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace zoomcot {
namespace {

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v)) ? r : v;
}

}  // namespace

ImageView::ImageView(cv::Mat pixels, BoxPx origin)
    : pixels_(std::make_shared<const cv::Mat>(std::move(pixels))), origin_(origin) {
  if (pixels_->empty() || pixels_->cols < 1 || pixels_->rows < 1) {
    throw ImageError("image view must have at least one pixel");
  }
  if (!origin_.valid()) throw ImageError("image view origin is invalid: " + to_string(origin_));
}

ImageView ImageView::root(cv::Mat pixels) {
  const BoxPx frame = BoxPx::full_frame(pixels.cols, pixels.rows);
  return ImageView(std::move(pixels), frame);
}

BudgetedSize budget_size(int width, int height, const PixelBudget& budget) {
  if (!budget.valid()) throw ImageError("pixel budget requires 0 < min <= max");
  if (width < 1 || height < 1) throw ImageError("cannot budget an empty image");
  const double count = static_cast<double>(width) * height;
  if (count >= static_cast<double>(budget.min_pixels) &&
      count <= static_cast<double>(budget.max_pixels)) {
    return {width, height, false};
  }
  int w = 0;
  int h = 0;
  if (count > static_cast<double>(budget.max_pixels)) {
    const double s = std::sqrt(static_cast<double>(budget.max_pixels) / count);
    w = std::max(1, static_cast<int>(std::floor(snap(width * s))));
    h = std::max(1, static_cast<int>(std::floor(snap(height * s))));
  } else {
    const double s = std::sqrt(static_cast<double>(budget.min_pixels) / count);
    w = static_cast<int>(std::ceil(snap(width * s)));
    h = static_cast<int>(std::ceil(snap(height * s)));
    // Rounding the long side up can overshoot a tight budget; trim it back.
    while (static_cast<std::int64_t>(w) * h > budget.max_pixels && std::max(w, h) > 1) {
      (w >= h ? w : h) -= 1;
    }
  }
  return {w, h, w != width || h != height};
}

ImageView crop(const ImageView& view, const BoxPx& b) {
  BoxPx local = b;
  local.frame_w = view.width();
  local.frame_h = view.height();
  local = clip_to_frame(local);
  if (local.empty()) throw DegenerateCrop("crop box " + to_string(b) + " is empty in the view");
  const BoxPx origin = local_to_global(px_to_ratio(local), view.origin());
  const cv::Rect rect(local.x1, local.y1, local.width(), local.height());
  return ImageView(view.pixels()(rect), origin);
}

ImageView resize_to_budget(const ImageView& view, const PixelBudget& budget) {
  const BudgetedSize size = budget_size(view.width(), view.height(), budget);
  if (!size.resized) return view;
  cv::Mat out;
  cv::resize(view.pixels(), out, cv::Size(size.width, size.height), 0, 0, cv::INTER_LINEAR);
  return ImageView(std::move(out), view.origin());
}

ImageView load_image(const std::filesystem::path& path) {
  cv::Mat pixels = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (pixels.empty()) throw ImageError("cannot read image " + path.string());
  return ImageView::root(std::move(pixels));
}

cv::Size probe_image_size(const std::filesystem::path& path) {
  return load_image(path).pixels().size();
}

std::string encode_png(const ImageView& view) {
  std::vector<unsigned char> buf;
  // A crop is a non-contiguous ROI; imencode handles the stride.
  if (!cv::imencode(".png", view.pixels(), buf)) throw ImageError("PNG encoding failed");
  return {buf.begin(), buf.end()};
}

}  // namespace zoomcot
