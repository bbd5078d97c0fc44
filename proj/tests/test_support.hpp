// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "zoomcot/geometry.hpp"

namespace zoomcot::testing {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(ZOOMCOT_FIXTURE_DIR) / rel;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("zoomcot-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline BoxPx random_box(std::mt19937_64& rng, int w, int h) {
  std::uniform_int_distribution<int> xs(0, w - 1);
  std::uniform_int_distribution<int> ys(0, h - 1);
  int x1 = xs(rng), x2 = xs(rng), y1 = ys(rng), y2 = ys(rng);
  if (x1 > x2) std::swap(x1, x2);
  if (y1 > y2) std::swap(y1, y2);
  return {x1, y1, x2 + 1, y2 + 1, w, h};
}

}  // namespace zoomcot::testing
