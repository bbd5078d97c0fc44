// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zoomcot/geometry.hpp"

namespace zoomcot {

struct FrameDims {
  int width = 0;
  int height = 0;
};

enum class BoxUnit { ratio, percent, pixel };

std::string_view to_string(BoxUnit unit);

/// Result of unit inference on a raw 4-vector. `box` is empty when the values
/// cannot be interpreted; `error` then says why.
struct BoxNormalization {
  std::optional<BoxRatio> box;
  BoxUnit unit = BoxUnit::ratio;
  bool reordered = false;
  bool clipped = false;
  std::string error;

  bool repaired() const noexcept { return reordered || clipped; }
};

/// Largest coordinate <= 1.5: ratio. In (1.5, 150]: percent. Above 150:
/// pixels, which needs frame dimensions. Output is clipped to [0,1] and
/// reordered so x1 < x2, y1 < y2.
BoxNormalization normalize_box_units(std::span<const double> raw,
                                     std::optional<FrameDims> frame = std::nullopt);

/// Numeric tokens are clamped to [0,1] (values in (1,100] read as percent);
/// near/mid/middle/far map to 0.2/0.5/0.8. Anything else is absent.
std::optional<double> normalize_depth(std::string_view token);

struct GroundingEntry {
  std::string name;
  BoxRatio bbox_ratio;
  std::optional<double> depth01;

  friend bool operator==(const GroundingEntry&, const GroundingEntry&) = default;
};

struct ParseDiagnostic {
  std::size_t offset = 0;
  std::string message;
};

struct GroundingParseOptions {
  std::optional<FrameDims> frame;
  /// Known object names. When an annotation follows one of them, that name
  /// is used verbatim instead of the word heuristic.
  std::vector<std::string> vocabulary;
};

struct GroundingParse {
  std::map<std::string, GroundingEntry> entries;
  std::vector<ParseDiagnostic> diagnostics;
};

/// Extracts every `name: ([x1, y1, x2, y2], depth)` annotation. The colon and
/// the depth are optional; coordinates may be separated by commas, semicolons
/// or whitespace. Names are lowercased; the last mention of a name wins.
GroundingParse parse_groundings(std::string_view text, const GroundingParseOptions& options = {});

/// Shortest decimal that reads back to the same double.
std::string format_number(double v);
/// `([x1, y1, x2, y2], depth)`, or `([x1, y1, x2, y2])` without a depth.
/// precision < 0 prints shortest round-trip values.
std::string format_annotation(const BoxRatio& box, std::optional<double> depth,
                              int precision = -1);
/// One `name: ([...], depth)` line per entry.
std::string render_groundings(const std::map<std::string, GroundingEntry>& entries);

std::string to_lower(std::string_view s);

}  // namespace zoomcot
