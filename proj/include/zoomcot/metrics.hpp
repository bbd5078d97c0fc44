// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "zoomcot/geometry.hpp"
#include "zoomcot/grounding_parser.hpp"
#include "zoomcot/records.hpp"

namespace zoomcot {

struct RoIPrediction {
  std::string id;
  std::optional<BoxPx> pred;  // empty: no usable box, scored as IoU 0
  BoxPx gt;
};

struct RoIReport {
  std::vector<std::string> ids;
  std::vector<double> ious;
  std::vector<double> thresholds;
  std::vector<double> accuracy;  // parallel to thresholds
  std::size_t missing = 0;

  nlohmann::json to_json() const;
};

/// accuracy[k] = fraction of samples with IoU strictly greater than
/// thresholds[k].
RoIReport roi_accuracy(const std::vector<RoIPrediction>& preds,
                       const std::vector<double>& thresholds = {0.5, 0.75});

struct GroundingMatch {
  std::vector<std::string> matched;
  std::vector<std::string> missed;
};

GroundingMatch match_groundings(const std::map<std::string, GroundingEntry>& pred,
                                const std::map<std::string, GroundingEntry>& gt);

std::optional<double> depth_abs_err(std::optional<double> pred, std::optional<double> gt);

struct GroundingSample {
  std::string id;
  std::map<std::string, GroundingEntry> pred;
  std::map<std::string, GroundingEntry> gt;
};

struct GroundingCounts {
  std::string id;
  std::size_t gt = 0;
  std::size_t matched = 0;
  std::size_t missed = 0;
};

struct GroundingReport {
  std::optional<double> grounded_ratio;
  std::optional<double> mean_iou;
  std::optional<double> mean_depth_err;
  std::size_t total_gt = 0;
  std::size_t total_matched = 0;
  std::size_t total_missed = 0;
  std::size_t depth_pairs = 0;
  std::vector<GroundingCounts> per_sample;

  nlohmann::json to_json() const;
};

/// Pooled over all samples: grounded_ratio = 1 - sum(missed) / sum(|G|);
/// box IoU and depth error are averaged over every matched object.
GroundingReport grounding_metrics(const std::vector<GroundingSample>& samples);

class JudgeParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JudgeScore {
  double score = 0.0;
  /// The reply held more than the bare "score: <x>" line.
  bool lenient = false;
  bool clamped = false;
};

/// Takes the last "score: <number>" in the reply and clamps it to [0,1].
JudgeScore parse_judge_score(std::string_view raw);

/// Unweighted mean of per-dataset means. Throws std::invalid_argument when
/// there are no datasets or a dataset is empty.
double macro_average(const std::vector<std::vector<double>>& per_dataset);
double macro_average(const std::map<std::string, std::vector<double>>& per_dataset);

enum class LengthUnit { chars, tokens };

struct StatsReport {
  std::size_t count = 0;
  /// Round count -> number of traces. Keys 1..4; longer traces land in 4.
  std::map<int, std::size_t> round_histogram;
  double mean_gt_area_fraction = 0.0;
  double mean_roi_area_fraction = 0.0;
  LengthUnit length_unit = LengthUnit::chars;
  /// Index k holds the mean rationale length of round k+1.
  std::vector<double> mean_length_per_round;
  std::vector<std::size_t> rounds_at_index;

  nlohmann::json to_json() const;
};

inline constexpr int kHistogramMaxRounds = 4;

StatsReport dataset_stats(const std::vector<TraceRecord>& traces,
                          LengthUnit unit = LengthUnit::chars);

/// Case-folds, collapses whitespace and strips surrounding punctuation.
std::string normalize_answer(std::string_view s);

/// Text table with one row per metric and one column per model.
std::string render_roi_table(const std::vector<std::pair<std::string, RoIReport>>& models);
std::string render_grounding_table(
    const std::vector<std::pair<std::string, GroundingReport>>& models);
std::string render_stats_table(const StatsReport& stats);

}  // namespace zoomcot
