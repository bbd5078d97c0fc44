// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "zoomcot/geometry.hpp"
#include "zoomcot/scene3d.hpp"

namespace zoomcot {

inline constexpr std::string_view kSampleSchema = "visreason-sample/1";
inline constexpr std::string_view kTraceSchema = "visreason-trace/1";
inline constexpr std::string_view kEpisodeSchema = "visreason-episode/1";
inline constexpr std::string_view kSceneSchema = "visreason-scene/1";
inline constexpr std::string_view kManifestSchema = "visreason-manifest/1";

class RecordError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws RecordError when `tag` names a different schema or a newer major
/// version than `expected`. An absent tag is accepted.
void check_schema(const nlohmann::json& record, std::string_view expected);

struct SampleRecord {
  std::string id;
  std::string image;
  std::string question;
  std::string short_answer;
  std::string long_answer;
  std::string source;
  BoxPx gt_box;
  /// Convention the box had on disk before normalization: "xyxy" or "xywh".
  std::string gt_convention = "xyxy";
  bool gt_repaired = false;
  nlohmann::json extra = nlohmann::json::object();
};

struct CoTRound {
  int round_index = 1;
  std::string description;
  BoxPx roi;
  std::string rationale;
  /// The model's box in the coordinates of the view it was shown.
  std::optional<BoxRatio> proposal;
  bool carried_forward = false;
  bool repaired = false;
  /// Local object context given to the model in depth-aware rounds.
  std::vector<SceneObject> objects;
};

enum class TraceTermination { converged, large_object, budget_exhausted };

std::string_view to_string(TraceTermination t);

struct TraceRecord {
  std::string id;
  std::string image;
  int image_w = 0;
  int image_h = 0;
  std::string question;
  std::string short_answer;
  std::string long_answer;
  std::string source;
  BoxPx gt_box;
  std::vector<CoTRound> rounds;
  std::string final_justification;
  std::optional<CoTRound> distilled;
  std::optional<std::vector<SceneObject>> scene;
  TraceTermination termination = TraceTermination::converged;
  int r_max = 0;
  double area_ratio_n = 0.0;
  std::vector<std::string> quality_flags;
  std::vector<std::string> repair_log;
  nlohmann::json extra = nlohmann::json::object();

  bool has_flag(std::string_view f) const;
};

nlohmann::json box_to_json(const BoxPx& b);
nlohmann::json box_to_json(const BoxRatio& b);
BoxPx box_px_from_json(const nlohmann::json& j, int frame_w, int frame_h);
BoxRatio box_ratio_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SampleRecord& s);
SampleRecord sample_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SceneObject& o);
SceneObject scene_object_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CoTRound& r);
CoTRound round_from_json(const nlohmann::json& j, int frame_w, int frame_h);

nlohmann::json to_json(const TraceRecord& t);
TraceRecord trace_from_json(const nlohmann::json& j);

}  // namespace zoomcot
