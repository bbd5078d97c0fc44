// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "zoomcot/generator_client.hpp"
#include "zoomcot/geometry.hpp"
#include "zoomcot/imaging.hpp"
#include "zoomcot/prompts.hpp"

namespace zoomcot {

inline constexpr std::string_view kZoomToolName = "image_zoom_in_tool";
inline constexpr int kVisualCotRounds = 5;
inline constexpr int kProBenchRounds = 6;

struct ToolCall {
  std::string name;
  std::vector<double> bbox;
};

struct Answer {
  std::string text;
};

enum class ViolationKind { mixed, missing_think, no_action, malformed_tool_call, unknown_tool };

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind = ViolationKind::no_action;
  std::string detail;
  /// Content of the first <answer> tag, when there was one.
  std::optional<std::string> recovered_answer;
};

struct Turn {
  std::optional<std::string> think;
  std::variant<ToolCall, Answer, Violation> action;

  bool is_answer() const { return std::holds_alternative<Answer>(action); }
  bool is_tool_call() const { return std::holds_alternative<ToolCall>(action); }
  bool is_violation() const { return std::holds_alternative<Violation>(action); }
};

/// Classifies one assistant message. Never throws: anything other than a
/// <think> followed by exactly one well-formed action becomes a Violation.
Turn parse_turn(std::string_view raw);

struct BoxRejection {
  enum class Reason { count, range, order };
  Reason reason = Reason::count;
  std::string detail;
};

std::string_view to_string(BoxRejection::Reason r);

/// Accepts exactly four finite values in [0,1] with x1 < x2 and y1 < y2.
/// Nothing is repaired.
std::variant<BoxRatio, BoxRejection> validate_bbox(std::span<const double> raw);

enum class EpisodeTermination { answered, budget_exhausted, protocol_failure };

std::string_view to_string(EpisodeTermination t);

struct EpisodeTurn {
  int index = 1;
  std::string raw;
  Turn turn;
  /// Global-frame box of the view the model was looking at.
  BoxPx view_box;
  bool accepted = false;
  std::optional<std::string> rejection;
  /// Global-frame box of the view produced by an accepted zoom.
  std::optional<BoxPx> next_view;
  /// Whether the image sent with the next prompt was resized to the budget.
  bool next_resized = false;
};

struct Episode {
  std::string sample_id;
  std::string image;
  int image_w = 0;
  int image_h = 0;
  int r_max = 0;
  std::vector<EpisodeTurn> turns;
  std::optional<std::string> final_answer;
  BoxPx final_view;
  bool zoomed = false;
  EpisodeTermination termination = EpisodeTermination::budget_exhausted;
  std::string failure;
  bool initial_resized = false;
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const Episode& ep);
Episode episode_from_json(const nlohmann::json& j);

struct EpisodeOptions {
  int r_max = kVisualCotRounds;
  PixelBudget budget;
  DecodeParams decode;
  RetryPolicy retry;
};

/// Applies a validated zoom on `view`: maps the box through the view's origin,
/// crops the root image there, and resizes the crop to the budget. Throws
/// DegenerateCrop when nothing remains after clipping.
ImageView execute_zoom(const ImageView& root, const ImageView& view, const BoxRatio& b,
                       const PixelBudget& budget, bool* resized = nullptr);

/// Runs one bounded tool-calling interaction. Rejected boxes and format
/// violations consume a round and leave the view unchanged; the same image
/// is sent again with the next prompt.
Episode run_episode(const std::string& sample_id, const std::string& image_ref,
                    const ImageView& image, const std::string& question, ChatModel& model,
                    const EpisodeOptions& options = {},
                    const PromptRegistry& prompts = PromptRegistry::builtin());

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExtractedAnswer {
  std::string text;
  /// True when no <answer> tag was found and the raw final text was used.
  bool fallback = false;
};

ExtractedAnswer extract_answer(const Episode& ep);

enum class RoiMode { multi_round, single_step };

/// Multi-round: the origin of the view active when the episode ended, if at
/// least one zoom was accepted. Single-step: the one box given in the first
/// turn. Empty means no usable box.
std::optional<BoxPx> final_roi(const Episode& ep, RoiMode mode = RoiMode::multi_round);

}  // namespace zoomcot
