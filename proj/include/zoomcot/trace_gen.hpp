// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "zoomcot/generator_client.hpp"
#include "zoomcot/imaging.hpp"
#include "zoomcot/prompts.hpp"
#include "zoomcot/records.hpp"
#include "zoomcot/scene3d.hpp"

namespace zoomcot {

struct GenPolicy {
  int r_max = 3;
  double area_ratio_n = 2.0;
  double tau_large = 0.30;
  RetryPolicy retry;
  DecodeParams decode;

  static GenPolicy depth_aware() {
    GenPolicy p;
    p.r_max = 4;
    return p;
  }
  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

class TraceError : public std::runtime_error {
 public:
  TraceError(const std::string& what, TraceRecord partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const TraceRecord& partial() const noexcept { return partial_; }

 private:
  TraceRecord partial_;
};

class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DistillError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace quality_flag {
inline constexpr std::string_view kJustificationFailed = "final_justification_failed";
inline constexpr std::string_view kCarriedForward = "round_carried_forward";
inline constexpr std::string_view kBudgetExhausted = "not_terminated";
inline constexpr std::string_view kQaGenerated = "qa_generated";
inline constexpr std::string_view kEmptyObjectContext = "empty_object_context";
}  // namespace quality_flag

/// Runs the 2D loop: crop, ask for a triplet, map the box to the global frame,
/// expand it to cover the ground truth, and stop once area(roi) <= N * area(gt)
/// or after r_max rounds. Targets at least tau_large of the image get a single
/// round on the full image.
TraceRecord generate_trace_2d(const SampleRecord& sample, const ImageView& image,
                              const GenPolicy& policy, GeneratorClient& gen,
                              const PromptRegistry& prompts = PromptRegistry::builtin());

/// Depth-aware variant. Each round's prompt lists the scene objects visible in
/// the previous roi with crop-local boxes and ranks. When the sample has no
/// question, a QA pair and target box are requested first.
TraceRecord generate_trace_3d(const SampleRecord& sample, const ImageView& image,
                              const std::vector<SceneObject>& scene, const GenPolicy& policy,
                              GeneratorClient& gen,
                              const PromptRegistry& prompts = PromptRegistry::builtin());

/// Returns the first phrase in `text` that refers to intermediate zooms,
/// crops or rounds.
std::optional<std::string> find_forbidden_phrase(std::string_view text);

/// Compresses a trace into one round. A single-round trace passes through.
/// Otherwise the model's text is used but the roi is always the final round's.
/// Text that mentions crops or rounds is rejected and asked for once more.
CoTRound distill_single_round(const TraceRecord& t, GeneratorClient& gen,
                              const RetryPolicy& retry = {},
                              const PromptRegistry& prompts = PromptRegistry::builtin());

struct GroundedObject {
  std::string name;
  BoxRatio box;
  std::optional<double> depth;
};

/// Ratio boxes and depths for annotation. Categories repeated in the scene
/// keep only their nearest instance.
std::vector<GroundedObject> grounded_objects(const std::vector<SceneObject>& scene);

/// Inserts " ([x1, y1, x2, y2], depth)" after every whole-word,
/// case-insensitive mention of an object name. Nothing else in the text
/// changes. Mentions that already carry an annotation are left alone.
std::string augment_grounding(std::string_view text, const std::vector<GroundedObject>& objects,
                              int precision = -1);

/// Clips every roi to the frame, re-covers the ground truth, and forces each
/// roi inside its predecessor. Each change is appended to repair_log.
TraceRecord consistency_fix(TraceRecord t);

}  // namespace zoomcot
