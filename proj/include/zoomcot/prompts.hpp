// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace zoomcot {

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace prompt_id {
inline constexpr std::string_view kSystemZoom = "system_zoom";
inline constexpr std::string_view kFirstRound = "first_round";
inline constexpr std::string_view kLaterRound = "later_round";
inline constexpr std::string_view kFullImageRoi = "full_image_roi";
inline constexpr std::string_view kQa3d = "qa_3d";
inline constexpr std::string_view kRound3d = "round_3d";
inline constexpr std::string_view kDistill = "distill";
inline constexpr std::string_view kGrounding = "grounding";
inline constexpr std::string_view kGrader = "grader";
inline constexpr std::string_view kFinalJustification = "final_justification";
// Output-format fragments appended to prompts that do not spell one out.
inline constexpr std::string_view kTripletFormat = "triplet_format";
inline constexpr std::string_view kQaFormat = "qa_format";
}  // namespace prompt_id

struct PromptTemplate {
  std::string id;
  std::string text;
  int image_arity = 0;
};

/// Versioned prompt texts. The built-in set is compiled from
/// assets/prompts/v1; load_dir() reads an override directory of <id>.txt files.
class PromptRegistry {
 public:
  static const PromptRegistry& builtin();
  static PromptRegistry load_dir(const std::filesystem::path& dir);

  std::string_view version() const noexcept { return version_; }
  bool contains(std::string_view id) const;
  const PromptTemplate& at(std::string_view id) const;
  std::vector<std::string> ids() const;

  /// Substitutes `{key}` placeholders present in the template; remaining
  /// pairs are appended as a "key: value" context block in the given order.
  std::string fill(std::string_view id,
                   const std::vector<std::pair<std::string, std::string>>& vars) const;

 private:
  std::string version_;
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

}  // namespace zoomcot
