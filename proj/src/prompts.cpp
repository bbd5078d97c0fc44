// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/prompts.hpp"

#include <fstream>
#include <sstream>

namespace zoomcot {
namespace {

struct AssetEntry {
  const char* id;
  const char* text;
};

constexpr AssetEntry kBuiltinAssets[] = {
#include "prompt_assets.inc"
};

int arity_of(std::string_view id) {
  using namespace prompt_id;
  if (id == kFirstRound || id == kLaterRound || id == kFullImageRoi || id == kQa3d ||
      id == kRound3d || id == kFinalJustification) {
    return 1;
  }
  return 0;
}

}  // namespace

const PromptRegistry& PromptRegistry::builtin() {
  static const PromptRegistry registry = [] {
    PromptRegistry r;
    r.version_ = "v1";
    for (const auto& a : kBuiltinAssets) {
      r.templates_.emplace(a.id, PromptTemplate{a.id, a.text, arity_of(a.id)});
    }
    return r;
  }();
  return registry;
}

PromptRegistry PromptRegistry::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw PromptError("prompt directory not found: " + dir.string());
  }
  PromptRegistry r = builtin();
  r.version_ = dir.filename().string();
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (!text.empty() && text.back() == '\n') text.pop_back();
    const std::string id = entry.path().stem().string();
    r.templates_.insert_or_assign(id, PromptTemplate{id, std::move(text), arity_of(id)});
  }
  return r;
}

bool PromptRegistry::contains(std::string_view id) const {
  return templates_.find(id) != templates_.end();
}

const PromptTemplate& PromptRegistry::at(std::string_view id) const {
  const auto it = templates_.find(id);
  if (it == templates_.end()) throw PromptError("unknown prompt template '" + std::string(id) + "'");
  return it->second;
}

std::vector<std::string> PromptRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, t] : templates_) out.push_back(id);
  return out;
}

std::string PromptRegistry::fill(
    std::string_view id, const std::vector<std::pair<std::string, std::string>>& vars) const {
  std::string text = at(id).text;
  std::string context;
  for (const auto& [key, value] : vars) {
    const std::string placeholder = "{" + key + "}";
    std::size_t pos = text.find(placeholder);
    if (pos == std::string::npos) {
      context += key + ": " + value + "\n";
      continue;
    }
    while (pos != std::string::npos) {
      text.replace(pos, placeholder.size(), value);
      pos = text.find(placeholder, pos + value.size());
    }
  }
  if (!context.empty()) {
    context.pop_back();
    text += "\n\n" + context;
  }
  return text;
}

}  // namespace zoomcot
