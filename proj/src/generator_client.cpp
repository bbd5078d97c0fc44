// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/generator_client.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "text_util.hpp"

namespace zoomcot {
namespace {

struct SectionSpec {
  std::string key;
  std::vector<std::string> labels;
};

struct Section {
  std::size_t header = std::string::npos;  // start of the header line
  std::size_t begin = 0;
  std::size_t end = 0;
};

bool at_line_start(const std::string& s, std::size_t pos) {
  while (pos > 0) {
    const char c = s[pos - 1];
    if (c == '\n') return true;
    if (c != ' ' && c != '\t' && c != '#' && c != '*' && c != '-' && c != '>') return false;
    --pos;
  }
  return true;
}

// Finds each labeled section. A header is a label at the start of a line,
// optionally wrapped in markdown emphasis, followed by a colon.
std::map<std::string, Section> find_sections(std::string_view raw,
                                             const std::vector<SectionSpec>& specs) {
  const std::string lower = detail::lower_copy(raw);
  std::map<std::string, Section> found;
  for (const auto& spec : specs) {
    for (const auto& label : spec.labels) {
      std::size_t pos = 0;
      while ((pos = lower.find(label, pos)) != std::string::npos) {
        std::size_t after = pos + label.size();
        while (after < lower.size() && (lower[after] == '*' || lower[after] == ' ')) ++after;
        if (after < lower.size() && lower[after] == ':' && at_line_start(lower, pos)) {
          ++after;
          while (after < lower.size() && lower[after] == '*') ++after;
          std::size_t line = pos;
          while (line > 0 && lower[line - 1] != '\n') --line;
          auto it = found.find(spec.key);
          if (it == found.end() || line < it->second.header) {
            found[spec.key] = Section{line, after, raw.size()};
          }
          break;
        }
        pos += label.size();
      }
    }
  }
  for (auto& [key, sec] : found) {
    for (const auto& [other_key, other] : found) {
      if (other.header > sec.header && other.header < sec.end) sec.end = other.header;
    }
  }
  return found;
}

std::string section_text(std::string_view raw, const Section& s) {
  std::string_view v = detail::trim_view(raw.substr(s.begin, s.end - s.begin));
  while (!v.empty() && (v.back() == '*' || v.back() == '#')) v.remove_suffix(1);
  return detail::trim_copy(v);
}

std::vector<double> split_numbers(std::string_view body, bool* ok) {
  std::vector<double> out;
  *ok = true;
  std::size_t i = 0;
  while (i < body.size()) {
    while (i < body.size() && (detail::is_space(body[i]) || body[i] == ',' || body[i] == ';')) ++i;
    if (i >= body.size()) break;
    std::size_t j = i;
    while (j < body.size() && !detail::is_space(body[j]) && body[j] != ',' && body[j] != ';') ++j;
    std::string_view tok = body.substr(i, j - i);
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
      *ok = false;
      return out;
    }
    out.push_back(v);
    i = j;
  }
  return out;
}

// Parses the first "[...]" inside the section as a box.
BoxNormalization parse_section_box(std::string_view raw, const Section& s,
                                   std::optional<FrameDims> frame) {
  const std::string_view body = raw.substr(s.begin, s.end - s.begin);
  const auto open = body.find('[');
  const auto close = open == std::string_view::npos ? open : body.find(']', open);
  if (open == std::string_view::npos || close == std::string_view::npos) {
    throw ParseError("box is not bracketed", s.begin, s.end);
  }
  const std::size_t b = s.begin + open;
  const std::size_t e = s.begin + close + 1;
  bool ok = false;
  const auto values = split_numbers(body.substr(open + 1, close - open - 1), &ok);
  if (!ok) throw ParseError("box contains non-numeric content", b, e);
  auto norm = normalize_box_units(values, frame);
  if (!norm.box) throw ParseError("unusable box: " + norm.error, b, e);
  return norm;
}

const Section& require(const std::map<std::string, Section>& found, const std::string& key,
                       std::string_view raw) {
  const auto it = found.find(key);
  if (it == found.end()) throw ParseError("missing section '" + key + "'", 0, raw.size());
  return it->second;
}

std::string render_box(const BoxRatio& b) {
  return "[" + format_number(b.x1) + ", " + format_number(b.y1) + ", " + format_number(b.x2) +
         ", " + format_number(b.y2) + "]";
}

}  // namespace

void GenRequest::validate(const PromptRegistry& registry) const {
  const auto& t = registry.at(template_id);
  if (static_cast<int>(images.size()) != t.image_arity) {
    throw PromptError("template '" + template_id + "' takes " + std::to_string(t.image_arity) +
                      " image(s), request carries " + std::to_string(images.size()));
  }
}

std::string_view to_string(TransportErrorKind kind) {
  switch (kind) {
    case TransportErrorKind::timeout: return "timeout";
    case TransportErrorKind::transport: return "transport";
    case TransportErrorKind::status: return "status";
    case TransportErrorKind::credential_missing: return "credential_missing";
    case TransportErrorKind::bad_response: return "bad_response";
  }
  return "transport";
}

TransportError::TransportError(TransportErrorKind kind, const std::string& what, int status)
    : std::runtime_error(std::string(to_string(kind)) + (status > 0 ? " " + std::to_string(status) : "") +
                         ": " + what),
      kind_(kind),
      status_(status) {}

bool TransportError::retryable() const noexcept {
  switch (kind_) {
    case TransportErrorKind::timeout:
    case TransportErrorKind::transport: return true;
    case TransportErrorKind::status: return status_ == 429 || status_ >= 500;
    default: return false;
  }
}

TripletResponse parse_triplet(std::string_view raw, std::optional<FrameDims> frame) {
  static const std::vector<SectionSpec> specs = {
      {"description", {"scene description", "description"}},
      {"aoi", {"area of interest", "aoi"}},
      {"reasoning", {"reasoning"}},
  };
  const auto found = find_sections(raw, specs);
  const auto& desc = require(found, "description", raw);
  const auto& aoi = require(found, "aoi", raw);
  const auto& reason = require(found, "reasoning", raw);
  const auto norm = parse_section_box(raw, aoi, frame);
  TripletResponse t;
  t.description = section_text(raw, desc);
  t.reasoning = section_text(raw, reason);
  t.aoi = *norm.box;
  t.repaired = norm.repaired() || norm.unit != BoxUnit::ratio;
  t.unit = norm.unit;
  return t;
}

std::string render_triplet(const TripletResponse& t) {
  return "Scene Description:\n" + t.description + "\n\nArea of Interest:\n" + render_box(t.aoi) +
         "\n\nReasoning:\n" + t.reasoning;
}

QAResponse parse_qa(std::string_view raw, std::optional<FrameDims> frame) {
  static const std::vector<SectionSpec> specs = {
      {"question", {"question"}},
      {"short", {"short answer"}},
      {"long", {"long answer"}},
      {"box", {"target box", "gt box", "bounding box"}},
  };
  const auto found = find_sections(raw, specs);
  const auto& q = require(found, "question", raw);
  const auto& s = require(found, "short", raw);
  const auto& l = require(found, "long", raw);
  const auto& b = require(found, "box", raw);
  const auto norm = parse_section_box(raw, b, frame);
  QAResponse qa;
  qa.question = section_text(raw, q);
  qa.short_answer = section_text(raw, s);
  qa.long_answer = section_text(raw, l);
  for (const auto* f : {&qa.question, &qa.short_answer, &qa.long_answer}) {
    if (f->empty()) throw ParseError("empty QA field", 0, raw.size());
  }
  qa.target_box = *norm.box;
  qa.repaired = norm.repaired() || norm.unit != BoxUnit::ratio;
  qa.unit = norm.unit;
  return qa;
}

std::string render_qa(const QAResponse& qa) {
  return "Question:\n" + qa.question + "\n\nShort Answer:\n" + qa.short_answer +
         "\n\nLong Answer:\n" + qa.long_answer + "\n\nTarget Box:\n" + render_box(qa.target_box);
}

ScriptedGenerator::ScriptedGenerator(std::vector<std::string> script) : script_(std::move(script)) {
  if (script_.empty()) throw std::invalid_argument("ScriptedGenerator: empty script");
}

std::string ScriptedGenerator::call(const GenRequest& req) {
  const std::size_t i = index_.fetch_add(1);
  {
    std::lock_guard lock(mu_);
    requests_.push_back(req);
  }
  return script_[std::min(i, script_.size() - 1)];
}

std::vector<GenRequest> ScriptedGenerator::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::unique_ptr<GeneratorClient> scripted_oracle(const std::vector<TripletResponse>& script) {
  std::vector<std::string> raw;
  raw.reserve(script.size());
  for (const auto& t : script) raw.push_back(render_triplet(t));
  return std::make_unique<ScriptedGenerator>(std::move(raw));
}

ScriptedChatModel::ScriptedChatModel(std::vector<std::string> turns) : turns_(std::move(turns)) {
  if (turns_.empty()) throw std::invalid_argument("ScriptedChatModel: empty script");
}

std::string ScriptedChatModel::complete(const std::vector<ChatMessage>& messages,
                                        const DecodeParams&) {
  seen_.push_back(messages);
  return turns_[std::min(index_++, turns_.size() - 1)];
}

}  // namespace zoomcot
