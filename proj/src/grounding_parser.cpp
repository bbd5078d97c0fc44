// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/grounding_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <regex>
#include <set>

namespace zoomcot {
namespace {

constexpr double kRatioCeiling = 1.5;
constexpr double kPercentCeiling = 150.0;

// Words that end an inline (colon-less) name when walking backwards.
const std::set<std::string, std::less<>> kInlineStopwords = {
    "a",      "an",      "the",     "of",     "to",      "in",      "on",     "at",
    "by",     "for",     "with",    "from",   "into",    "onto",    "is",     "are",
    "was",    "were",    "be",      "been",   "and",     "or",      "but",    "its",
    "it",     "this",    "that",    "these",  "those",   "there",   "here",   "which",
    "who",    "behind",  "front",   "near",   "far",     "left",    "right",  "above",
    "below",  "under",   "over",    "between", "next",   "beside",  "see",    "sees",
    "seen",   "i",       "we",      "shows",  "showing", "located", "appears", "visible",
    "than",   "as",      "like",    "also",   "then",    "so",      "has",    "have",
    "my",     "our",     "their",   "his",    "her",     "some",    "each",   "both"};

constexpr std::size_t kMaxInlineWords = 4;
constexpr std::size_t kMaxColonWords = 6;

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == '-' || c == '\'' || u >= 0x80;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_plain_number(std::string_view tok, bool* percent = nullptr) {
  tok = trim(tok);
  bool pct = false;
  if (!tok.empty() && tok.back() == '%') {
    pct = true;
    tok.remove_suffix(1);
    tok = trim(tok);
  }
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  if (percent) *percent = pct;
  return v;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> words;
  std::string cur;
  for (const char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::string join_words(const std::vector<std::string>& words, std::size_t from) {
  std::string out;
  for (std::size_t i = from; i < words.size(); ++i) {
    if (!out.empty()) out.push_back(' ');
    out += words[i];
  }
  return out;
}

bool ends_with_word(std::string_view haystack, std::string_view needle) {
  if (needle.empty() || haystack.size() < needle.size()) return false;
  if (haystack.substr(haystack.size() - needle.size()) != needle) return false;
  const std::size_t before = haystack.size() - needle.size();
  return before == 0 || !is_word_char(haystack[before - 1]);
}

// Recovers the object name that precedes an annotation starting at `end`.
std::string extract_name(std::string_view text, std::size_t end,
                         const std::vector<std::string>& vocabulary_lower) {
  std::string_view prefix = text.substr(0, end);
  while (!prefix.empty() && (prefix.back() == ' ' || prefix.back() == '\t')) prefix.remove_suffix(1);
  bool colon = false;
  if (!prefix.empty() && prefix.back() == ':') {
    colon = true;
    prefix.remove_suffix(1);
  }
  while (!prefix.empty() &&
         (prefix.back() == ' ' || prefix.back() == '\t' || prefix.back() == '"' ||
          prefix.back() == '\'' || prefix.back() == '*' || prefix.back() == '`')) {
    prefix.remove_suffix(1);
  }

  const std::string lowered = to_lower(prefix);
  for (const auto& name : vocabulary_lower) {
    if (ends_with_word(lowered, name)) return name;
  }

  // Walk back over word characters and single blanks up to a hard delimiter.
  std::size_t start = lowered.size();
  while (start > 0) {
    const char c = lowered[start - 1];
    if (is_word_char(c) || c == ' ' || c == '\t') {
      --start;
    } else {
      break;
    }
  }
  std::vector<std::string> words = split_words(std::string_view(lowered).substr(start));
  // A leading "-" bullet is a delimiter, not part of the name.
  while (!words.empty() && std::all_of(words.front().begin(), words.front().end(),
                                       [](char c) { return c == '-'; })) {
    words.erase(words.begin());
  }
  if (words.empty()) return {};

  if (colon) {
    std::size_t from = words.size() > kMaxColonWords ? words.size() - kMaxColonWords : 0;
    while (from < words.size() && kInlineStopwords.contains(words[from])) ++from;
    return join_words(words, from);
  }
  std::size_t from = words.size();
  while (from > 0 && words.size() - from < kMaxInlineWords &&
         !kInlineStopwords.contains(words[from - 1])) {
    --from;
  }
  return join_words(words, from);
}

}  // namespace

std::string_view to_string(BoxUnit unit) {
  switch (unit) {
    case BoxUnit::ratio: return "ratio";
    case BoxUnit::percent: return "percent";
    case BoxUnit::pixel: return "pixel";
  }
  return "ratio";
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

BoxNormalization normalize_box_units(std::span<const double> raw,
                                     std::optional<FrameDims> frame) {
  BoxNormalization out;
  if (raw.size() != 4) {
    out.error = "expected 4 coordinates, got " + std::to_string(raw.size());
    return out;
  }
  std::array<double, 4> v{raw[0], raw[1], raw[2], raw[3]};
  if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
    out.error = "non-finite coordinate";
    return out;
  }
  const double largest = *std::max_element(v.begin(), v.end());
  if (largest <= kRatioCeiling) {
    out.unit = BoxUnit::ratio;
  } else if (largest <= kPercentCeiling) {
    out.unit = BoxUnit::percent;
    for (double& x : v) x /= 100.0;
  } else {
    out.unit = BoxUnit::pixel;
    if (!frame || frame->width <= 0 || frame->height <= 0) {
      out.error = "pixel coordinates without frame dimensions";
      return out;
    }
    v[0] /= frame->width;
    v[2] /= frame->width;
    v[1] /= frame->height;
    v[3] /= frame->height;
  }
  if (v[0] > v[2]) {
    std::swap(v[0], v[2]);
    out.reordered = true;
  }
  if (v[1] > v[3]) {
    std::swap(v[1], v[3]);
    out.reordered = true;
  }
  for (double& x : v) {
    const double c = std::clamp(x, 0.0, 1.0);
    if (c != x) out.clipped = true;
    x = c;
  }
  const BoxRatio box{v[0], v[1], v[2], v[3]};
  if (!box.valid()) {
    out.error = "degenerate box " + to_string(box);
    return out;
  }
  out.box = box;
  return out;
}

std::optional<double> normalize_depth(std::string_view token) {
  std::string t = to_lower(trim(token));
  while (!t.empty() && (t.front() == '"' || t.front() == '\'')) t.erase(t.begin());
  while (!t.empty() && (t.back() == '"' || t.back() == '\'')) t.pop_back();
  for (const std::string_view prefix : {"depth", "d"}) {
    if (t.rfind(prefix, 0) == 0) {
      std::string_view rest = trim(std::string_view(t).substr(prefix.size()));
      const bool separated = !rest.empty() && (rest.front() == ':' || rest.front() == '=');
      if (separated) rest.remove_prefix(1);
      if (separated || prefix == "depth") {
        t = std::string(trim(rest));
        break;
      }
    }
  }
  if (t == "near") return 0.2;
  if (t == "mid" || t == "middle") return 0.5;
  if (t == "far") return 0.8;
  bool percent = false;
  const auto v = parse_plain_number(t, &percent);
  if (!v) return std::nullopt;
  double d = *v;
  if (percent || (d > 1.0 && d <= 100.0)) d /= 100.0;
  return std::clamp(d, 0.0, 1.0);
}

GroundingParse parse_groundings(std::string_view text, const GroundingParseOptions& options) {
  static const std::regex kAnnotation(
      R"(\(\s*\[([^\[\]()]*)\]\s*(?:[,;]\s*([^()\[\]]*?))?\s*\))");
  static const std::regex kSeparators(R"([,;\s]+)");

  std::vector<std::string> vocabulary;
  for (const auto& v : options.vocabulary) {
    const std::string l = to_lower(trim(v));
    if (!l.empty()) vocabulary.push_back(l);
  }
  std::stable_sort(vocabulary.begin(), vocabulary.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });

  GroundingParse result;
  const std::string owned(text);
  for (auto it = std::sregex_iterator(owned.begin(), owned.end(), kAnnotation);
       it != std::sregex_iterator(); ++it) {
    const std::smatch& m = *it;
    const auto offset = static_cast<std::size_t>(m.position(0));

    std::vector<double> coords;
    bool numeric = true;
    const std::string body = m[1].str();
    for (auto tok = std::sregex_token_iterator(body.begin(), body.end(), kSeparators, -1);
         tok != std::sregex_token_iterator(); ++tok) {
      const std::string piece = tok->str();
      if (piece.empty()) continue;
      const auto v = parse_plain_number(piece);
      if (!v) {
        numeric = false;
        break;
      }
      coords.push_back(*v);
    }
    if (!numeric) {
      result.diagnostics.push_back({offset, "non-numeric box coordinates"});
      continue;
    }
    const BoxNormalization norm = normalize_box_units(coords, options.frame);
    if (!norm.box) {
      result.diagnostics.push_back({offset, norm.error});
      continue;
    }

    std::string name = extract_name(owned, offset, vocabulary);
    if (name.empty()) {
      result.diagnostics.push_back({offset, "annotation without an object name"});
      continue;
    }

    std::optional<double> depth;
    if (m[2].matched && !trim(m[2].str()).empty()) {
      depth = normalize_depth(m[2].str());
      if (!depth) {
        result.diagnostics.push_back({offset, "unrecognized depth '" + m[2].str() + "'"});
      }
    }
    GroundingEntry entry{name, *norm.box, depth};
    result.entries.insert_or_assign(name, std::move(entry));
  }
  return result;
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf.data(), ptr);
}

std::string format_annotation(const BoxRatio& box, std::optional<double> depth, int precision) {
  auto num = [precision](double v) {
    if (precision < 0) return format_number(v);
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                         std::chars_format::fixed, precision);
    return ec == std::errc() ? std::string(buf.data(), ptr) : format_number(v);
  };
  std::string out = "([" + num(box.x1) + ", " + num(box.y1) + ", " + num(box.x2) + ", " +
                    num(box.y2) + "]";
  if (depth) out += ", " + num(*depth);
  out += ")";
  return out;
}

std::string render_groundings(const std::map<std::string, GroundingEntry>& entries) {
  std::string out;
  for (const auto& [name, e] : entries) {
    out += name + ": " + format_annotation(e.bbox_ratio, e.depth01) + "\n";
  }
  return out;
}

}  // namespace zoomcot
