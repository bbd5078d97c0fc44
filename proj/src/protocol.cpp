// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/protocol.hpp"

#include <cmath>
#include <regex>
#include <set>

#include <spdlog/spdlog.h>

#include "text_util.hpp"
#include "zoomcot/grounding_parser.hpp"
#include "zoomcot/records.hpp"

namespace zoomcot {
namespace {

using nlohmann::json;

struct TagMatch {
  std::string body;
  std::size_t pos = 0;
};

std::vector<TagMatch> find_tags(std::string_view raw, std::string_view tag) {
  const std::regex re("<" + std::string(tag) + R"(\s*>([\s\S]*?)</\s*)" + std::string(tag) +
                          R"(\s*>)",
                      std::regex::icase | std::regex::ECMAScript);
  std::vector<TagMatch> out;
  for (std::cregex_iterator it(raw.data(), raw.data() + raw.size(), re), end; it != end; ++it) {
    out.push_back({(*it)[1].str(), static_cast<std::size_t>(it->position(0))});
  }
  return out;
}

Violation violation(ViolationKind kind, std::string detail,
                    std::optional<std::string> recovered = std::nullopt) {
  return Violation{kind, std::move(detail), std::move(recovered)};
}

// Reads {"name": ..., "arguments": {"bbox_2d": [...]}}. Arguments may also
// arrive as a JSON-encoded string.
std::variant<ToolCall, Violation> parse_tool_call(const std::string& body) {
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    return violation(ViolationKind::malformed_tool_call, "tool call is not a JSON object");
  }
  if (!doc.contains("name") || !doc["name"].is_string()) {
    return violation(ViolationKind::malformed_tool_call, "tool call has no name");
  }
  ToolCall call;
  call.name = doc["name"].get<std::string>();
  if (call.name != kZoomToolName) {
    return violation(ViolationKind::unknown_tool, "unknown tool '" + call.name + "'");
  }
  json args = doc.value("arguments", json());
  if (args.is_string()) args = json::parse(args.get<std::string>(), nullptr, false);
  if (!args.is_object() || !args.contains("bbox_2d") || !args["bbox_2d"].is_array()) {
    return violation(ViolationKind::malformed_tool_call, "arguments lack a bbox_2d array");
  }
  for (const auto& v : args["bbox_2d"]) {
    if (!v.is_number()) {
      return violation(ViolationKind::malformed_tool_call, "bbox_2d has a non-numeric entry");
    }
    call.bbox.push_back(v.get<double>());
  }
  return call;
}

json turn_to_json(const EpisodeTurn& t) {
  json j = {{"turn", t.index},
            {"raw", t.raw},
            {"view_box", box_to_json(t.view_box)},
            {"accepted", t.accepted}};
  if (t.turn.think) j["think"] = *t.turn.think;
  std::visit(
      [&](const auto& a) {
        using A = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<A, ToolCall>) {
          j["action"] = "tool_call";
          j["tool"] = a.name;
          j["proposal"] = a.bbox;
        } else if constexpr (std::is_same_v<A, Answer>) {
          j["action"] = "answer";
          j["answer"] = a.text;
        } else {
          j["action"] = "violation";
          j["violation"] = to_string(a.kind);
          j["violation_detail"] = a.detail;
          if (a.recovered_answer) j["answer"] = *a.recovered_answer;
        }
      },
      t.turn.action);
  if (t.rejection) j["rejection"] = *t.rejection;
  if (t.next_view) {
    j["next_view"] = box_to_json(*t.next_view);
    j["next_resized"] = t.next_resized;
  }
  return j;
}

std::optional<BoxRatio> first_bracketed_box(std::string_view raw, int w, int h) {
  static const std::regex kBracket(R"(\[([^\[\]]*)\])");
  static const std::regex kSep(R"([,;\s]+)");
  for (std::cregex_iterator it(raw.data(), raw.data() + raw.size(), kBracket), end; it != end;
       ++it) {
    const std::string body = detail::trim_copy((*it)[1].str());
    std::vector<double> values;
    bool ok = !body.empty();
    for (std::sregex_token_iterator tok(body.begin(), body.end(), kSep, -1), te; ok && tok != te;
         ++tok) {
      const std::string s = tok->str();
      if (s.empty()) continue;
      char* endp = nullptr;
      const double v = std::strtod(s.c_str(), &endp);
      if (endp != s.c_str() + s.size() || !std::isfinite(v)) ok = false;
      values.push_back(v);
    }
    if (!ok || values.size() != 4) continue;
    const auto norm = normalize_box_units(values, FrameDims{w, h});
    if (norm.box) return norm.box;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::mixed: return "mixed";
    case ViolationKind::missing_think: return "missing_think";
    case ViolationKind::no_action: return "no_action";
    case ViolationKind::malformed_tool_call: return "malformed_tool_call";
    case ViolationKind::unknown_tool: return "unknown_tool";
  }
  return "no_action";
}

std::string_view to_string(BoxRejection::Reason r) {
  switch (r) {
    case BoxRejection::Reason::count: return "count";
    case BoxRejection::Reason::range: return "range";
    case BoxRejection::Reason::order: return "order";
  }
  return "count";
}

std::string_view to_string(EpisodeTermination t) {
  switch (t) {
    case EpisodeTermination::answered: return "answered";
    case EpisodeTermination::budget_exhausted: return "budget_exhausted";
    case EpisodeTermination::protocol_failure: return "protocol_failure";
  }
  return "protocol_failure";
}

Turn parse_turn(std::string_view raw) {
  const auto thinks = find_tags(raw, "think");
  const auto answers = find_tags(raw, "answer");
  const auto calls = find_tags(raw, "tool_call");

  Turn turn;
  if (!thinks.empty()) turn.think = detail::trim_copy(thinks.front().body);
  std::optional<std::string> answer;
  if (!answers.empty()) answer = detail::trim_copy(answers.front().body);

  if (!answers.empty() && !calls.empty()) {
    turn.action = violation(ViolationKind::mixed, "answer and tool_call in one turn", answer);
  } else if (answers.size() > 1) {
    turn.action = violation(ViolationKind::mixed, "more than one answer", answer);
  } else if (calls.size() > 1) {
    turn.action = violation(ViolationKind::mixed, "more than one tool_call");
  } else if (answers.empty() && calls.empty()) {
    turn.action = violation(ViolationKind::no_action, "neither answer nor tool_call");
  } else if (!turn.think) {
    turn.action = violation(ViolationKind::missing_think, "no <think> segment", answer);
  } else if (answer) {
    turn.action = Answer{*answer};
  } else {
    auto parsed = parse_tool_call(detail::trim_copy(calls.front().body));
    if (auto* v = std::get_if<Violation>(&parsed)) {
      turn.action = std::move(*v);
    } else {
      turn.action = std::get<ToolCall>(std::move(parsed));
    }
  }
  return turn;
}

std::variant<BoxRatio, BoxRejection> validate_bbox(std::span<const double> raw) {
  using R = BoxRejection::Reason;
  if (raw.size() != 4) {
    return BoxRejection{R::count, "expected 4 values, got " + std::to_string(raw.size())};
  }
  for (const double v : raw) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      return BoxRejection{R::range, "coordinate " + format_number(v) + " outside [0,1]"};
    }
  }
  if (!(raw[0] < raw[2]) || !(raw[1] < raw[3])) {
    return BoxRejection{R::order, "requires x1 < x2 and y1 < y2"};
  }
  return BoxRatio{raw[0], raw[1], raw[2], raw[3]};
}

ImageView execute_zoom(const ImageView& root, const ImageView& view, const BoxRatio& b,
                       const PixelBudget& budget, bool* resized) {
  const BoxPx global = clip_to_frame(local_to_global(b, view.origin()));
  const ImageView cropped = crop(root, global);
  const ImageView out = resize_to_budget(cropped, budget);
  if (resized) *resized = !out.same_pixels(cropped);
  return out;
}

Episode run_episode(const std::string& sample_id, const std::string& image_ref,
                    const ImageView& image, const std::string& question, ChatModel& model,
                    const EpisodeOptions& options, const PromptRegistry& prompts) {
  if (options.r_max < 1) throw std::invalid_argument("r_max must be >= 1");
  const ImageView root = ImageView::root(image.pixels());

  Episode ep;
  ep.sample_id = sample_id;
  ep.image = image_ref;
  ep.image_w = root.width();
  ep.image_h = root.height();
  ep.r_max = options.r_max;

  BoxPx view_box = root.origin();
  ImageView sent = resize_to_budget(root, options.budget);
  ep.initial_resized = !sent.same_pixels(root);

  std::vector<ChatMessage> messages;
  messages.push_back({"system", prompts.at(prompt_id::kSystemZoom).text, {}});
  messages.push_back(
      {"user", prompts.fill(prompt_id::kFirstRound, {{"Question", question}}), {sent}});

  ep.termination = EpisodeTermination::budget_exhausted;
  for (int round = 1; round <= options.r_max; ++round) {
    std::string raw;
    const int max_attempts = 1 + std::max(0, options.retry.retries);
    bool failed = false;
    for (int attempt = 1;; ++attempt) {
      try {
        raw = model.complete(messages, options.decode);
        break;
      } catch (const TransportError& e) {
        if (e.retryable() && attempt < max_attempts) continue;
        ep.failure = e.what();
        failed = true;
        break;
      }
    }
    if (failed) {
      spdlog::warn("episode {}: {}", sample_id, ep.failure);
      ep.termination = EpisodeTermination::protocol_failure;
      break;
    }

    EpisodeTurn et;
    et.index = round;
    et.raw = raw;
    et.turn = parse_turn(raw);
    et.view_box = view_box;
    messages.push_back({"assistant", raw, {}});

    std::string note;
    if (const auto* ans = std::get_if<Answer>(&et.turn.action)) {
      ep.final_answer = ans->text;
      ep.termination = EpisodeTermination::answered;
      ep.turns.push_back(std::move(et));
      break;
    }
    if (const auto* call = std::get_if<ToolCall>(&et.turn.action)) {
      const auto checked = validate_bbox(call->bbox);
      if (const auto* box = std::get_if<BoxRatio>(&checked)) {
        try {
          bool resized = false;
          const ImageView next = execute_zoom(root, sent, *box, options.budget, &resized);
          sent = next;
          view_box = next.origin();
          et.accepted = true;
          et.next_view = view_box;
          et.next_resized = resized;
          ep.zoomed = true;
        } catch (const DegenerateCrop& e) {
          et.rejection = std::string("degenerate: ") + e.what();
        }
      } else {
        const auto& rej = std::get<BoxRejection>(checked);
        et.rejection = std::string(to_string(rej.reason)) + ": " + rej.detail;
      }
      if (et.rejection) note = "The zoom request was rejected (" + *et.rejection + "); the view is unchanged.";
    } else {
      const auto& v = std::get<Violation>(et.turn.action);
      et.rejection = std::string(to_string(v.kind)) + ": " + v.detail;
      note = "The previous reply broke the formatting rules (" + *et.rejection + "); the view is unchanged.";
    }
    ep.turns.push_back(std::move(et));

    if (round < options.r_max) {
      std::vector<std::pair<std::string, std::string>> vars;
      if (!note.empty()) vars.emplace_back("Note", note);
      messages.push_back({"user", prompts.fill(prompt_id::kLaterRound, vars), {sent}});
    }
  }
  ep.final_view = view_box;
  return ep;
}

ExtractedAnswer extract_answer(const Episode& ep) {
  if (ep.turns.empty()) throw ExtractionError("episode " + ep.sample_id + " has no turns");
  const EpisodeTurn& last = ep.turns.back();
  if (const auto* a = std::get_if<Answer>(&last.turn.action)) return {a->text, false};
  if (const auto* v = std::get_if<Violation>(&last.turn.action)) {
    if (v->recovered_answer) return {*v->recovered_answer, false};
  }
  return {detail::trim_copy(last.raw), true};
}

std::optional<BoxPx> final_roi(const Episode& ep, RoiMode mode) {
  if (mode == RoiMode::multi_round) {
    if (!ep.zoomed) return std::nullopt;
    return ep.final_view;
  }
  if (ep.turns.empty()) return std::nullopt;
  const EpisodeTurn& first = ep.turns.front();
  const BoxPx frame = BoxPx::full_frame(ep.image_w, ep.image_h);
  if (const auto* call = std::get_if<ToolCall>(&first.turn.action)) {
    const auto checked = validate_bbox(call->bbox);
    if (const auto* b = std::get_if<BoxRatio>(&checked)) return local_to_global(*b, frame);
    return std::nullopt;
  }
  if (const auto b = first_bracketed_box(first.raw, ep.image_w, ep.image_h)) {
    return ratio_to_px(*b, ep.image_w, ep.image_h);
  }
  return std::nullopt;
}

json to_json(const Episode& ep) {
  json turns = json::array();
  for (const auto& t : ep.turns) turns.push_back(turn_to_json(t));
  json j = {{"schema", kEpisodeSchema},
            {"sample_id", ep.sample_id},
            {"image", ep.image},
            {"image_w", ep.image_w},
            {"image_h", ep.image_h},
            {"r_max", ep.r_max},
            {"turns", std::move(turns)},
            {"final_view", box_to_json(ep.final_view)},
            {"zoomed", ep.zoomed},
            {"termination", to_string(ep.termination)},
            {"initial_resized", ep.initial_resized}};
  j["final_answer"] = ep.final_answer ? json(*ep.final_answer) : json(nullptr);
  if (!ep.failure.empty()) j["failure"] = ep.failure;
  for (auto it = ep.extra.begin(); it != ep.extra.end(); ++it) {
    if (!j.contains(it.key())) j[it.key()] = it.value();
  }
  return j;
}

Episode episode_from_json(const json& j) {
  static const std::set<std::string, std::less<>> known = {
      "schema", "sample_id",  "image",       "image_w", "image_h", "r_max",          "turns",
      "final_view", "zoomed", "termination", "initial_resized",   "final_answer", "failure"};
  check_schema(j, kEpisodeSchema);
  Episode ep;
  ep.sample_id = j.at("sample_id").get<std::string>();
  ep.image = j.value("image", "");
  ep.image_w = j.at("image_w").get<int>();
  ep.image_h = j.at("image_h").get<int>();
  ep.r_max = j.value("r_max", 0);
  for (const auto& tj : j.at("turns")) {
    EpisodeTurn t;
    t.index = tj.at("turn").get<int>();
    t.raw = tj.at("raw").get<std::string>();
    t.turn = parse_turn(t.raw);
    t.view_box = box_px_from_json(tj.at("view_box"), ep.image_w, ep.image_h);
    t.accepted = tj.value("accepted", false);
    if (tj.contains("rejection")) t.rejection = tj.at("rejection").get<std::string>();
    if (tj.contains("next_view")) {
      t.next_view = box_px_from_json(tj.at("next_view"), ep.image_w, ep.image_h);
      t.next_resized = tj.value("next_resized", false);
    }
    ep.turns.push_back(std::move(t));
  }
  ep.final_view = box_px_from_json(j.at("final_view"), ep.image_w, ep.image_h);
  ep.zoomed = j.value("zoomed", false);
  const std::string term = j.value("termination", "budget_exhausted");
  if (term == "answered") {
    ep.termination = EpisodeTermination::answered;
  } else if (term == "budget_exhausted") {
    ep.termination = EpisodeTermination::budget_exhausted;
  } else if (term == "protocol_failure") {
    ep.termination = EpisodeTermination::protocol_failure;
  } else {
    throw RecordError("unknown episode termination '" + term + "'");
  }
  ep.initial_resized = j.value("initial_resized", false);
  if (j.contains("final_answer") && j["final_answer"].is_string()) {
    ep.final_answer = j["final_answer"].get<std::string>();
  }
  ep.failure = j.value("failure", "");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) ep.extra[it.key()] = it.value();
  }
  return ep;
}

}  // namespace zoomcot
