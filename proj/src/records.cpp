// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/records.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace zoomcot {
namespace {

using nlohmann::json;

std::pair<std::string, int> split_schema(std::string_view tag) {
  const auto slash = tag.rfind('/');
  if (slash == std::string_view::npos) throw RecordError("malformed schema tag '" + std::string(tag) + "'");
  int major = 0;
  const auto digits = tag.substr(slash + 1);
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), major);
  if (ec != std::errc() || digits.empty()) {
    throw RecordError("malformed schema version in '" + std::string(tag) + "'");
  }
  return {std::string(tag.substr(0, slash)), major};
}

json collect_extra(const json& j, const std::set<std::string, std::less<>>& known) {
  json extra = json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) extra[it.key()] = it.value();
  }
  return extra;
}

void merge_extra(json& out, const json& extra) {
  if (!extra.is_object()) return;
  for (auto it = extra.begin(); it != extra.end(); ++it) {
    if (!out.contains(it.key())) out[it.key()] = it.value();
  }
}

TraceTermination termination_from(std::string_view s) {
  if (s == "converged") return TraceTermination::converged;
  if (s == "large_object") return TraceTermination::large_object;
  if (s == "budget_exhausted") return TraceTermination::budget_exhausted;
  throw RecordError("unknown termination '" + std::string(s) + "'");
}

}  // namespace

void check_schema(const json& record, std::string_view expected) {
  if (!record.is_object()) throw RecordError("record is not a JSON object");
  if (!record.contains("schema")) return;
  const auto& tag = record.at("schema");
  if (!tag.is_string()) throw RecordError("schema tag is not a string");
  const auto [name, major] = split_schema(tag.get<std::string>());
  const auto [want_name, want_major] = split_schema(expected);
  if (name != want_name) {
    throw RecordError("schema '" + tag.get<std::string>() + "' where '" + std::string(expected) +
                      "' was expected");
  }
  if (major > want_major) {
    throw RecordError("schema '" + tag.get<std::string>() + "' is newer than supported '" +
                      std::string(expected) + "'");
  }
}

std::string_view to_string(TraceTermination t) {
  switch (t) {
    case TraceTermination::converged: return "converged";
    case TraceTermination::large_object: return "large_object";
    case TraceTermination::budget_exhausted: return "budget_exhausted";
  }
  return "converged";
}

bool TraceRecord::has_flag(std::string_view f) const {
  return std::find(quality_flags.begin(), quality_flags.end(), f) != quality_flags.end();
}

json box_to_json(const BoxPx& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }
json box_to_json(const BoxRatio& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

BoxPx box_px_from_json(const json& j, int frame_w, int frame_h) {
  if (!j.is_array() || j.size() != 4) throw RecordError("pixel box must be a 4-element array");
  try {
    return BoxPx::checked(j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>(),
                          frame_w, frame_h);
  } catch (const GeometryError& e) {
    throw RecordError(e.what());
  }
}

BoxRatio box_ratio_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw RecordError("ratio box must be a 4-element array");
  try {
    return BoxRatio::checked(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                             j[3].get<double>());
  } catch (const GeometryError& e) {
    throw RecordError(e.what());
  }
}

json to_json(const SampleRecord& s) {
  json j = {{"schema", kSampleSchema},
            {"id", s.id},
            {"image", s.image},
            {"image_w", s.gt_box.frame_w},
            {"image_h", s.gt_box.frame_h},
            {"question", s.question},
            {"short_answer", s.short_answer},
            {"long_answer", s.long_answer},
            {"source", s.source},
            {"gt_box", box_to_json(s.gt_box)},
            {"gt_space", "pixel"},
            {"gt_convention", s.gt_convention},
            {"gt_repaired", s.gt_repaired}};
  merge_extra(j, s.extra);
  return j;
}

SampleRecord sample_from_json(const json& j) {
  static const std::set<std::string, std::less<>> known = {
      "schema",      "id",     "image",  "image_w",  "image_h",       "question",   "short_answer",
      "long_answer", "source", "gt_box", "gt_space", "gt_convention", "gt_repaired"};
  check_schema(j, kSampleSchema);
  SampleRecord s;
  s.id = j.at("id").get<std::string>();
  s.image = j.at("image").get<std::string>();
  s.question = j.value("question", "");
  s.short_answer = j.value("short_answer", "");
  s.long_answer = j.value("long_answer", "");
  s.source = j.value("source", "");
  s.gt_box = box_px_from_json(j.at("gt_box"), j.at("image_w").get<int>(), j.at("image_h").get<int>());
  s.gt_convention = j.value("gt_convention", "xyxy");
  s.gt_repaired = j.value("gt_repaired", false);
  s.extra = collect_extra(j, known);
  return s;
}

json to_json(const SceneObject& o) {
  return {{"object_id", o.object_id},
          {"category", o.category},
          {"box", box_to_json(o.box)},
          {"frame", json::array({o.box.frame_w, o.box.frame_h})},
          {"depth_raw", o.depth_raw},
          {"depth_rank", o.depth_rank},
          {"area", o.area}};
}

SceneObject scene_object_from_json(const json& j) {
  SceneObject o;
  o.object_id = j.at("object_id").get<int>();
  o.category = j.at("category").get<std::string>();
  const auto& frame = j.at("frame");
  o.box = box_px_from_json(j.at("box"), frame.at(0).get<int>(), frame.at(1).get<int>());
  o.depth_raw = j.at("depth_raw").get<double>();
  o.depth_rank = j.value("depth_rank", 0);
  o.area = j.value("area", area(o.box));
  return o;
}

json to_json(const CoTRound& r) {
  json j = {{"round", r.round_index},
            {"description", r.description},
            {"roi", box_to_json(r.roi)},
            {"rationale", r.rationale}};
  if (r.proposal) j["proposal"] = box_to_json(*r.proposal);
  if (r.carried_forward) j["carried_forward"] = true;
  if (r.repaired) j["repaired"] = true;
  if (!r.objects.empty()) {
    json objs = json::array();
    for (const auto& o : r.objects) objs.push_back(to_json(o));
    j["objects"] = std::move(objs);
  }
  return j;
}

CoTRound round_from_json(const json& j, int frame_w, int frame_h) {
  CoTRound r;
  r.round_index = j.at("round").get<int>();
  r.description = j.value("description", "");
  r.roi = box_px_from_json(j.at("roi"), frame_w, frame_h);
  r.rationale = j.value("rationale", "");
  if (j.contains("proposal")) r.proposal = box_ratio_from_json(j.at("proposal"));
  r.carried_forward = j.value("carried_forward", false);
  r.repaired = j.value("repaired", false);
  if (j.contains("objects")) {
    for (const auto& o : j.at("objects")) r.objects.push_back(scene_object_from_json(o));
  }
  return r;
}

json to_json(const TraceRecord& t) {
  json rounds = json::array();
  for (const auto& r : t.rounds) rounds.push_back(to_json(r));
  json j = {{"schema", kTraceSchema},
            {"id", t.id},
            {"image", t.image},
            {"image_w", t.image_w},
            {"image_h", t.image_h},
            {"question", t.question},
            {"short_answer", t.short_answer},
            {"long_answer", t.long_answer},
            {"source", t.source},
            {"gt_box", box_to_json(t.gt_box)},
            {"space", "pixel"},
            {"rounds", std::move(rounds)},
            {"final_justification", t.final_justification},
            {"termination", to_string(t.termination)},
            {"r_max", t.r_max},
            {"area_ratio_n", t.area_ratio_n},
            {"quality_flags", t.quality_flags},
            {"repair_log", t.repair_log}};
  if (t.distilled) j["distilled"] = to_json(*t.distilled);
  if (t.scene) {
    json scene = json::array();
    for (const auto& o : *t.scene) scene.push_back(to_json(o));
    j["scene"] = std::move(scene);
  }
  merge_extra(j, t.extra);
  return j;
}

TraceRecord trace_from_json(const json& j) {
  static const std::set<std::string, std::less<>> known = {
      "schema",       "id",       "image",        "image_w",     "image_h",
      "question",     "short_answer", "long_answer", "source",   "gt_box",
      "space",        "rounds",   "final_justification", "termination", "r_max",
      "area_ratio_n", "quality_flags", "repair_log", "distilled", "scene"};
  check_schema(j, kTraceSchema);
  TraceRecord t;
  t.id = j.at("id").get<std::string>();
  t.image = j.value("image", "");
  t.image_w = j.at("image_w").get<int>();
  t.image_h = j.at("image_h").get<int>();
  t.question = j.value("question", "");
  t.short_answer = j.value("short_answer", "");
  t.long_answer = j.value("long_answer", "");
  t.source = j.value("source", "");
  t.gt_box = box_px_from_json(j.at("gt_box"), t.image_w, t.image_h);
  for (const auto& r : j.at("rounds")) t.rounds.push_back(round_from_json(r, t.image_w, t.image_h));
  t.final_justification = j.value("final_justification", "");
  t.termination = termination_from(j.value("termination", "converged"));
  t.r_max = j.value("r_max", 0);
  t.area_ratio_n = j.value("area_ratio_n", 0.0);
  t.quality_flags = j.value("quality_flags", std::vector<std::string>{});
  t.repair_log = j.value("repair_log", std::vector<std::string>{});
  if (j.contains("distilled")) t.distilled = round_from_json(j.at("distilled"), t.image_w, t.image_h);
  if (j.contains("scene")) {
    std::vector<SceneObject> scene;
    for (const auto& o : j.at("scene")) scene.push_back(scene_object_from_json(o));
    t.scene = std::move(scene);
  }
  t.extra = collect_extra(j, known);
  return t;
}

}  // namespace zoomcot
