// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/trace_gen.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include <spdlog/spdlog.h>

#include "text_util.hpp"

namespace zoomcot {
namespace {

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

BoxRatio relative_to(const BoxPx& inner, const BoxPx& parent) {
  const double w = parent.width();
  const double h = parent.height();
  return {std::clamp((inner.x1 - parent.x1) / w, 0.0, 1.0),
          std::clamp((inner.y1 - parent.y1) / h, 0.0, 1.0),
          std::clamp((inner.x2 - parent.x1) / w, 0.0, 1.0),
          std::clamp((inner.y2 - parent.y1) / h, 0.0, 1.0)};
}

std::string format_box(const BoxRatio& b) {
  return "[" + format_number(round3(b.x1)) + ", " + format_number(round3(b.y1)) + ", " +
         format_number(round3(b.x2)) + ", " + format_number(round3(b.y2)) + "]";
}

std::string objects_context(const std::vector<SceneObject>& objs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& o : objs) {
    const BoxRatio b = px_to_ratio(o.box);
    arr.push_back({{"category", o.category},
                   {"bbox", {round3(b.x1), round3(b.y1), round3(b.x2), round3(b.y2)}},
                   {"depth", round3(o.depth_raw)},
                   {"ordinal_depth", o.depth_rank}});
  }
  return arr.dump();
}

TraceRecord start_record(const SampleRecord& sample, const ImageView& image,
                         const GenPolicy& policy) {
  TraceRecord t;
  t.id = sample.id;
  t.image = sample.image;
  t.image_w = image.width();
  t.image_h = image.height();
  t.question = sample.question;
  t.short_answer = sample.short_answer;
  t.long_answer = sample.long_answer;
  t.source = sample.source;
  t.gt_box = sample.gt_box;
  t.r_max = policy.r_max;
  t.area_ratio_n = policy.area_ratio_n;
  t.extra = sample.extra;
  return t;
}

void add_flag(TraceRecord& t, std::string_view flag) {
  if (!t.has_flag(flag)) t.quality_flags.emplace_back(flag);
}

struct RoundPrompt {
  std::string template_id;
  std::string text;
};

// One generation round on `prev`. Parse failures that survive the retries
// carry the previous roi forward; transport failures abort the trace.
CoTRound run_round(TraceRecord& t, int index, const BoxPx& prev, const ImageView& root,
                   const RoundPrompt& prompt, const GenPolicy& policy, GeneratorClient& gen) {
  GenRequest req;
  req.template_id = prompt.template_id;
  req.text = prompt.text;
  req.images = {crop(root, prev)};
  req.decode = policy.decode;
  req.view_box = prev;

  CoTRound round;
  round.round_index = index;
  try {
    const auto triplet = call_with_retry(gen, req, policy.retry, [](const std::string& raw) {
      return parse_triplet(raw);
    });
    round.description = triplet.description;
    round.rationale = triplet.reasoning;
    round.proposal = triplet.aoi;
    round.repaired = triplet.repaired;
    round.roi = adjust_roi(local_to_global(triplet.aoi, prev), t.gt_box);
  } catch (const ParseError& e) {
    spdlog::warn("trace {} round {}: unparseable response ({}); carrying roi forward", t.id, index,
                 e.what());
    round.roi = prev;
    round.carried_forward = true;
    add_flag(t, quality_flag::kCarriedForward);
  } catch (const TransportError& e) {
    throw TraceError("trace " + t.id + " round " + std::to_string(index) + ": " + e.what(), t);
  }
  return round;
}

void final_justification(TraceRecord& t, const ImageView& root, const GenPolicy& policy,
                         GeneratorClient& gen, const PromptRegistry& prompts) {
  const BoxPx final_roi = t.rounds.back().roi;
  GenRequest req;
  req.template_id = std::string(prompt_id::kFinalJustification);
  req.text = prompts.fill(prompt_id::kFinalJustification,
                          {{"Question", t.question},
                           {"Answer", t.short_answer},
                           {"Ground-truth box", format_box(relative_to(t.gt_box, final_roi))}});
  req.images = {crop(root, final_roi)};
  req.decode = policy.decode;
  req.view_box = final_roi;
  try {
    t.final_justification =
        call_with_retry(gen, req, policy.retry, [](const std::string& raw) {
          auto text = detail::trim_copy(raw);
          if (text.empty()) throw ParseError("empty justification", 0, raw.size());
          return text;
        });
  } catch (const std::exception& e) {
    spdlog::warn("trace {}: final justification failed: {}", t.id, e.what());
    add_flag(t, quality_flag::kJustificationFailed);
  }
}

void check_inputs(const SampleRecord& sample, const ImageView& image, const GenPolicy& policy) {
  policy.validate();
  if (sample.gt_box.frame_w != image.width() || sample.gt_box.frame_h != image.height()) {
    throw std::invalid_argument("sample " + sample.id + ": gt box frame " +
                                std::to_string(sample.gt_box.frame_w) + "x" +
                                std::to_string(sample.gt_box.frame_h) + " does not match image " +
                                std::to_string(image.width()) + "x" +
                                std::to_string(image.height()));
  }
  if (!sample.gt_box.valid()) throw std::invalid_argument("sample " + sample.id + ": invalid gt box");
}

bool is_large(const BoxPx& gt, const ImageView& image, double tau_large) {
  return static_cast<double>(area(gt)) >= tau_large * static_cast<double>(image.pixel_count());
}

bool small_enough(const BoxPx& roi, const BoxPx& gt, double n) {
  return static_cast<double>(area(roi)) <= n * static_cast<double>(area(gt));
}

}  // namespace

void GenPolicy::validate() const {
  if (r_max < 1) throw std::invalid_argument("r_max must be >= 1");
  if (!(area_ratio_n >= 1.0)) throw std::invalid_argument("area_ratio_n must be >= 1");
  if (!(tau_large > 0.0 && tau_large < 1.0)) throw std::invalid_argument("tau_large must be in (0,1)");
  if (retry.retries < 0) throw std::invalid_argument("retries must be >= 0");
}

TraceRecord generate_trace_2d(const SampleRecord& sample, const ImageView& image,
                              const GenPolicy& policy, GeneratorClient& gen,
                              const PromptRegistry& prompts) {
  check_inputs(sample, image, policy);
  const ImageView root = ImageView::root(image.pixels());
  TraceRecord t = start_record(sample, image, policy);
  const RoundPrompt prompt{std::string(prompt_id::kFullImageRoi),
                           prompts.fill(prompt_id::kFullImageRoi,
                                        {{"Question", sample.question},
                                         {"Answer", sample.short_answer}})};

  BoxPx prev = root.origin();
  if (is_large(t.gt_box, root, policy.tau_large)) {
    t.rounds.push_back(run_round(t, 1, prev, root, prompt, policy, gen));
    t.termination = TraceTermination::large_object;
  } else {
    t.termination = TraceTermination::budget_exhausted;
    for (int i = 1; i <= policy.r_max; ++i) {
      t.rounds.push_back(run_round(t, i, prev, root, prompt, policy, gen));
      prev = t.rounds.back().roi;
      if (small_enough(prev, t.gt_box, policy.area_ratio_n)) {
        t.termination = TraceTermination::converged;
        break;
      }
    }
    if (t.termination == TraceTermination::budget_exhausted) add_flag(t, quality_flag::kBudgetExhausted);
  }
  final_justification(t, root, policy, gen, prompts);
  return t;
}

TraceRecord generate_trace_3d(const SampleRecord& sample, const ImageView& image,
                              const std::vector<SceneObject>& scene, const GenPolicy& policy,
                              GeneratorClient& gen, const PromptRegistry& prompts) {
  policy.validate();
  const ImageView root = ImageView::root(image.pixels());
  const std::vector<SceneObject> ranked = rank_objects(scene);
  SampleRecord s = sample;
  bool generated_qa = false;

  if (s.question.empty()) {
    GenRequest req;
    req.template_id = std::string(prompt_id::kQa3d);
    req.text = prompts.at(prompt_id::kQa3d).text + "\n\nObjects:\n" + objects_context(ranked) +
               "\n\n" + prompts.at(prompt_id::kQaFormat).text;
    req.images = {root};
    req.decode = policy.decode;
    req.view_box = root.origin();
    const FrameDims frame{root.width(), root.height()};
    try {
      const auto qa = call_with_retry(gen, req, policy.retry, [&](const std::string& raw) {
        return parse_qa(raw, frame);
      });
      s.question = qa.question;
      s.short_answer = qa.short_answer;
      s.long_answer = qa.long_answer;
      s.gt_box = ratio_to_px(qa.target_box, root.width(), root.height());
      s.gt_convention = "xyxy";
      generated_qa = true;
    } catch (const std::exception& e) {
      TraceRecord partial = start_record(s, root, policy);
      throw TraceError("trace " + s.id + ": QA generation failed: " + e.what(), partial);
    }
  }
  check_inputs(s, root, policy);

  TraceRecord t = start_record(s, root, policy);
  t.scene = ranked;
  if (generated_qa) add_flag(t, quality_flag::kQaGenerated);

  const std::string base = prompts.fill(prompt_id::kRound3d, {{"Question", s.question},
                                                              {"Answer", s.short_answer}});
  const std::string format = prompts.at(prompt_id::kTripletFormat).text;

  auto round_with_context = [&](int index, const BoxPx& prev) {
    auto local = localize_objects(ranked, prev);
    if (local.empty()) {
      spdlog::info("trace {} round {}: no scene objects inside the current view", t.id, index);
      add_flag(t, quality_flag::kEmptyObjectContext);
    }
    const RoundPrompt prompt{std::string(prompt_id::kRound3d),
                             base + "\n\nLocal objects (O_t):\n" + objects_context(local) +
                                 "\n\n" + format};
    CoTRound r = run_round(t, index, prev, root, prompt, policy, gen);
    r.objects = std::move(local);
    return r;
  };

  BoxPx prev = root.origin();
  if (is_large(t.gt_box, root, policy.tau_large)) {
    t.rounds.push_back(round_with_context(1, prev));
    t.termination = TraceTermination::large_object;
    return t;
  }
  t.termination = TraceTermination::budget_exhausted;
  for (int i = 1; i <= policy.r_max; ++i) {
    t.rounds.push_back(round_with_context(i, prev));
    prev = t.rounds.back().roi;
    if (small_enough(prev, t.gt_box, policy.area_ratio_n)) {
      t.termination = TraceTermination::converged;
      break;
    }
  }
  if (t.termination == TraceTermination::budget_exhausted) add_flag(t, quality_flag::kBudgetExhausted);
  return t;
}

std::optional<std::string> find_forbidden_phrase(std::string_view text) {
  static const std::regex kForbidden(
      R"(\b(zoom\w*|crop\w*|recurs\w*|intermediate\w*|iteration\w*|round\s+\d+|step\s+\d+|)"
      R"((first|second|third|fourth|previous|next|earlier|later|subsequent)\s+(round|view|step)s?)\b)",
      std::regex::icase | std::regex::ECMAScript);
  std::cmatch m;
  if (std::regex_search(text.data(), text.data() + text.size(), m, kForbidden)) return m.str(0);
  return std::nullopt;
}

CoTRound distill_single_round(const TraceRecord& t, GeneratorClient& gen, const RetryPolicy& retry,
                              const PromptRegistry& prompts) {
  if (t.rounds.empty()) throw DistillError("trace " + t.id + " has no rounds");
  const CoTRound& last = t.rounds.back();
  if (t.rounds.size() == 1) {
    CoTRound out = last;
    out.round_index = 1;
    out.objects.clear();
    return out;
  }

  const BoxPx full = BoxPx::full_frame(t.image_w, t.image_h);
  std::string traces;
  for (const auto& r : t.rounds) {
    traces += "Round " + std::to_string(r.round_index) + ":\nScene Description: " + r.description +
              "\nArea of Interest: " + format_box(relative_to(r.roi, full)) +
              "\nReasoning: " + r.rationale + "\n\n";
  }
  GenRequest req;
  req.template_id = std::string(prompt_id::kDistill);
  req.text = prompts.fill(prompt_id::kDistill, {{"Question", t.question},
                                                {"Answer", t.short_answer},
                                                {"Traces", detail::trim_copy(traces)}}) +
             "\n\n" + prompts.at(prompt_id::kTripletFormat).text;

  constexpr int kScreenAttempts = 2;
  for (int attempt = 1; attempt <= kScreenAttempts; ++attempt) {
    TripletResponse resp;
    try {
      resp = call_with_retry(gen, req, retry, [](const std::string& raw) { return parse_triplet(raw); });
    } catch (const std::exception& e) {
      throw DistillError("trace " + t.id + ": distillation failed: " + e.what());
    }
    const auto bad = find_forbidden_phrase(resp.description + "\n" + resp.reasoning);
    if (bad) {
      spdlog::warn("trace {}: distilled text mentions '{}' (attempt {})", t.id, *bad, attempt);
      continue;
    }
    CoTRound out;
    out.round_index = 1;
    out.description = resp.description;
    out.rationale = resp.reasoning;
    out.proposal = resp.aoi;
    out.repaired = resp.repaired;
    out.roi = last.roi;
    return out;
  }
  throw DistillError("trace " + t.id + ": distilled text keeps referring to intermediate steps");
}

std::vector<GroundedObject> grounded_objects(const std::vector<SceneObject>& scene) {
  const auto ranked = rank_objects(scene);
  std::vector<const SceneObject*> order;
  for (const auto& o : ranked) order.push_back(&o);
  std::stable_sort(order.begin(), order.end(), [](const SceneObject* a, const SceneObject* b) {
    return a->depth_rank < b->depth_rank;
  });
  std::vector<GroundedObject> out;
  std::vector<std::string> seen;
  for (const auto* o : order) {
    std::string name = to_lower(detail::trim_view(o->category));
    if (name.empty() || std::find(seen.begin(), seen.end(), name) != seen.end()) continue;
    seen.push_back(name);
    out.push_back({name, px_to_ratio(o->box), o->depth_raw});
  }
  return out;
}

std::string augment_grounding(std::string_view text, const std::vector<GroundedObject>& objects,
                              int precision) {
  struct Insert {
    std::size_t at;
    std::string annotation;
  };
  std::vector<const GroundedObject*> order;
  for (const auto& o : objects) {
    if (!detail::trim_view(o.name).empty()) order.push_back(&o);
  }
  std::stable_sort(order.begin(), order.end(), [](const GroundedObject* a, const GroundedObject* b) {
    return a->name.size() > b->name.size();
  });

  const std::string lower = to_lower(text);
  std::vector<std::pair<std::size_t, std::size_t>> taken;
  std::vector<Insert> inserts;
  auto is_word = [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || u >= 0x80;
  };
  for (const auto* o : order) {
    const std::string needle = to_lower(detail::trim_view(o->name));
    std::size_t pos = 0;
    while ((pos = lower.find(needle, pos)) != std::string::npos) {
      const std::size_t end = pos + needle.size();
      const bool left_ok = pos == 0 || !is_word(lower[pos - 1]);
      const bool right_ok = end == lower.size() || !is_word(lower[end]);
      const bool overlaps = std::any_of(taken.begin(), taken.end(), [&](const auto& r) {
        return pos < r.second && end > r.first;
      });
      if (left_ok && right_ok && !overlaps) {
        taken.emplace_back(pos, end);
        const std::size_t paren = lower.find_first_not_of(" :", end);
        const std::size_t bracket =
            paren == std::string::npos ? paren : lower.find_first_not_of(' ', paren + 1);
        const bool annotated = bracket != std::string::npos && lower[paren] == '(' &&
                               lower[bracket] == '[';
        if (!annotated) inserts.push_back({end, " " + format_annotation(o->box, o->depth, precision)});
      }
      pos = end;
    }
  }
  std::sort(inserts.begin(), inserts.end(),
            [](const Insert& a, const Insert& b) { return a.at < b.at; });
  std::string out;
  out.reserve(text.size() + inserts.size() * 40);
  std::size_t cursor = 0;
  for (const auto& ins : inserts) {
    out.append(text.substr(cursor, ins.at - cursor));
    out += ins.annotation;
    cursor = ins.at;
  }
  out.append(text.substr(cursor));
  return out;
}

TraceRecord consistency_fix(TraceRecord t) {
  if (t.image_w <= 0 || t.image_h <= 0) {
    throw ConsistencyError("trace " + t.id + ": missing image dimensions");
  }
  const BoxPx frame = BoxPx::full_frame(t.image_w, t.image_h);
  BoxPx gt = t.gt_box;
  gt.frame_w = t.image_w;
  gt.frame_h = t.image_h;
  if (gt.x1 >= t.image_w || gt.y1 >= t.image_h || gt.x2 <= 0 || gt.y2 <= 0 || gt.x2 < gt.x1 ||
      gt.y2 < gt.y1) {
    throw ConsistencyError("trace " + t.id + ": gt box " + to_string(gt) + " lies outside the frame");
  }
  const BoxPx gt_fixed = adjust_roi(gt, gt);
  if (!(gt_fixed == t.gt_box)) {
    t.repair_log.push_back("gt: " + to_string(t.gt_box) + " -> " + to_string(gt_fixed));
    t.gt_box = gt_fixed;
  }

  BoxPx prev = frame;
  for (auto& r : t.rounds) {
    const std::string tag = "round " + std::to_string(r.round_index) + ": ";
    BoxPx roi = r.roi;
    roi.frame_w = t.image_w;
    roi.frame_h = t.image_h;
    const BoxPx clipped = clip_to_frame(roi);
    if (!(clipped == r.roi)) t.repair_log.push_back(tag + "clipped " + to_string(r.roi) + " -> " + to_string(clipped));
    BoxPx fixed = adjust_roi(clipped, t.gt_box);
    if (!(fixed == clipped)) t.repair_log.push_back(tag + "expanded to cover gt -> " + to_string(fixed));
    const auto inside = intersection(fixed, prev);
    if (!inside || !(*inside == fixed)) {
      const BoxPx shrunk = inside ? adjust_roi(*inside, t.gt_box) : prev;
      t.repair_log.push_back(tag + "escaped previous roi " + to_string(prev) + "; " +
                             to_string(fixed) + " -> " + to_string(shrunk));
      fixed = shrunk;
    }
    if (!(fixed == r.roi)) r.repaired = true;
    r.roi = fixed;
    prev = fixed;
  }
  if (t.distilled && !t.rounds.empty() && !(t.distilled->roi == t.rounds.back().roi)) {
    t.repair_log.push_back("distilled: roi reset to final round " + to_string(t.rounds.back().roi));
    t.distilled->roi = t.rounds.back().roi;
  }
  return t;
}

}  // namespace zoomcot
