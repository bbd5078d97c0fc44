// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "text_util.hpp"

namespace zoomcot {
namespace {

using nlohmann::json;

// Neumaier summation.
double compensated_sum(const std::vector<double>& v) {
  double sum = 0.0, comp = 0.0;
  for (const double x : v) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string threshold_label(double t) { return "IoU@" + format_number(t); }

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (const char c : s) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::size_t token_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (const char c : s) {
    const bool space = detail::is_space(c);
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

// Rows of cells; the first row is the header. Columns are left-aligned and
// separated by " | ".
std::string render_grid(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    if (width.size() < r.size()) width.resize(r.size(), 0);
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string line;
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      if (c > 0) line += " | ";
      line += rows[i][c] + std::string(width[c] - rows[i][c].size(), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
    if (i == 0) {
      std::string rule;
      for (std::size_t c = 0; c < width.size(); ++c) {
        if (c > 0) rule += "-+-";
        rule += std::string(width[c], '-');
      }
      out << rule << '\n';
    }
  }
  return out.str();
}

}  // namespace

json RoIReport::to_json() const {
  json acc = json::object();
  for (std::size_t k = 0; k < thresholds.size(); ++k) acc[threshold_label(thresholds[k])] = accuracy[k];
  json per = json::array();
  for (std::size_t i = 0; i < ious.size(); ++i) per.push_back({{"id", ids[i]}, {"iou", ious[i]}});
  return {{"count", ious.size()}, {"missing_roi", missing}, {"accuracy", acc}, {"per_sample", per}};
}

RoIReport roi_accuracy(const std::vector<RoIPrediction>& preds,
                       const std::vector<double>& thresholds) {
  RoIReport r;
  r.thresholds = thresholds;
  r.accuracy.assign(thresholds.size(), 0.0);
  for (const auto& p : preds) {
    double v = 0.0;
    if (p.pred) {
      v = iou(*p.pred, p.gt);
    } else {
      ++r.missing;
    }
    r.ids.push_back(p.id);
    r.ious.push_back(v);
  }
  if (preds.empty()) return r;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    const auto hits = std::count_if(r.ious.begin(), r.ious.end(),
                                    [&](double v) { return v > thresholds[k]; });
    r.accuracy[k] = static_cast<double>(hits) / static_cast<double>(preds.size());
  }
  return r;
}

GroundingMatch match_groundings(const std::map<std::string, GroundingEntry>& pred,
                                const std::map<std::string, GroundingEntry>& gt) {
  GroundingMatch m;
  for (const auto& [name, entry] : gt) {
    (pred.count(name) ? m.matched : m.missed).push_back(name);
  }
  return m;
}

std::optional<double> depth_abs_err(std::optional<double> pred, std::optional<double> gt) {
  if (!pred || !gt) return std::nullopt;
  return std::abs(*pred - *gt);
}

json GroundingReport::to_json() const {
  json per = json::array();
  for (const auto& c : per_sample) {
    per.push_back({{"id", c.id}, {"gt", c.gt}, {"matched", c.matched}, {"missed", c.missed}});
  }
  return {{"grounded_ratio", opt(grounded_ratio)},
          {"mean_iou", opt(mean_iou)},
          {"mean_depth_abs_err", opt(mean_depth_err)},
          {"total_gt", total_gt},
          {"total_matched", total_matched},
          {"total_missed", total_missed},
          {"depth_pairs", depth_pairs},
          {"name_matching", "exact lowercase"},
          {"per_sample", per}};
}

GroundingReport grounding_metrics(const std::vector<GroundingSample>& samples) {
  GroundingReport r;
  double iou_sum = 0.0;
  double depth_sum = 0.0;
  for (const auto& s : samples) {
    const auto m = match_groundings(s.pred, s.gt);
    r.per_sample.push_back({s.id, s.gt.size(), m.matched.size(), m.missed.size()});
    r.total_gt += s.gt.size();
    r.total_matched += m.matched.size();
    r.total_missed += m.missed.size();
    for (const auto& name : m.matched) {
      const auto& p = s.pred.at(name);
      const auto& g = s.gt.at(name);
      iou_sum += iou(p.bbox_ratio, g.bbox_ratio);
      if (const auto d = depth_abs_err(p.depth01, g.depth01)) {
        depth_sum += *d;
        ++r.depth_pairs;
      }
    }
  }
  if (r.total_gt > 0) {
    r.grounded_ratio =
        1.0 - static_cast<double>(r.total_missed) / static_cast<double>(r.total_gt);
  }
  if (r.total_matched > 0) r.mean_iou = iou_sum / static_cast<double>(r.total_matched);
  if (r.depth_pairs > 0) r.mean_depth_err = depth_sum / static_cast<double>(r.depth_pairs);
  return r;
}

JudgeScore parse_judge_score(std::string_view raw) {
  static const std::regex kScore(R"(score\s*[:=]\s*([-+]?(?:\d+\.?\d*|\.\d+)))", std::regex::icase);
  static const std::regex kStrict(R"(\s*score:\s*[-+]?(?:\d+\.?\d*|\.\d+)\s*)", std::regex::icase);
  std::cmatch last;
  bool found = false;
  for (std::cregex_iterator it(raw.data(), raw.data() + raw.size(), kScore), end; it != end; ++it) {
    last = *it;
    found = true;
  }
  if (!found) throw JudgeParseError("no 'score:' token in judge reply");
  JudgeScore s;
  const double v = std::stod(last[1].str());
  s.score = std::clamp(v, 0.0, 1.0);
  s.clamped = s.score != v;
  if (s.clamped) spdlog::warn("judge score {} clamped to {}", v, s.score);
  s.lenient = !std::regex_match(raw.data(), raw.data() + raw.size(), kStrict);
  return s;
}

double macro_average(const std::vector<std::vector<double>>& per_dataset) {
  if (per_dataset.empty()) throw std::invalid_argument("macro_average: no datasets");
  double total = 0.0;
  for (const auto& d : per_dataset) {
    if (d.empty()) throw std::invalid_argument("macro_average: empty dataset");
    total += compensated_sum(d) / static_cast<double>(d.size());
  }
  return total / static_cast<double>(per_dataset.size());
}

double macro_average(const std::map<std::string, std::vector<double>>& per_dataset) {
  std::vector<std::vector<double>> v;
  for (const auto& [name, scores] : per_dataset) v.push_back(scores);
  return macro_average(v);
}

json StatsReport::to_json() const {
  json hist = json::object();
  for (const auto& [k, n] : round_histogram) hist[std::to_string(k)] = n;
  return {{"count", count},
          {"round_histogram", hist},
          {"mean_gt_area_fraction", mean_gt_area_fraction},
          {"mean_roi_area_fraction", mean_roi_area_fraction},
          {"length_unit", length_unit == LengthUnit::chars ? "chars" : "tokens"},
          {"mean_length_per_round", mean_length_per_round},
          {"rounds_at_index", rounds_at_index}};
}

StatsReport dataset_stats(const std::vector<TraceRecord>& traces, LengthUnit unit) {
  StatsReport r;
  r.length_unit = unit;
  r.count = traces.size();
  for (int k = 1; k <= kHistogramMaxRounds; ++k) r.round_histogram[k] = 0;
  double gt_sum = 0.0;
  double roi_sum = 0.0;
  std::vector<double> length_sum;
  for (const auto& t : traces) {
    const int n = static_cast<int>(t.rounds.size());
    r.round_histogram[std::clamp(n, 1, kHistogramMaxRounds)] += 1;
    const double img = static_cast<double>(t.image_w) * static_cast<double>(t.image_h);
    if (img > 0) {
      gt_sum += static_cast<double>(area(t.gt_box)) / img;
      if (!t.rounds.empty()) roi_sum += static_cast<double>(area(t.rounds.back().roi)) / img;
    }
    for (std::size_t i = 0; i < t.rounds.size(); ++i) {
      if (length_sum.size() <= i) {
        length_sum.resize(i + 1, 0.0);
        r.rounds_at_index.resize(i + 1, 0);
      }
      const auto& text = t.rounds[i].rationale;
      length_sum[i] += static_cast<double>(unit == LengthUnit::chars ? utf8_length(text)
                                                                     : token_count(text));
      r.rounds_at_index[i] += 1;
    }
  }
  if (!traces.empty()) {
    r.mean_gt_area_fraction = gt_sum / static_cast<double>(traces.size());
    r.mean_roi_area_fraction = roi_sum / static_cast<double>(traces.size());
  }
  for (std::size_t i = 0; i < length_sum.size(); ++i) {
    r.mean_length_per_round.push_back(length_sum[i] / static_cast<double>(r.rounds_at_index[i]));
  }
  return r;
}

std::string normalize_answer(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (const char c : detail::lower_copy(s)) {
    if (detail::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  auto strip = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (!out.empty() && strip(out.back())) out.pop_back();
  std::size_t lead = 0;
  while (lead < out.size() && strip(out[lead])) ++lead;
  return detail::trim_copy(std::string_view(out).substr(lead));
}

std::string render_roi_table(const std::vector<std::pair<std::string, RoIReport>>& models) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Accuracy"};
  for (const auto& [name, rep] : models) header.push_back(name);
  rows.push_back(header);
  const std::vector<double> thresholds =
      models.empty() ? std::vector<double>{0.5, 0.75} : models.front().second.thresholds;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    std::vector<std::string> row{threshold_label(thresholds[k])};
    for (const auto& [name, rep] : models) {
      row.push_back(k < rep.accuracy.size() ? fixed(rep.accuracy[k], 2) : "-");
    }
    rows.push_back(row);
  }
  return render_grid(rows);
}

std::string render_grounding_table(
    const std::vector<std::pair<std::string, GroundingReport>>& models) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{""};
  for (const auto& [name, rep] : models) header.push_back(name);
  rows.push_back(header);
  auto cell = [](const std::optional<double>& v) { return v ? fixed(*v, 3) : std::string("-"); };
  std::vector<std::string> ratio{"Grounded Ratio"}, box{"BBox (IoU)"}, depth{"Depth (Abs Diff)"};
  for (const auto& [name, rep] : models) {
    ratio.push_back(cell(rep.grounded_ratio));
    box.push_back(cell(rep.mean_iou));
    depth.push_back(cell(rep.mean_depth_err));
  }
  rows.push_back(ratio);
  rows.push_back(box);
  rows.push_back(depth);
  return render_grid(rows);
}

std::string render_stats_table(const StatsReport& stats) {
  std::vector<std::vector<std::string>> rows{{"Statistic", "Value"}};
  rows.push_back({"Traces", std::to_string(stats.count)});
  for (const auto& [k, n] : stats.round_histogram) {
    rows.push_back({"Rounds = " + std::to_string(k) + (k == kHistogramMaxRounds ? "+" : ""),
                    std::to_string(n)});
  }
  rows.push_back({"Mean GT area fraction", fixed(stats.mean_gt_area_fraction, 4)});
  rows.push_back({"Mean RoI area fraction", fixed(stats.mean_roi_area_fraction, 4)});
  const std::string unit = stats.length_unit == LengthUnit::chars ? "chars" : "tokens";
  for (std::size_t i = 0; i < stats.mean_length_per_round.size(); ++i) {
    rows.push_back({"Mean length, round " + std::to_string(i + 1) + " (" + unit + ")",
                    fixed(stats.mean_length_per_round[i], 1)});
  }
  return render_grid(rows);
}

}  // namespace zoomcot
