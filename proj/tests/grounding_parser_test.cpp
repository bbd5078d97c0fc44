// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/grounding_parser.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include <json.hpp>

#include "test_support.hpp"
#include "zoomcot/trace_gen.hpp"

namespace zoomcot {
namespace {

using nlohmann::json;

std::vector<json> load_cases() {
  std::ifstream in(testing::fixture("grounding/cases.jsonl"));
  std::vector<json> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

GroundingParseOptions options_for(const json& c) {
  GroundingParseOptions o;
  if (!c["frame"].is_null()) o.frame = FrameDims{c["frame"][0].get<int>(), c["frame"][1].get<int>()};
  for (const auto& v : c["vocabulary"]) o.vocabulary.push_back(v.get<std::string>());
  return o;
}

TEST(GroundingFixture, FiftyCasesMatch) {
  const auto cases = load_cases();
  ASSERT_EQ(cases.size(), 50u);
  for (const auto& c : cases) {
    SCOPED_TRACE("case " + std::to_string(c["case"].get<int>()) + ": " + c["text"].get<std::string>());
    const auto parsed = parse_groundings(c["text"].get<std::string>(), options_for(c));
    EXPECT_EQ(parsed.diagnostics.size(), c["diagnostics"].get<std::size_t>());
    ASSERT_EQ(parsed.entries.size(), c["expected"].size());
    for (const auto& [name, exp] : c["expected"].items()) {
      auto it = parsed.entries.find(name);
      ASSERT_NE(it, parsed.entries.end()) << "missing " << name;
      const auto& e = it->second;
      EXPECT_EQ(e.name, name);
      EXPECT_NEAR(e.bbox_ratio.x1, exp["bbox"][0].get<double>(), 1e-9);
      EXPECT_NEAR(e.bbox_ratio.y1, exp["bbox"][1].get<double>(), 1e-9);
      EXPECT_NEAR(e.bbox_ratio.x2, exp["bbox"][2].get<double>(), 1e-9);
      EXPECT_NEAR(e.bbox_ratio.y2, exp["bbox"][3].get<double>(), 1e-9);
      if (exp["depth"].is_null()) {
        EXPECT_FALSE(e.depth01.has_value());
      } else {
        ASSERT_TRUE(e.depth01.has_value());
        EXPECT_NEAR(*e.depth01, exp["depth"].get<double>(), 1e-9);
      }
      EXPECT_TRUE(e.bbox_ratio.valid());
    }
  }
}

TEST(NormalizeUnits, Thresholds) {
  const std::vector<double> ratio{0.1, 0.2, 1.5, 0.4};
  auto r = normalize_box_units(ratio);
  EXPECT_EQ(r.unit, BoxUnit::ratio);
  EXPECT_TRUE(r.clipped);
  const std::vector<double> pct{10, 20, 150, 40};
  EXPECT_EQ(normalize_box_units(pct).unit, BoxUnit::percent);
  const std::vector<double> px{10, 20, 151, 40};
  EXPECT_FALSE(normalize_box_units(px).box.has_value());
  const auto p = normalize_box_units(px, FrameDims{302, 80});
  EXPECT_EQ(p.unit, BoxUnit::pixel);
  ASSERT_TRUE(p.box);
  EXPECT_NEAR(p.box->x2, 0.5, 1e-12);
  EXPECT_NEAR(p.box->y2, 0.5, 1e-12);
}

TEST(NormalizeDepth, SymbolicValues) {
  EXPECT_EQ(normalize_depth("near"), 0.2);
  EXPECT_EQ(normalize_depth("mid"), 0.5);
  EXPECT_EQ(normalize_depth("far"), 0.8);
  EXPECT_FALSE(normalize_depth("purple").has_value());
}

TEST(FormatAnnotation, ShortestAndFixed) {
  EXPECT_EQ(format_annotation({0.1, 0.2, 0.3, 0.4}, 0.5), "([0.1, 0.2, 0.3, 0.4], 0.5)");
  EXPECT_EQ(format_annotation({0.1, 0.2, 0.3, 0.4}, std::nullopt, 2), "([0.10, 0.20, 0.30, 0.40])");
}

TEST(Augment, InsertsAfterWholeWordMentionsOnly) {
  const std::vector<GroundedObject> objs{{"cup", {0.1, 0.2, 0.3, 0.4}, 0.5},
                                         {"coffee cup", {0.5, 0.5, 0.6, 0.6}, std::nullopt}};
  const std::string text = "A Cup beside the coffee cup; cupboard untouched.";
  EXPECT_EQ(augment_grounding(text, objs),
            "A Cup ([0.1, 0.2, 0.3, 0.4], 0.5) beside the coffee cup ([0.5, 0.5, 0.6, 0.6]); "
            "cupboard untouched.");
}

TEST(Augment, LeavesExistingAnnotationsAlone) {
  const std::vector<GroundedObject> objs{{"cup", {0.1, 0.2, 0.3, 0.4}, 0.5}};
  const std::string once = augment_grounding("the cup", objs);
  EXPECT_EQ(augment_grounding(once, objs), once);
}

TEST(Augment, GroundedObjectsKeepNearestDuplicate) {
  SceneObject a{1, "Chair", {0, 0, 10, 10, 100, 100}, 0.7, 2, 100};
  SceneObject b{2, "chair", {50, 50, 60, 60, 100, 100}, 0.2, 1, 100};
  const auto g = grounded_objects({a, b});
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].name, "chair");
  EXPECT_DOUBLE_EQ(g[0].box.x1, 0.5);
  EXPECT_DOUBLE_EQ(*g[0].depth, 0.2);
}

TEST(Augment, RoundTripThroughParserOnRandomScenes) {
  const std::vector<std::string> names{"cup", "lamp", "coffee mug", "chair", "dining table",
                                       "potted plant", "book", "street sign", "clock", "bottle"};
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> dim(50, 2000);
  for (int scene_index = 0; scene_index < 20; ++scene_index) {
    const int w = dim(rng), h = dim(rng);
    std::vector<std::string> pool = names;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<SceneObject> scene;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2 + scene_index % 5; ++i) {
      scene.push_back({i + 1, pool[i], testing::random_box(rng, w, h), u(rng), 0, 0});
    }
    const auto objects = grounded_objects(rank_objects(scene));
    std::string text = "Overview.";
    for (const auto& o : objects) text += " Next to it is the " + o.name + " on the shelf.";
    const auto parsed = parse_groundings(augment_grounding(text, objects));
    EXPECT_TRUE(parsed.diagnostics.empty());
    ASSERT_EQ(parsed.entries.size(), objects.size());
    for (const auto& o : objects) {
      auto it = parsed.entries.find(o.name);
      ASSERT_NE(it, parsed.entries.end()) << o.name;
      EXPECT_EQ(it->second.bbox_ratio, o.box);
      EXPECT_EQ(it->second.depth01, o.depth);
    }
  }
}

TEST(Render, SortedLines) {
  std::map<std::string, GroundingEntry> e{{"b", {"b", {0, 0, 0.5, 0.5}, std::nullopt}},
                                          {"a", {"a", {0.5, 0.5, 1, 1}, 0.25}}};
  EXPECT_EQ(render_groundings(e), "a: ([0.5, 0.5, 1, 1], 0.25)\nb: ([0, 0, 0.5, 0.5])\n");
}

}  // namespace
}  // namespace zoomcot
