// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include "zoomcot/trace_gen.hpp"

#include <gtest/gtest.h>

namespace zoomcot {
namespace {

constexpr int kW = 200;
constexpr int kH = 160;

ImageView image() { return ImageView::root(cv::Mat(kH, kW, CV_8UC3, cv::Scalar(90, 120, 150))); }

SampleRecord sample(BoxPx gt = {80, 80, 100, 100, kW, kH}) {
  SampleRecord s;
  s.id = "s1";
  s.image = "s1.png";
  s.question = "What does the sign say?";
  s.short_answer = "stop";
  s.gt_box = gt;
  return s;
}

std::string triplet(double x1, double y1, double x2, double y2, std::string desc = "a street") {
  return render_triplet({std::move(desc), {x1, y1, x2, y2}, "the sign is there", false, BoxUnit::ratio});
}

// Round 1 picks the middle of the frame, round 2 lands exactly on the gt box.
const std::string kOuter = triplet(0.25, 0.25, 0.75, 0.75);
const std::string kInner = triplet(0.3, 0.5, 0.5, 0.75, "a red sign");

TEST(Trace2d, ConvergesWhenRoiWithinAreaRatio) {
  ScriptedGenerator gen({kOuter, kInner, "Because the sign reads stop."});
  const auto t = generate_trace_2d(sample(), image(), GenPolicy{}, gen);
  ASSERT_EQ(t.rounds.size(), 2u);
  EXPECT_EQ(t.termination, TraceTermination::converged);
  EXPECT_EQ(t.rounds[0].roi, (BoxPx{50, 40, 150, 120, kW, kH}));
  EXPECT_EQ(t.rounds[1].roi, t.gt_box);
  EXPECT_EQ(t.rounds[1].round_index, 2);
  EXPECT_EQ(*t.rounds[1].proposal, (BoxRatio{0.3, 0.5, 0.5, 0.75}));
  EXPECT_EQ(t.final_justification, "Because the sign reads stop.");
  EXPECT_TRUE(t.quality_flags.empty());
  EXPECT_EQ(t.r_max, 3);

  const auto reqs = gen.requests();
  ASSERT_EQ(reqs.size(), 3u);
  EXPECT_EQ(*reqs[1].view_box, t.rounds[0].roi);
  EXPECT_EQ(reqs[1].images[0].origin(), t.rounds[0].roi);
  EXPECT_EQ(reqs[2].template_id, prompt_id::kFinalJustification);
  EXPECT_NE(reqs[0].text.find("What does the sign say?"), std::string::npos);
}

TEST(Trace2d, EveryRoiCoversGtAndStaysInFrame) {
  // The model points away from the target; adjustment must still cover it.
  ScriptedGenerator gen({triplet(0.0, 0.0, 0.1, 0.1), triplet(0.9, 0.9, 1.0, 1.0), "j"});
  const auto t = generate_trace_2d(sample(), image(), GenPolicy{}, gen);
  for (const auto& r : t.rounds) {
    EXPECT_TRUE(r.roi.contains(t.gt_box));
    EXPECT_TRUE(BoxPx::full_frame(kW, kH).contains(r.roi));
  }
}

TEST(Trace2d, BudgetExhaustedAfterRMax) {
  ScriptedGenerator gen({triplet(0, 0, 1, 1)});
  GenPolicy p;
  p.r_max = 4;
  const auto t = generate_trace_2d(sample(), image(), p, gen);
  EXPECT_EQ(t.rounds.size(), 4u);
  EXPECT_EQ(t.termination, TraceTermination::budget_exhausted);
  EXPECT_TRUE(t.has_flag(quality_flag::kBudgetExhausted));
}

TEST(Trace2d, LargeObjectGetsSingleRound) {
  ScriptedGenerator gen({kOuter, "j"});
  // 150*64 = 9600 = 0.30 * 32000, right at the threshold.
  const auto t = generate_trace_2d(sample({0, 0, 150, 64, kW, kH}), image(), GenPolicy{}, gen);
  ASSERT_EQ(t.rounds.size(), 1u);
  EXPECT_EQ(t.termination, TraceTermination::large_object);
  EXPECT_EQ(gen.requests()[0].view_box, BoxPx::full_frame(kW, kH));

  ScriptedGenerator gen2({kOuter, kInner, "j"});
  const auto t2 = generate_trace_2d(sample({0, 0, 150, 63, kW, kH}), image(), GenPolicy{}, gen2);
  EXPECT_NE(t2.termination, TraceTermination::large_object);
}

TEST(Trace2d, UnparseableRoundIsCarriedForward) {
  ScriptedGenerator gen({"junk", "junk", "junk", kOuter, kInner, "j"});
  const auto t = generate_trace_2d(sample(), image(), GenPolicy{}, gen);
  ASSERT_EQ(t.rounds.size(), 3u);
  EXPECT_TRUE(t.rounds[0].carried_forward);
  EXPECT_EQ(t.rounds[0].roi, BoxPx::full_frame(kW, kH));
  EXPECT_FALSE(t.rounds[0].proposal.has_value());
  EXPECT_EQ(t.rounds[2].roi, t.gt_box);
  EXPECT_TRUE(t.has_flag(quality_flag::kCarriedForward));
}

TEST(Trace2d, TransportFailureKeepsPartialRecord) {
  CallbackGenerator gen([](const GenRequest&, std::size_t i) -> std::string {
    if (i == 0) return triplet(0.25, 0.25, 0.75, 0.75);
    throw TransportError(TransportErrorKind::status, "forbidden", 403);
  });
  try {
    generate_trace_2d(sample(), image(), GenPolicy{}, gen);
    FAIL();
  } catch (const TraceError& e) {
    EXPECT_EQ(e.partial().id, "s1");
    ASSERT_EQ(e.partial().rounds.size(), 1u);
    EXPECT_EQ(e.partial().rounds[0].roi, (BoxPx{50, 40, 150, 120, kW, kH}));
  }
}

TEST(Trace2d, JustificationFailureIsFlagged) {
  CallbackGenerator gen([](const GenRequest& req, std::size_t i) -> std::string {
    if (req.template_id == prompt_id::kFinalJustification) return "   ";
    return i == 0 ? triplet(0.25, 0.25, 0.75, 0.75) : triplet(0.3, 0.5, 0.5, 0.75);
  });
  const auto t = generate_trace_2d(sample(), image(), GenPolicy{}, gen);
  EXPECT_TRUE(t.has_flag(quality_flag::kJustificationFailed));
  EXPECT_TRUE(t.final_justification.empty());
  EXPECT_EQ(t.termination, TraceTermination::converged);
}

TEST(Trace2d, RejectsFrameMismatchAndBadPolicy) {
  ScriptedGenerator gen({kOuter});
  EXPECT_THROW(generate_trace_2d(sample({0, 0, 10, 10, 100, 100}), image(), GenPolicy{}, gen),
               std::invalid_argument);
  GenPolicy p;
  p.area_ratio_n = 0.5;
  EXPECT_THROW(generate_trace_2d(sample(), image(), p, gen), std::invalid_argument);
}

std::vector<SceneObject> scene() {
  return rank_objects({{1, "Stop Sign", {80, 80, 100, 100, kW, kH}, 0.3, 0, 400},
                       {2, "car", {0, 100, 60, 160, kW, kH}, 0.6, 0, 3600},
                       {3, "tree", {160, 0, 200, 30, kW, kH}, 0.9, 0, 1200}});
}

TEST(Trace3d, ObjectContextNarrowsWithTheView) {
  ScriptedGenerator gen({kOuter, kInner});
  const auto t = generate_trace_3d(sample(), image(), scene(), GenPolicy::depth_aware(), gen);
  ASSERT_EQ(t.rounds.size(), 2u);
  EXPECT_EQ(t.r_max, 4);
  EXPECT_EQ(t.rounds[0].objects.size(), 3u);
  // The second view (50,40)-(150,120) holds the sign and a sliver of the car.
  ASSERT_EQ(t.rounds[1].objects.size(), 2u);
  EXPECT_EQ(t.rounds[1].objects[0].object_id, 1);
  EXPECT_EQ(t.rounds[1].objects[0].depth_rank, 1);
  EXPECT_TRUE(t.scene.has_value());
  const auto reqs = gen.requests();
  EXPECT_EQ(reqs[0].template_id, prompt_id::kRound3d);
  EXPECT_NE(reqs[1].text.find("Stop Sign"), std::string::npos);
  EXPECT_EQ(reqs[1].text.find("tree"), std::string::npos);
}

TEST(Trace3d, SynthesizesQaWhenQuestionMissing) {
  auto s = sample();
  s.question.clear();
  s.short_answer.clear();
  const std::string qa = render_qa({"Which is closer, the car or the tree?", "the car",
                                    "The car is closer than the tree.",
                                    {0.4, 0.5, 0.5, 0.625}, false, BoxUnit::ratio});
  ScriptedGenerator gen({qa, kOuter, kInner});
  const auto t = generate_trace_3d(s, image(), scene(), GenPolicy::depth_aware(), gen);
  EXPECT_TRUE(t.has_flag(quality_flag::kQaGenerated));
  EXPECT_EQ(t.question, "Which is closer, the car or the tree?");
  EXPECT_EQ(t.gt_box, (BoxPx{80, 80, 100, 100, kW, kH}));
  EXPECT_EQ(gen.requests()[0].template_id, prompt_id::kQa3d);
  EXPECT_EQ(t.termination, TraceTermination::converged);
}

TEST(Trace3d, EmptyContextFlagged) {
  ScriptedGenerator gen({triplet(0.4, 0.5, 0.5, 0.625)});
  const auto t = generate_trace_3d(sample(), image(),
                                   rank_objects({{1, "tree", {160, 0, 200, 30, kW, kH}, 0.9, 0, 1200}}),
                                   GenPolicy::depth_aware(), gen);
  EXPECT_EQ(t.rounds.size(), 1u);
  EXPECT_FALSE(t.has_flag(quality_flag::kEmptyObjectContext));
  ScriptedGenerator gen2({kOuter, kInner});
  const auto t2 = generate_trace_3d(sample(), image(),
                                    rank_objects({{1, "tree", {160, 0, 200, 30, kW, kH}, 0.9, 0, 1200}}),
                                    GenPolicy::depth_aware(), gen2);
  EXPECT_TRUE(t2.has_flag(quality_flag::kEmptyObjectContext));
  EXPECT_TRUE(t2.rounds[1].objects.empty());
}

TraceRecord two_round_trace() {
  ScriptedGenerator gen({kOuter, kInner, "j"});
  return generate_trace_2d(sample(), image(), GenPolicy{}, gen);
}

TEST(Distill, SingleRoundPassesThrough) {
  ScriptedGenerator gen({kOuter, "j"});
  const auto t = generate_trace_2d(sample({0, 0, 150, 64, kW, kH}), image(), GenPolicy{}, gen);
  CallbackGenerator never([](const GenRequest&, std::size_t) -> std::string { return "unused"; });
  const auto d = distill_single_round(t, never);
  EXPECT_EQ(d.roi, t.rounds[0].roi);
  EXPECT_EQ(d.description, t.rounds[0].description);
  EXPECT_EQ(never.calls(), 0u);
}

TEST(Distill, RoiIsAlwaysTheFinalRound) {
  const auto t = two_round_trace();
  ScriptedGenerator gen({triplet(0, 0, 1, 1, "A red sign on a pole.")});
  const auto d = distill_single_round(t, gen);
  EXPECT_EQ(d.roi, t.rounds.back().roi);
  EXPECT_EQ(d.description, "A red sign on a pole.");
  EXPECT_EQ(d.round_index, 1);
  EXPECT_NE(gen.requests()[0].text.find("Round 2"), std::string::npos);
}

TEST(Distill, ForbiddenPhraseRetriedOnceThenRejected) {
  const auto t = two_round_trace();
  ScriptedGenerator ok({triplet(0, 0, 1, 1, "After zooming in, a sign."), triplet(0, 0, 1, 1, "A sign.")});
  EXPECT_EQ(distill_single_round(t, ok).description, "A sign.");
  EXPECT_EQ(ok.calls(), 2u);

  ScriptedGenerator bad({triplet(0, 0, 1, 1, "In the second view we crop further.")});
  EXPECT_THROW(distill_single_round(t, bad), DistillError);
  EXPECT_EQ(bad.calls(), 2u);
}

TEST(Forbidden, Phrases) {
  EXPECT_EQ(find_forbidden_phrase("We ZOOM into the corner"), "ZOOM");
  EXPECT_EQ(find_forbidden_phrase("as seen in round 2"), "round 2");
  EXPECT_EQ(find_forbidden_phrase("the previous view showed"), "previous view");
  EXPECT_TRUE(find_forbidden_phrase("the cropped region").has_value());
  EXPECT_FALSE(find_forbidden_phrase("a round table beside a step ladder").has_value());
  EXPECT_FALSE(find_forbidden_phrase("The crowd gathers.").has_value());
}

TEST(ConsistencyFix, RepairsEscapesAndOutOfFrame) {
  auto t = two_round_trace();
  t.rounds[0].roi = {-10, 40, 150, 200, kW, kH};
  t.rounds[1].roi = {70, 70, 170, 110, kW, kH};
  CoTRound d;
  d.roi = BoxPx::full_frame(kW, kH);
  t.distilled = d;
  const auto fixed = consistency_fix(t);
  EXPECT_EQ(fixed.rounds[0].roi, (BoxPx{0, 40, 150, 160, kW, kH}));
  EXPECT_EQ(fixed.rounds[1].roi, (BoxPx{70, 70, 150, 110, kW, kH}));
  EXPECT_TRUE(fixed.rounds[0].repaired);
  EXPECT_TRUE(fixed.rounds[1].repaired);
  EXPECT_EQ(fixed.distilled->roi, fixed.rounds[1].roi);
  EXPECT_EQ(fixed.repair_log.size(), 3u);
  for (std::size_t i = 0; i < fixed.rounds.size(); ++i) {
    EXPECT_TRUE(fixed.rounds[i].roi.contains(fixed.gt_box));
    if (i > 0) EXPECT_TRUE(fixed.rounds[i - 1].roi.contains(fixed.rounds[i].roi));
  }
  const auto again = consistency_fix(fixed);
  EXPECT_EQ(again.repair_log.size(), fixed.repair_log.size());
}

TEST(ConsistencyFix, GtOutsideFrameIsFatal) {
  auto t = two_round_trace();
  t.gt_box = {300, 300, 310, 310, kW, kH};
  EXPECT_THROW(consistency_fix(t), ConsistencyError);
}

}  // namespace
}  // namespace zoomcot
