#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "bafrcnn/common/error.hpp"
#include "bafrcnn/common/rng.hpp"
#include "bafrcnn/eval/metrics.hpp"
#include "bafrcnn/eval/probe.hpp"
#include "bafrcnn/eval/report.hpp"
#include "support/oracles.hpp"

using namespace bafrcnn;
using detector::Annotation;
using detector::Box;
using detector::Detection;
using eval::RankedMatch;

namespace {

Box random_box(Rng& rng, double extent = 20.0) {
  const double x = rng.uniform(0, extent), y = rng.uniform(0, extent);
  return Box{x, y, x + rng.uniform(2, 10), y + rng.uniform(2, 10)};
}

// Boxes drawn near a small set of centers so IoU >= 0.5 happens often.
Box jittered(Rng& rng, const Box& base) {
  const double j = 1.0;
  return Box{base.x_min + rng.uniform(-j, j), base.y_min + rng.uniform(-j, j), base.x_max + rng.uniform(-j, j) + 2 * j,
             base.y_max + rng.uniform(-j, j) + 2 * j};
}

using bafrcnn::testing::reference_ap;
using bafrcnn::testing::reference_match;

std::vector<RankedMatch> ranked_from(const std::vector<bool>& tp) {
  std::vector<RankedMatch> r;
  for (std::size_t i = 0; i < tp.size(); ++i) r.push_back({1.0 - 0.1 * static_cast<double>(i), tp[i], 0, i});
  return r;
}

}  // namespace

TEST(Match, ExactDetectionsAreAllTruePositives) {
  const std::vector<Annotation> gt = {{1, {0, 0, 10, 10}}, {3, {20, 20, 30, 34}}};
  const std::vector<Detection> dets = {{1, 0.9f, gt[0].box}, {3, 0.8f, gt[1].box}};
  const auto m = eval::match_detections(dets, gt);
  EXPECT_EQ(m.true_positive, (std::vector<bool>{true, true}));
  EXPECT_EQ(m.gt_matched, (std::vector<bool>{true, true}));
}

TEST(Match, SecondDetectionOnSameGtIsFalsePositive) {
  const std::vector<Annotation> gt = {{2, {0, 0, 10, 10}}};
  const std::vector<Detection> dets = {{2, 0.9f, {0, 0, 10, 10}}, {2, 0.7f, {0, 0, 10, 11}}};
  const auto m = eval::match_detections(dets, gt);
  EXPECT_EQ(m.true_positive, (std::vector<bool>{true, false}));
}

TEST(Match, ClassMustAgree) {
  const std::vector<Annotation> gt = {{2, {0, 0, 10, 10}}};
  const std::vector<Detection> dets = {{1, 0.9f, {0, 0, 10, 10}}};
  EXPECT_FALSE(eval::match_detections(dets, gt).true_positive[0]);
}

TEST(Match, RejectsUnsortedDetections) {
  const std::vector<Detection> dets = {{1, 0.2f, {0, 0, 1, 1}}, {1, 0.5f, {0, 0, 1, 1}}};
  EXPECT_THROW(eval::match_detections(dets, {}), std::invalid_argument);
}

TEST(Match, EqualsReferenceOnRandomInstances) {
  Rng rng(77);
  int trials_with_tp = 0;
  for (int t = 0; t < 3000; ++t) {
    std::vector<Annotation> gt;
    const auto ngt = rng.uniform_int(0, 3);
    for (int g = 0; g < ngt; ++g) gt.push_back({static_cast<int>(rng.uniform_int(1, 2)), random_box(rng)});
    std::vector<Detection> dets;
    const auto nd = rng.uniform_int(0, 6);
    for (int d = 0; d < nd; ++d) {
      int cls = static_cast<int>(rng.uniform_int(1, 2));
      Box b = random_box(rng);
      if (!gt.empty() && rng.bernoulli(0.7)) {
        const auto& target = gt[rng.index(gt.size())];
        b = jittered(rng, target.box);
        if (rng.bernoulli(0.8)) cls = target.class_id;
      }
      // Coarse scores so ties occur.
      dets.push_back({cls, static_cast<float>(rng.uniform_int(0, 4)) / 4.0f, b});
    }
    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
    const auto got = eval::match_detections(dets, gt);
    const auto want = reference_match(dets, gt, 0.5);
    ASSERT_EQ(got.true_positive, want.true_positive) << "trial " << t;
    ASSERT_EQ(got.gt_matched, want.gt_matched) << "trial " << t;
    trials_with_tp += std::count(want.true_positive.begin(), want.true_positive.end(), true) > 0;
  }
  EXPECT_GT(trials_with_tp, 800);
}

TEST(AveragePrecision, Examples) {
  EXPECT_DOUBLE_EQ(eval::average_precision(ranked_from({true, true}), 2), 1.0);
  EXPECT_DOUBLE_EQ(eval::average_precision({}, 3), 0.0);
  EXPECT_DOUBLE_EQ(eval::average_precision(ranked_from({false, true}), 1), 0.5);
  EXPECT_THROW(eval::average_precision({}, 0), std::invalid_argument);
}

TEST(AveragePrecision, EqualsReferenceOnRandomRankings) {
  Rng rng(5);
  for (int t = 0; t < 5000; ++t) {
    const auto n = rng.uniform_int(0, 6);
    std::vector<bool> tp;
    for (int i = 0; i < n; ++i) tp.push_back(rng.bernoulli(0.5));
    const auto hits = static_cast<std::size_t>(std::count(tp.begin(), tp.end(), true));
    const std::size_t num_gt = hits + static_cast<std::size_t>(rng.uniform_int(hits == 0 ? 1 : 0, 3));
    ASSERT_NEAR(eval::average_precision(ranked_from(tp), num_gt), reference_ap(tp, num_gt), 1e-9) << "trial " << t;
  }
}

TEST(AveragePrecision, EnvelopeIsNonIncreasing) {
  Rng rng(6);
  for (int t = 0; t < 500; ++t) {
    std::vector<bool> tp;
    for (int i = 0; i < 20; ++i) tp.push_back(rng.bernoulli(0.4));
    const auto curve = eval::precision_recall(ranked_from(tp), 25);
    const auto env = eval::precision_envelope(curve);
    for (std::size_t k = 1; k < env.size(); ++k) {
      ASSERT_LE(env[k], env[k - 1]);
      ASSERT_GE(curve.recall[k], curve.recall[k - 1]);
    }
    for (std::size_t k = 0; k < env.size(); ++k) {
      ASSERT_GE(env[k], curve.precision[k]);
      ASSERT_LE(env[k], 1.0);
    }
  }
}

TEST(AveragePrecision, TiedScoresPermutationInvariant) {
  Rng rng(8);
  for (int t = 0; t < 300; ++t) {
    std::vector<RankedMatch> m;
    for (std::size_t i = 0; i < 12; ++i) {
      m.push_back({static_cast<double>(rng.uniform_int(0, 3)), rng.bernoulli(0.5), rng.index(3), i});
    }
    auto a = m;
    eval::rank_matches(a);
    for (std::size_t i = m.size() - 1; i > 0; --i) std::swap(m[i], m[rng.index(i + 1)]);
    eval::rank_matches(m);
    ASSERT_EQ(eval::average_precision(a, 10), eval::average_precision(m, 10));
  }
}

TEST(AveragePrecision, TopTruePositiveAndBottomFalsePositiveMonotone) {
  Rng rng(9);
  for (int t = 0; t < 1000; ++t) {
    std::vector<bool> tp;
    const auto n = rng.uniform_int(0, 8);
    for (int i = 0; i < n; ++i) tp.push_back(rng.bernoulli(0.5));
    const std::size_t num_gt = static_cast<std::size_t>(std::count(tp.begin(), tp.end(), true)) + 2;
    const double base = eval::average_precision(ranked_from(tp), num_gt);
    auto with_top = tp;
    with_top.insert(with_top.begin(), true);
    EXPECT_GE(eval::average_precision(ranked_from(with_top), num_gt), base - 1e-12);
    auto with_bottom = tp;
    with_bottom.push_back(false);
    EXPECT_LE(eval::average_precision(ranked_from(with_bottom), num_gt), base + 1e-12);
  }
}

TEST(EvaluateAp, ClassesWithoutGtAreExcluded) {
  const std::vector<std::vector<Annotation>> gt = {{{1, {0, 0, 10, 10}}}, {{3, {5, 5, 20, 20}}}};
  const std::vector<std::vector<Detection>> dets = {{{1, 0.9f, {0, 0, 10, 10}}}, {}};
  const auto r = eval::evaluate_ap(dets, gt);
  ASSERT_EQ(r.classes.size(), 4u);
  EXPECT_EQ(r.excluded, (std::vector<int>{2, 4}));
  EXPECT_DOUBLE_EQ(*r.classes[0].ap, 1.0);
  EXPECT_DOUBLE_EQ(*r.classes[2].ap, 0.0);
  EXPECT_FALSE(r.classes[1].ap.has_value());
  EXPECT_DOUBLE_EQ(r.map, 0.5);
}

TEST(FalseAlarm, Examples) {
  std::vector<std::vector<Detection>> dets(500);
  EXPECT_DOUBLE_EQ(eval::false_alarm_rate(dets, 0.5), 0.0);
  for (int i = 0; i < 50; ++i) dets[static_cast<std::size_t>(i * 7)].push_back({1, 0.8f, {0, 0, 4, 4}});
  dets[3].push_back({2, 0.3f, {0, 0, 4, 4}});  // below threshold
  EXPECT_DOUBLE_EQ(eval::false_alarm_rate(dets, 0.5), 0.1);
  EXPECT_DOUBLE_EQ(eval::false_alarm_rate(dets, 1.0 + 1e-9), 0.0);
}

TEST(Threshold, RecallMatchedThreshold) {
  const std::vector<std::vector<Annotation>> gt = {{{1, {0, 0, 10, 10}}, {2, {20, 20, 30, 30}}}};
  const std::vector<std::vector<Detection>> dets = {
      {{1, 0.9f, {0, 0, 10, 10}}, {4, 0.6f, {40, 40, 50, 50}}, {2, 0.4f, {20, 20, 30, 30}}}};
  EXPECT_FLOAT_EQ(static_cast<float>(*eval::threshold_for_recall(dets, gt, 0.5)), 0.9f);
  EXPECT_FLOAT_EQ(static_cast<float>(*eval::threshold_for_recall(dets, gt, 0.9)), 0.4f);
  EXPECT_DOUBLE_EQ(eval::recall_at_threshold(dets, gt, 0.5), 0.5);
  const std::vector<std::vector<Detection>> none(1);
  EXPECT_FALSE(eval::threshold_for_recall(none, gt, 0.5).has_value());
}

TEST(Probe, AucCountsTiesAsHalf) {
  EXPECT_DOUBLE_EQ(eval::roc_auc(std::vector<double>{2, 3}, std::vector<double>{0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(eval::roc_auc(std::vector<double>{1}, std::vector<double>{1}), 0.5);
  EXPECT_DOUBLE_EQ(eval::roc_auc(std::vector<double>{1, 3}, std::vector<double>{2}), 0.5);
}

TEST(Probe, SameDistributionGivesChanceAuc) {
  Rng rng(21);
  std::vector<std::vector<double>> a, b;
  for (int i = 0; i < 4000; ++i) {
    for (auto* g : {&a, &b}) {
      std::vector<double> row(8);
      for (double& v : row) v = rng.normal();
      g->push_back(std::move(row));
    }
  }
  const double auc = eval::domain_probe_auc(a, b, 3);
  EXPECT_GE(auc, 0.45);
  EXPECT_LE(auc, 0.55);
}

TEST(Probe, OneHotDomainGivesPerfectAuc) {
  std::vector<std::vector<double>> a(50, {1.0, 0.0}), b(60, {0.0, 1.0});
  EXPECT_DOUBLE_EQ(eval::domain_probe_auc(a, b, 1), 1.0);
}

TEST(Probe, RejectsDegenerateInput) {
  const std::vector<std::vector<double>> rows(10, {1.0});
  EXPECT_THROW(eval::fit_logistic(rows, std::vector<int>(10, 1)), ValidationError);
  EXPECT_THROW(eval::domain_probe_auc(rows, std::vector<std::vector<double>>(3, {0.0})), ValidationError);
}

TEST(Report, MetricsCsvRoundTrip) {
  std::vector<eval::MetricsRow> rows = {
      {"ablation", "full", 2, "Knives", 0.8125, 0.7, 0.25, 0.875, 0.61, 0.42, "00ff"},
      {"ablation", "full", 2, "Blunts", std::nullopt, 0.7, 0.25, std::nullopt, std::nullopt, 0.42, "00ff"}};
  const auto path = std::filesystem::temp_directory_path() / "bafrcnn_eval_metrics.csv";
  eval::write_metrics_csv(path, rows);
  EXPECT_EQ(eval::read_metrics_csv(path), rows);
  EXPECT_EQ(eval::format_metrics_csv(rows), eval::format_metrics_csv(eval::read_metrics_csv(path)));
  std::filesystem::remove(path);
}

TEST(Report, SvgMentionsEverySeries) {
  const std::vector<std::vector<Annotation>> gt = {{{1, {0, 0, 10, 10}}}};
  const std::vector<std::vector<Detection>> dets = {{{1, 0.9f, {0, 0, 10, 10}}}};
  const std::string pr = eval::pr_curves_svg(eval::evaluate_ap(dets, gt), "HC test", "abc123");
  EXPECT_NE(pr.find("<polyline"), std::string::npos);
  EXPECT_NE(pr.find("config_hash: abc123"), std::string::npos);
  EXPECT_NE(pr.find("Knives AP 1.000"), std::string::npos);
  const std::vector<eval::MetricsRow> rows = {{"a", "baseline", 0, "Guns", 0.5, 0.5, 0, 0.5, 0.5, 0.1, "x"}};
  const std::string bars = eval::metrics_svg(rows, "mAP");
  EXPECT_NE(bars.find("a/baseline"), std::string::npos);
  EXPECT_NE(bars.find("config_hash: x "), std::string::npos);
  EXPECT_NE(bars.find("</svg>"), std::string::npos);
}
