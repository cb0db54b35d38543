#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bafrcnn/detector/types.hpp"

namespace bafrcnn::eval {

using detector::Annotation;
using detector::Detection;

inline constexpr double kMatchIou = 0.5;

struct MatchResult {
  std::vector<bool> true_positive;  ///< per detection
  std::vector<bool> gt_matched;     ///< per gt
};

/// Greedy matching for one image. Detections must be sorted by descending
/// score (std::invalid_argument otherwise); each takes the highest-IoU
/// unmatched gt of its class with IoU >= iou_match (ties: lower gt index).
MatchResult match_detections(std::span<const Detection> detections, std::span<const Annotation> gt,
                             double iou_match = kMatchIou);

/// One ranked detection of a class, pooled across images.
struct RankedMatch {
  double score = 0.0;
  bool true_positive = false;
  std::size_t image = 0;
  std::size_t index = 0;  ///< position within its image's detection list
};

/// Orders by descending score, then ascending image, then ascending index.
void rank_matches(std::vector<RankedMatch>& matches);

struct PRCurve {
  std::vector<double> recall;
  std::vector<double> precision;
};

/// Raw precision/recall after each ranked detection (input already ranked).
PRCurve precision_recall(std::span<const RankedMatch> ranked, std::size_t num_gt);

/// Interpolated precision: max precision at this or any later rank.
std::vector<double> precision_envelope(const PRCurve& curve);

/// All-point interpolated AP: sum over recall steps of the precision envelope
/// max_{r' >= r} p(r'). Requires num_gt > 0.
double average_precision(std::span<const RankedMatch> ranked, std::size_t num_gt);

struct ClassAp {
  int class_id = 0;
  std::size_t num_gt = 0;
  std::optional<double> ap;  ///< absent (flagged) when the class has no gt
  PRCurve curve;
};

struct ApResult {
  std::vector<ClassAp> classes;  ///< class ids 1..K in order
  double map = 0.0;              ///< mean over classes that have gt
  std::vector<int> excluded;     ///< classes without gt
};

/// Per-class AP over a test set; images are indexed by position.
ApResult evaluate_ap(std::span<const std::vector<Detection>> detections, std::span<const std::vector<Annotation>> gt,
                     double iou_match = kMatchIou);

/// Mean number of detections with score >= threshold per image.
double false_alarm_rate(std::span<const std::vector<Detection>> detections, double score_threshold);

/// Fraction of gt (all classes) matched by detections scoring >= threshold.
double recall_at_threshold(std::span<const std::vector<Detection>> detections,
                           std::span<const std::vector<Annotation>> gt, double score_threshold,
                           double iou_match = kMatchIou);

/// Highest score threshold at which class-pooled recall reaches `target`;
/// absent when the detections never reach it.
std::optional<double> threshold_for_recall(std::span<const std::vector<Detection>> detections,
                                           std::span<const std::vector<Annotation>> gt, double target,
                                           double iou_match = kMatchIou);

}  // namespace bafrcnn::eval
