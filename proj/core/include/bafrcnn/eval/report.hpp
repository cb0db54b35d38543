#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bafrcnn/eval/metrics.hpp"

namespace bafrcnn::eval {

/// One row per (experiment, mode, seed, class).
struct MetricsRow {
  std::string experiment;
  std::string mode;
  std::uint64_t seed = 0;
  std::string class_name;    ///< Knives, Blunts, Guns or LAGs
  std::optional<double> ap;  ///< empty cell when the class has no gt
  double map = 0.0;
  double far_at_threshold = 0.0;
  std::optional<double> probe_recall;
  std::optional<double> probe_auc;
  double score_threshold = 0.0;
  std::string config_hash;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

inline constexpr const char* kMetricsHeader =
    "experiment,mode,seed,class,ap,map,far_at_threshold,probe_recall,probe_auc,score_threshold,config_hash";

/// Fixed six-decimal formatting so identical inputs give identical bytes.
std::string format_metrics_csv(const std::vector<MetricsRow>& rows);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

/// class,recall,precision,config_hash points of every class curve.
void write_pr_csv(const std::filesystem::path& path, const ApResult& result, const std::string& config_hash);

/// Line plot of per-class PR curves; the hash is embedded as an XML comment.
std::string pr_curves_svg(const ApResult& result, const std::string& title, const std::string& config_hash);

/// Grouped bars: mean AP per class (and mAP) for each mode, averaged over seeds.
/// Every distinct config hash of `rows` is embedded as an XML comment.
std::string metrics_svg(const std::vector<MetricsRow>& rows, const std::string& title);

}  // namespace bafrcnn::eval
