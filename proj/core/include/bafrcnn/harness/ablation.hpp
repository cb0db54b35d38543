#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bafrcnn/eval/report.hpp"
#include "bafrcnn/harness/config.hpp"
#include "bafrcnn/harness/train.hpp"

namespace bafrcnn::harness {

/// Outcome of one run inside an ablation; `error` is set when the run failed.
struct RunOutcome {
  RunSpec spec;
  std::optional<RunRecord> record;
  std::string error;
};

struct AblationResult {
  std::string config_hash;
  std::vector<RunOutcome> runs;  ///< in ablation_runs order
  std::vector<eval::MetricsRow> rows;
  std::string report;
};

using ProgressFn = std::function<void(const std::string&)>;

/// modes x seeds for config.name, then full mode with lambda_da = 0 under
/// "<name>_lambda0" when lambda_zero_run is set.
std::vector<RunSpec> ablation_runs(const ExperimentConfig& config);

/// Trains every run (at most `parallel` at a time), evaluates it and writes
/// metrics.csv, report.txt, metrics.svg, config.json and runs/<label>/ under
/// `out_dir`. Failed runs are recorded and the rest continue.
AblationResult run_ablation(const ExperimentConfig& config, const TrainingData& data,
                            const std::filesystem::path& out_dir, std::size_t parallel, const ProgressFn& progress = {});

/// Per-mode table with mean and sample spread over seeds for each class AP,
/// mAP, FAR, probe recall and probe AUC. Missing runs are listed as gaps.
std::string format_report(const std::string& config_hash, const std::vector<RunOutcome>& runs);

/// Writes run.json, pr.csv and pr.svg for a finished run.
void write_run_artifacts(const std::filesystem::path& run_dir, const RunRecord& record);

/// Evaluates a checkpoint on one manifest at the checkpoint config's detector
/// score threshold. Annotated manifests give per-class AP and recall; the
/// false-alarm rate counts unmatched detections per image.
std::vector<eval::MetricsRow> evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                                  const std::filesystem::path& manifest);

}  // namespace bafrcnn::harness
