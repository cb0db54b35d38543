#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bafrcnn/bgda/discriminator.hpp"
#include "bafrcnn/detector/model.hpp"
#include "bafrcnn/eval/metrics.hpp"
#include "bafrcnn/eval/probe.hpp"
#include "bafrcnn/eval/report.hpp"
#include "bafrcnn/harness/config.hpp"
#include "bafrcnn/synthgen/dataset.hpp"
#include "bafrcnn/tensor/optim.hpp"

namespace bafrcnn::harness {

/// Datasets loaded once and shared read-only between runs.
struct TrainingData {
  synthgen::LoadedDataset hc_train, soc_train, hc_test, soc_test, probe;

  /// Loads and validates all five manifests (domains, kinds and image size).
  static TrainingData load(const DatasetPaths& paths, std::size_t image_size);
};

/// One trained model of an ablation.
struct RunSpec {
  std::string experiment = "ablation";
  RunMode mode = RunMode::kBaseline;
  std::uint64_t seed = 0;
  double lambda_da = 0.1;

  [[nodiscard]] std::string label() const;  ///< "<experiment>_<mode>_s<seed>"
};

/// Loss components of one logged step. Keys: rpn_objectness, rpn_box,
/// roi_class, roi_box, then da_instance, da_image, consistency when present.
struct LossRecord {
  std::size_t step = 0;
  std::map<std::string, double> components;
  double total = 0.0;

  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

/// Counters for the two background-restriction guarantees, checked every step.
struct MaskingAudit {
  std::uint64_t masked_cells_checked = 0;
  std::uint64_t masked_cell_violations = 0;  ///< nonzero image-DA gradient on a masked cell
  std::uint64_t proposals_checked = 0;
  std::uint64_t proposal_violations = 0;     ///< HC proposal above the background IoU threshold
  double max_masked_gradient = 0.0;
  double max_selected_iou = 0.0;
};

struct RunMetrics {
  eval::ApResult hc_ap;
  std::optional<double> recall_threshold;  ///< score where HC-test recall reaches target_recall
  double score_threshold = 0.0;            ///< threshold actually applied
  double hc_recall = 0.0;
  double far_at_threshold = 0.0;
  double probe_recall = 0.0;
  double probe_auc = 0.5;
};

struct RunRecord {
  std::string config_hash;
  RunSpec spec;
  std::vector<LossRecord> loss_trace;
  MaskingAudit audit;
  std::optional<RunMetrics> metrics;
  std::string checkpoint_path;
  double wall_clock_seconds = 0.0;
  std::size_t steps_completed = 0;
};

nlohmann::json to_json(const LossRecord& r);
nlohmann::json to_json(const RunMetrics& m);
nlohmann::json to_json(const RunRecord& r);

/// Everything a run updates.
class TrainingState {
 public:
  TrainingState(const ExperimentConfig& config, const RunSpec& spec);

  detector::Detector detector;
  bgda::DomainDiscriminators discriminators;
  tensor::Sgd<float> optimizer;
  std::size_t step = 0;
  std::vector<LossRecord> loss_trace;
  MaskingAudit audit;

  /// Parameters stepped by the optimizer in `mode`.
  [[nodiscard]] std::vector<tensor::Parameter<float>> trainable(RunMode mode) const;
};

struct TrainOptions {
  std::filesystem::path run_dir;                 ///< checkpoints land here when non-empty
  std::optional<std::filesystem::path> resume;   ///< checkpoint to continue from
  std::optional<std::size_t> stop_after;         ///< stop early at this step (for tests)
};

/// Runs the training loop. Throws NumericalError with the step index and loss
/// component on any non-finite loss.
RunRecord train(const ExperimentConfig& config, const RunSpec& spec, const TrainingData& data,
                const TrainOptions& options = {}, TrainingState* state_out = nullptr);

/// Learning rate at `step` (0-based): linear warmup, then step decay.
double learning_rate_at(const ExperimentConfig& config, std::size_t step);

/// Loss components of one training step, without updating anything.
LossRecord training_step(const ExperimentConfig& config, const RunSpec& spec, const TrainingData& data,
                         TrainingState& state, bool apply_update);

/// Checkpoint: tensors in the snapshot format plus a JSON sidecar "<path>.json"
/// carrying the config hash, run identity, step and loss trace.
void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config, const RunSpec& spec,
                     const TrainingState& state);
/// Restores into `state`; ValidationError on a config-hash or identity mismatch.
void load_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config, const RunSpec& spec,
                     TrainingState& state);

/// Identity stored in a checkpoint sidecar.
struct CheckpointInfo {
  std::string config_hash;
  RunSpec spec;
  std::size_t step = 0;
  nlohmann::json config;
};
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

/// Per-image detections over a dataset.
std::vector<std::vector<detector::Detection>> detect_all(const detector::Detector& model,
                                                         const synthgen::LoadedDataset& data);

/// Backbone feature vectors of the usable cells of each image (one group per
/// image): HC images contribute background cells only, SOC images every cell.
std::vector<eval::FeatureGroup> cell_features(const detector::Detector& model, const synthgen::LoadedDataset& data);

/// HC-test AP, recall-matched threshold, SOC FAR, probe recall and domain-probe AUC.
RunMetrics evaluate_model(const detector::Detector& model, const TrainingData& data, double target_recall,
                          std::uint64_t probe_seed);

/// Metric rows (one per class) for the CSV.
std::vector<eval::MetricsRow> metrics_rows(const RunRecord& record);

}  // namespace bafrcnn::harness
