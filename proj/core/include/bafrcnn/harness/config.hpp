#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bafrcnn/bgda/losses.hpp"
#include "bafrcnn/detector/config.hpp"

namespace bafrcnn::harness {

/// naive_negatives trains on SOC images as all-background samples with no DA terms.
enum class RunMode { kBaseline, kNaiveNegatives, kInstance, kFull };

inline constexpr RunMode kAllModes[] = {RunMode::kBaseline, RunMode::kNaiveNegatives, RunMode::kInstance,
                                        RunMode::kFull};

std::string_view to_string(RunMode m) noexcept;
/// Throws ValidationError for anything but baseline, naive_negatives, instance, full.
RunMode parse_run_mode(std::string_view s);
bgda::DaMode da_mode(RunMode m) noexcept;
/// Whether SOC images are drawn at all.
inline bool uses_soc(RunMode m) noexcept { return m != RunMode::kBaseline; }

/// Manifest paths written by gen-data.
struct DatasetPaths {
  std::string hc_train, soc_train, hc_test, soc_test, probe;

  /// Points every path at <dir>/<subset>.json.
  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

struct ExperimentConfig {
  std::string name = "ablation";
  DatasetPaths data;
  detector::DetectorConfig detector;
  std::size_t image_hidden = 16;     ///< image discriminator width
  std::size_t instance_hidden = 64;  ///< instance discriminator width

  double lambda_da = 0.1;
  double grl_weight = 0.1;
  double iou_bg_threshold = 0.01;

  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t warmup_steps = 200;
  std::vector<std::size_t> lr_decay_steps = {6000};
  double lr_decay_factor = 0.1;
  std::size_t total_steps = 8000;
  std::size_t hc_per_step = 1;
  std::size_t soc_per_step = 1;
  bool soc_roi_loss = true;

  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::vector<std::string> modes = {"baseline", "naive_negatives", "instance", "full"};
  bool lambda_zero_run = true;  ///< extra full-mode experiment with lambda_da = 0
  double target_recall = 0.9;   ///< operating point for FAR and probe recall

  std::string output_dir = "runs";
  std::size_t log_interval = 100;
  std::size_t checkpoint_interval = 2000;
  std::size_t parallel = 1;

  /// Throws ValidationError naming the first bad field.
  void validate() const;
  [[nodiscard]] std::vector<RunMode> run_modes() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Rejects unknown top-level keys; omitted keys keep their defaults.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// 16 hex digits over the canonical JSON form; parallel and output_dir are
/// excluded since they do not affect results.
std::string config_hash(const ExperimentConfig& c);

/// Relative data paths resolve against the config file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const std::filesystem::path& path, const ExperimentConfig& c);

}  // namespace bafrcnn::harness
