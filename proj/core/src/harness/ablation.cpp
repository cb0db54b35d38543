#include "bafrcnn/harness/ablation.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "bafrcnn/common/error.hpp"

namespace bafrcnn::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// Mean and sample standard deviation; spread is 0 for a single value.
std::string mean_spread(const std::vector<double>& v) {
  if (v.empty()) return "gap";
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double spread = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
  return fmt("%.3f", mean) + "+-" + fmt("%.3f", spread);
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::vector<RunSpec> ablation_runs(const ExperimentConfig& config) {
  std::vector<RunSpec> runs;
  for (RunMode m : config.run_modes()) {
    for (std::uint64_t seed : config.seeds) runs.push_back({config.name, m, seed, config.lambda_da});
  }
  if (config.lambda_zero_run) {
    for (std::uint64_t seed : config.seeds) runs.push_back({config.name + "_lambda0", RunMode::kFull, seed, 0.0});
  }
  return runs;
}

void write_run_artifacts(const fs::path& run_dir, const RunRecord& record) {
  fs::create_directories(run_dir);
  write_text(run_dir / "run.json", to_json(record).dump(1) + "\n");
  if (!record.metrics) return;
  eval::write_pr_csv(run_dir / "pr.csv", record.metrics->hc_ap, record.config_hash);
  write_text(run_dir / "pr.svg",
             eval::pr_curves_svg(record.metrics->hc_ap, record.spec.label() + " HC test", record.config_hash));
}

std::string format_report(const std::string& config_hash, const std::vector<RunOutcome>& runs) {
  struct Cell {
    std::vector<double> ap[detector::kNumThreatClasses];
    std::vector<double> map, far, recall, auc;
    std::size_t ok = 0, total = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, Cell> cells;
  for (const auto& r : runs) {
    const std::string key = r.spec.experiment + " " + std::string(to_string(r.spec.mode));
    if (!cells.count(key)) order.push_back(key);
    Cell& c = cells[key];
    ++c.total;
    if (!r.record || !r.record->metrics) continue;
    const RunMetrics& m = *r.record->metrics;
    ++c.ok;
    for (const auto& ca : m.hc_ap.classes) {
      if (ca.ap) c.ap[ca.class_id - 1].push_back(*ca.ap);
    }
    c.map.push_back(m.hc_ap.map);
    c.far.push_back(m.far_at_threshold);
    c.recall.push_back(m.probe_recall);
    c.auc.push_back(m.probe_auc);
  }

  constexpr std::size_t kName = 34, kCol = 14;
  std::ostringstream s;
  s << "config_hash " << config_hash << "\n";
  s << "HC test AP per class, SOC false alarms per image, injected-threat probe recall and domain probe AUC\n";
  s << "cells: mean+-sample spread over seeds\n\n";
  s << pad("experiment / mode", kName) << pad("runs", 6);
  for (int k = 1; k <= detector::kNumThreatClasses; ++k) s << pad(std::string(detector::class_name(k)), kCol);
  s << pad("mAP", kCol) << pad("FAR", kCol) << pad("probe_recall", kCol) << "probe_auc\n";
  for (const auto& key : order) {
    const Cell& c = cells[key];
    s << pad(key, kName) << pad(std::to_string(c.ok) + "/" + std::to_string(c.total), 6);
    for (const auto& ap : c.ap) s << pad(mean_spread(ap), kCol);
    s << pad(mean_spread(c.map), kCol) << pad(mean_spread(c.far), kCol) << pad(mean_spread(c.recall), kCol)
      << mean_spread(c.auc) << "\n";
  }
  bool header = false;
  for (const auto& r : runs) {
    if (r.record && r.record->metrics) continue;
    if (!header) s << "\ngaps:\n";
    header = true;
    s << "  " << r.spec.label() << ": " << (r.error.empty() ? "no metrics" : r.error) << "\n";
  }
  return s.str();
}

AblationResult run_ablation(const ExperimentConfig& config, const TrainingData& data, const fs::path& out_dir,
                            std::size_t parallel, const ProgressFn& progress) {
  config.validate();
  AblationResult result;
  result.config_hash = config_hash(config);
  const auto specs = ablation_runs(config);
  result.runs.resize(specs.size());
  fs::create_directories(out_dir / "runs");

  std::mutex log_mutex;
  auto log = [&](const std::string& msg) {
    if (!progress) return;
    const std::lock_guard lock(log_mutex);
    progress(msg);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      RunOutcome& out = result.runs[i];
      out.spec = specs[i];
      const fs::path run_dir = out_dir / "runs" / out.spec.label();
      log("start " + out.spec.label());
      try {
        out.record = train(config, out.spec, data, TrainOptions{run_dir, std::nullopt, std::nullopt});
        write_run_artifacts(run_dir, *out.record);
        const auto& m = *out.record->metrics;
        log("done  " + out.spec.label() + fmt(" map %.3f", m.hc_ap.map) + fmt(" far %.3f", m.far_at_threshold) +
            fmt(" probe_recall %.3f", m.probe_recall) + fmt(" probe_auc %.3f", m.probe_auc) +
            fmt(" (%.0fs)", out.record->wall_clock_seconds));
      } catch (const std::exception& e) {
        out.record.reset();
        out.error = e.what();
        log("FAILED " + out.spec.label() + ": " + out.error);
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(parallel, specs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& r : result.runs) {
    if (!r.record) continue;
    const auto rows = metrics_rows(*r.record);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  result.report = format_report(result.config_hash, result.runs);
  eval::write_metrics_csv(out_dir / "metrics.csv", result.rows);
  write_text(out_dir / "report.txt", result.report);
  write_text(out_dir / "metrics.svg", eval::metrics_svg(result.rows, config.name + " HC test AP"));
  write_text(out_dir / "experiment.json",
             json{{"config_hash", result.config_hash}, {"config", config}}.dump(1) + "\n");
  return result;
}

std::vector<eval::MetricsRow> evaluate_checkpoint(const fs::path& checkpoint, const fs::path& manifest) {
  const CheckpointInfo info = read_checkpoint_info(checkpoint);
  ExperimentConfig config;
  try {
    from_json(info.config, config);
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint " + checkpoint.string() + ": bad embedded config: " + e.what());
  }
  TrainingState state(config, info.spec);
  load_checkpoint(checkpoint, config, info.spec, state);
  const synthgen::LoadedDataset data = synthgen::load_dataset(manifest);
  if (data.height != config.detector.image_size || data.width != config.detector.image_size) {
    throw ValidationError("dataset " + manifest.string() + ": images are " + std::to_string(data.height) + "x" +
                          std::to_string(data.width) + ", detector expects " +
                          std::to_string(config.detector.image_size));
  }

  std::vector<std::vector<detector::Annotation>> gt;
  for (const auto& s : data.manifest.samples) gt.push_back(s.annotations);
  const auto dets = detect_all(state.detector, data);
  const double thr = config.detector.score_threshold;
  const eval::ApResult ap = eval::evaluate_ap(dets, gt);
  std::size_t false_alarms = 0, num_gt = 0;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const auto match = eval::match_detections(dets[i], gt[i]);
    for (std::size_t k = 0; k < dets[i].size(); ++k) {
      false_alarms += !match.true_positive[k] && static_cast<double>(dets[i][k].score) >= thr;
    }
    num_gt += gt[i].size();
  }
  std::optional<double> recall;
  if (num_gt > 0) recall = eval::recall_at_threshold(dets, gt, thr);

  std::vector<eval::MetricsRow> rows;
  for (const auto& c : ap.classes) {
    eval::MetricsRow row;
    row.experiment = info.spec.experiment;
    row.mode = std::string(to_string(info.spec.mode));
    row.seed = info.spec.seed;
    row.class_name = std::string(detector::class_name(c.class_id));
    row.ap = c.ap;
    row.map = ap.map;
    row.far_at_threshold = dets.empty() ? 0.0 : static_cast<double>(false_alarms) / static_cast<double>(dets.size());
    row.probe_recall = recall;
    row.score_threshold = thr;
    row.config_hash = info.config_hash;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bafrcnn::harness
