#include "bafrcnn/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "bafrcnn/common/error.hpp"
#include "bafrcnn/common/hex.hpp"
#include "bafrcnn/common/json_fields.hpp"
#include "bafrcnn/common/rng.hpp"

namespace bafrcnn::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(RunMode m) noexcept {
  switch (m) {
    case RunMode::kBaseline: return "baseline";
    case RunMode::kNaiveNegatives: return "naive_negatives";
    case RunMode::kInstance: return "instance";
    case RunMode::kFull: return "full";
  }
  return "?";
}

RunMode parse_run_mode(std::string_view s) {
  for (RunMode m : kAllModes) {
    if (s == to_string(m)) return m;
  }
  throw ValidationError("unknown mode '" + std::string(s) + "' (expected baseline, naive_negatives, instance, full)");
}

bgda::DaMode da_mode(RunMode m) noexcept {
  switch (m) {
    case RunMode::kInstance: return bgda::DaMode::kInstance;
    case RunMode::kFull: return bgda::DaMode::kFull;
    default: return bgda::DaMode::kBaseline;
  }
}

DatasetPaths DatasetPaths::in_directory(const fs::path& dir) {
  auto p = [&](const char* name) { return (dir / (std::string(name) + ".json")).string(); };
  return {p("hc_train"), p("soc_train"), p("hc_test"), p("soc_test"), p("probe")};
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError("config: " + msg); };
  try {
    detector.validate();
  } catch (const std::invalid_argument& e) {
    fail(std::string("detector: ") + e.what());
  }
  if (!(lambda_da >= 0.0) || !std::isfinite(lambda_da)) fail("lambda_da must be finite and >= 0");
  if (!(grl_weight >= 0.0) || !std::isfinite(grl_weight)) fail("grl_weight must be finite and >= 0");
  if (!(iou_bg_threshold >= 0.0 && iou_bg_threshold <= 1.0)) fail("iou_bg_threshold must lie in [0, 1]");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be finite and > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) fail("lr_decay_factor must lie in (0, 1]");
  if (total_steps == 0) fail("total_steps must be positive");
  if (hc_per_step == 0) fail("hc_per_step must be positive");
  if (soc_per_step == 0) fail("soc_per_step must be positive");
  if (seeds.empty()) fail("seeds must not be empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) fail("seeds must be distinct");
  if (modes.empty()) fail("modes must not be empty");
  std::set<std::string> seen;
  for (const auto& m : modes) {
    parse_run_mode(m);
    if (!seen.insert(m).second) fail("mode '" + m + "' listed twice");
  }
  if (!(target_recall > 0.0 && target_recall <= 1.0)) fail("target_recall must lie in (0, 1]");
  if (log_interval == 0) fail("log_interval must be positive");
  if (parallel == 0) fail("parallel must be positive");
  if (image_hidden == 0 || instance_hidden == 0) fail("discriminator widths must be positive");
}

std::vector<RunMode> ExperimentConfig::run_modes() const {
  std::vector<RunMode> out;
  for (const auto& m : modes) out.push_back(parse_run_mode(m));
  return out;
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"name", c.name},
           {"data",
            {{"hc_train", c.data.hc_train},
             {"soc_train", c.data.soc_train},
             {"hc_test", c.data.hc_test},
             {"soc_test", c.data.soc_test},
             {"probe", c.data.probe}}},
           {"detector", c.detector},
           {"image_hidden", c.image_hidden},
           {"instance_hidden", c.instance_hidden},
           {"lambda_da", c.lambda_da},
           {"grl_weight", c.grl_weight},
           {"iou_bg_threshold", c.iou_bg_threshold},
           {"learning_rate", c.learning_rate},
           {"momentum", c.momentum},
           {"warmup_steps", c.warmup_steps},
           {"lr_decay_steps", c.lr_decay_steps},
           {"lr_decay_factor", c.lr_decay_factor},
           {"total_steps", c.total_steps},
           {"hc_per_step", c.hc_per_step},
           {"soc_per_step", c.soc_per_step},
           {"soc_roi_loss", c.soc_roi_loss},
           {"seeds", c.seeds},
           {"modes", c.modes},
           {"lambda_zero_run", c.lambda_zero_run},
           {"target_recall", c.target_recall},
           {"output_dir", c.output_dir},
           {"log_interval", c.log_interval},
           {"checkpoint_interval", c.checkpoint_interval},
           {"parallel", c.parallel}};
}

void from_json(const json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  const json reference = ExperimentConfig{};
  for (const auto& [key, value] : j.items()) {
    if (!reference.contains(key)) throw ValidationError("config: unknown field '" + key + "'");
  }
  try {
    read_field(j, "name", c.name);
    if (auto it = j.find("data"); it != j.end()) {
      read_field(*it, "hc_train", c.data.hc_train);
      read_field(*it, "soc_train", c.data.soc_train);
      read_field(*it, "hc_test", c.data.hc_test);
      read_field(*it, "soc_test", c.data.soc_test);
      read_field(*it, "probe", c.data.probe);
    }
    read_field(j, "detector", c.detector);
    read_field(j, "image_hidden", c.image_hidden);
    read_field(j, "instance_hidden", c.instance_hidden);
    read_field(j, "lambda_da", c.lambda_da);
    read_field(j, "grl_weight", c.grl_weight);
    read_field(j, "iou_bg_threshold", c.iou_bg_threshold);
    read_field(j, "learning_rate", c.learning_rate);
    read_field(j, "momentum", c.momentum);
    read_field(j, "warmup_steps", c.warmup_steps);
    read_field(j, "lr_decay_steps", c.lr_decay_steps);
    read_field(j, "lr_decay_factor", c.lr_decay_factor);
    read_field(j, "total_steps", c.total_steps);
    read_field(j, "hc_per_step", c.hc_per_step);
    read_field(j, "soc_per_step", c.soc_per_step);
    read_field(j, "soc_roi_loss", c.soc_roi_loss);
    read_field(j, "seeds", c.seeds);
    read_field(j, "modes", c.modes);
    read_field(j, "lambda_zero_run", c.lambda_zero_run);
    read_field(j, "target_recall", c.target_recall);
    read_field(j, "output_dir", c.output_dir);
    read_field(j, "log_interval", c.log_interval);
    read_field(j, "checkpoint_interval", c.checkpoint_interval);
    read_field(j, "parallel", c.parallel);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

std::string config_hash(const ExperimentConfig& c) {
  json j = c;
  j.erase("parallel");
  j.erase("output_dir");
  return to_hex64(fnv1a64(j.dump()));
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  ExperimentConfig c = j.get<ExperimentConfig>();
  const fs::path base = path.parent_path();
  for (std::string* p : {&c.data.hc_train, &c.data.soc_train, &c.data.hc_test, &c.data.soc_test, &c.data.probe}) {
    if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  c.validate();
  return c;
}

void save_experiment_config(const fs::path& path, const ExperimentConfig& c) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << json(c).dump(2) << '\n';
}

}  // namespace bafrcnn::harness
