#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bafrcnn/common/error.hpp"
#include "bafrcnn/eval/report.hpp"
#include "bafrcnn/harness/ablation.hpp"
#include "bafrcnn/harness/config.hpp"
#include "bafrcnn/harness/train.hpp"
#include "bafrcnn/synthgen/dataset.hpp"

namespace fs = std::filesystem;
using namespace bafrcnn;

namespace {

// One line, key=value, message quoted with inner quotes and newlines escaped.
void print_error(const char* kind, const std::string& message) {
  std::string m;
  for (char c : message) {
    if (c == '\n') {
      m += "\\n";
    } else if (c == '"') {
      m += "\\\"";
    } else {
      m += c;
    }
  }
  std::cerr << "error kind=" << kind << " message=\"" << m << "\"\n";
}

void log_line(const std::string& s) { std::cerr << s << std::endl; }

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int gen_data(const fs::path& config_path, const fs::path& out, std::uint64_t seed) {
  const synthgen::GenerationConfig g = synthgen::load_generation_config(config_path);
  const auto manifests = synthgen::generate_dataset(g.synth, g.counts, seed, out, g.threads);
  nlohmann::json meta = g;
  meta["seed"] = seed;
  meta["config_hash"] = synthgen::config_hash(g.synth);
  write_file(out / "generation.json", meta.dump(1) + "\n");
  std::size_t images = 0;
  for (const auto& m : manifests) images += m.samples.size();
  std::cout << "generated " << images << " images in " << out.string() << " config_hash "
            << synthgen::config_hash(g.synth) << "\n";
  return 0;
}

int train_one(const fs::path& config_path, const std::string& mode, std::uint64_t seed, const fs::path& out,
              const std::string& resume) {
  const harness::ExperimentConfig config = harness::load_experiment_config(config_path);
  const harness::RunSpec spec{config.name, harness::parse_run_mode(mode), seed, config.lambda_da};
  const auto data = harness::TrainingData::load(config.data, config.detector.image_size);
  harness::TrainOptions opts{out, std::nullopt, std::nullopt};
  if (!resume.empty()) opts.resume = resume;
  log_line("training " + spec.label() + " config_hash " + harness::config_hash(config));
  const harness::RunRecord rec = harness::train(config, spec, data, opts);
  harness::write_run_artifacts(out, rec);
  eval::write_metrics_csv(out / "metrics.csv", harness::metrics_rows(rec));
  std::cout << to_json(*rec.metrics).dump() << "\n";
  return 0;
}

int eval_checkpoint(const fs::path& checkpoint, const fs::path& manifest, const fs::path& out) {
  const auto rows = harness::evaluate_checkpoint(checkpoint, manifest);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  eval::write_metrics_csv(out, rows);
  std::cout << eval::format_metrics_csv(rows);
  return 0;
}

int ablation(const fs::path& config_path, const fs::path& out, std::size_t parallel) {
  const harness::ExperimentConfig config = harness::load_experiment_config(config_path);
  const auto data = harness::TrainingData::load(config.data, config.detector.image_size);
  log_line("ablation " + config.name + " config_hash " + harness::config_hash(config) + ", " +
           std::to_string(harness::ablation_runs(config).size()) + " runs");
  const auto result = harness::run_ablation(config, data, out, parallel == 0 ? config.parallel : parallel, log_line);
  std::cout << result.report;
  for (const auto& r : result.runs) {
    if (!r.error.empty()) return 1;
  }
  return 0;
}

int plot(const fs::path& metrics, const fs::path& out) {
  const auto rows = eval::read_metrics_csv(metrics);
  write_file(out, eval::metrics_svg(rows, "HC test AP"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Background-adaptive two-stage detector: data generation, training, evaluation and ablation"};
  app.require_subcommand(1);

  std::string config, out, mode, checkpoint, data, metrics, resume;
  std::uint64_t seed = 0;
  std::size_t parallel = 0;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic two-domain dataset");
  gen->add_option("--config", config, "Generation config JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--seed", seed, "Base seed")->required();

  const std::vector<std::string> modes = {"baseline", "naive_negatives", "instance", "full"};
  auto* tr = app.add_subcommand("train", "Train one run");
  tr->add_option("--config", config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  tr->add_option("--mode", mode, "baseline, naive_negatives, instance or full")->required()->check(CLI::IsMember(modes));
  tr->add_option("--seed", seed, "Run seed")->required();
  tr->add_option("--out", out, "Run directory")->required();
  tr->add_option("--resume", resume, "Checkpoint to continue from")->check(CLI::ExistingFile);

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on one manifest");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", data, "Dataset manifest JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", out, "Metrics CSV")->required();

  auto* ab = app.add_subcommand("ablation", "Run every mode and seed of an experiment config");
  ab->add_option("--config", config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  ab->add_option("--out", out, "Output directory")->required();
  ab->add_option("--parallel", parallel, "Concurrent runs (default: config value)");

  auto* pl = app.add_subcommand("plot", "Bar chart SVG from a metrics CSV");
  pl->add_option("--metrics", metrics, "Metrics CSV")->required()->check(CLI::ExistingFile);
  pl->add_option("--out", out, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what());
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*gen) return gen_data(config, out, seed);
    if (*tr) return train_one(config, mode, seed, out, resume);
    if (*ev) return eval_checkpoint(checkpoint, data, out);
    if (*ab) return ablation(config, out, parallel);
    if (*pl) return plot(metrics, out);
  } catch (const ValidationError& e) {
    print_error("validation", e.what());
    return 1;
  } catch (const NumericalError& e) {
    print_error("numerical", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("runtime", e.what());
    return 1;
  }
  return 2;
}
