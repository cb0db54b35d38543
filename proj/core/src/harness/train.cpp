#include "bafrcnn/harness/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>

#include "bafrcnn/bgda/background.hpp"
#include "bafrcnn/common/error.hpp"
#include "bafrcnn/common/hex.hpp"
#include "bafrcnn/eval/probe.hpp"
#include "bafrcnn/tensor/ops.hpp"
#include "bafrcnn/tensor/snapshot.hpp"

namespace bafrcnn::harness {

namespace fs = std::filesystem;
namespace ops = bafrcnn::tensor;
using detector::Annotation;
using detector::DetectionLossBundle;
using detector::Tape;
using detector::Tensor;
using nlohmann::json;

namespace {

constexpr const char* kVelocityPrefix = "opt.velocity.";
// The tensor file names its config hash through a one-element marker tensor.
constexpr const char* kHashPrefix = "meta.config_hash.";
constexpr const char* kDetectionKeys[] = {"rpn_objectness", "rpn_box", "roi_class", "roi_box"};

void check_dataset(const synthgen::LoadedDataset& d, const std::string& name, Domain domain, const char* kind,
                   std::size_t image_size) {
  if (d.manifest.domain != domain || d.manifest.kind != kind) {
    throw ValidationError("dataset " + name + ": expected a " + std::string(to_string(domain)) + " " + kind +
                          " manifest, got " + std::string(to_string(d.manifest.domain)) + " " + d.manifest.kind);
  }
  if (d.images.empty()) throw ValidationError("dataset " + name + " is empty");
  if (d.height != image_size || d.width != image_size) {
    throw ValidationError("dataset " + name + ": images are " + std::to_string(d.height) + "x" +
                          std::to_string(d.width) + ", detector expects " + std::to_string(image_size));
  }
}

Tensor add_or_init(Tape& tape, const Tensor& acc, const Tensor& term) {
  return acc.defined() ? ops::add(tape, acc, term) : term;
}

void accumulate(Tape& tape, DetectionLossBundle& acc, const DetectionLossBundle& b) {
  acc.rpn_objectness = add_or_init(tape, acc.rpn_objectness, b.rpn_objectness);
  acc.rpn_box = add_or_init(tape, acc.rpn_box, b.rpn_box);
  acc.roi_class = add_or_init(tape, acc.roi_class, b.roi_class);
  acc.roi_box = add_or_init(tape, acc.roi_box, b.roi_box);
}

double checked_value(const Tensor& t, std::size_t step, const char* component) {
  const double v = static_cast<double>(t.item());
  if (!std::isfinite(v)) {
    throw NumericalError("step " + std::to_string(step) + ": non-finite loss component '" + component + "'");
  }
  return v;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path sidecar_path(const fs::path& checkpoint) { return fs::path(checkpoint.string() + ".json"); }

json spec_json(const RunSpec& s) {
  return json{{"experiment", s.experiment}, {"mode", to_string(s.mode)}, {"seed", s.seed}, {"lambda_da", s.lambda_da}};
}

json audit_json(const MaskingAudit& a) {
  return json{{"masked_cells_checked", a.masked_cells_checked},
              {"masked_cell_violations", a.masked_cell_violations},
              {"proposals_checked", a.proposals_checked},
              {"proposal_violations", a.proposal_violations},
              {"max_masked_gradient", a.max_masked_gradient},
              {"max_selected_iou", a.max_selected_iou}};
}

MaskingAudit audit_from_json(const json& j) {
  MaskingAudit a;
  a.masked_cells_checked = j.at("masked_cells_checked").get<std::uint64_t>();
  a.masked_cell_violations = j.at("masked_cell_violations").get<std::uint64_t>();
  a.proposals_checked = j.at("proposals_checked").get<std::uint64_t>();
  a.proposal_violations = j.at("proposal_violations").get<std::uint64_t>();
  a.max_masked_gradient = j.at("max_masked_gradient").get<double>();
  a.max_selected_iou = j.at("max_selected_iou").get<double>();
  return a;
}

}  // namespace

TrainingData TrainingData::load(const DatasetPaths& paths, std::size_t image_size) {
  TrainingData d;
  auto load_one = [&](const std::string& path, const char* name) {
    if (path.empty()) throw ValidationError("config: data." + std::string(name) + " is not set");
    return synthgen::load_dataset(path);
  };
  d.hc_train = load_one(paths.hc_train, "hc_train");
  d.soc_train = load_one(paths.soc_train, "soc_train");
  d.hc_test = load_one(paths.hc_test, "hc_test");
  d.soc_test = load_one(paths.soc_test, "soc_test");
  d.probe = load_one(paths.probe, "probe");
  check_dataset(d.hc_train, "hc_train", Domain::kHC, "scene", image_size);
  check_dataset(d.soc_train, "soc_train", Domain::kSOC, "scene", image_size);
  check_dataset(d.hc_test, "hc_test", Domain::kHC, "scene", image_size);
  check_dataset(d.soc_test, "soc_test", Domain::kSOC, "scene", image_size);
  check_dataset(d.probe, "probe", Domain::kSOC, "probe", image_size);
  return d;
}

std::string RunSpec::label() const { return experiment + "_" + std::string(to_string(mode)) + "_s" + std::to_string(seed); }

json to_json(const LossRecord& r) {
  return json{{"step", r.step}, {"components", r.components}, {"total", r.total}};
}

json to_json(const RunMetrics& m) {
  json classes = json::array();
  for (const auto& c : m.hc_ap.classes) {
    classes.push_back({{"class", detector::class_name(c.class_id)},
                       {"num_gt", c.num_gt},
                       {"ap", c.ap ? json(*c.ap) : json(nullptr)}});
  }
  return json{{"classes", classes},
              {"map", m.hc_ap.map},
              {"recall_threshold", m.recall_threshold ? json(*m.recall_threshold) : json(nullptr)},
              {"score_threshold", m.score_threshold},
              {"hc_recall", m.hc_recall},
              {"far_at_threshold", m.far_at_threshold},
              {"probe_recall", m.probe_recall},
              {"probe_auc", m.probe_auc}};
}

json to_json(const RunRecord& r) {
  json trace = json::array();
  for (const auto& l : r.loss_trace) trace.push_back(to_json(l));
  return json{{"config_hash", r.config_hash},
              {"run", spec_json(r.spec)},
              {"steps_completed", r.steps_completed},
              {"loss_trace", trace},
              {"masking_audit", audit_json(r.audit)},
              {"metrics", r.metrics ? to_json(*r.metrics) : json(nullptr)},
              {"checkpoint", r.checkpoint_path},
              {"wall_clock_seconds", r.wall_clock_seconds}};
}

namespace {

std::uint64_t model_seed(const RunSpec& spec, const char* what) { return Rng(spec.seed).fork(what).next_u64(); }

bgda::DiscriminatorConfig discriminator_config(const ExperimentConfig& c) {
  bgda::DiscriminatorConfig d;
  d.feature_channels = c.detector.backbone_channels.back();
  d.roi_features = c.detector.roi_hidden;
  d.image_hidden = c.image_hidden;
  d.instance_hidden = c.instance_hidden;
  return d;
}

}  // namespace

TrainingState::TrainingState(const ExperimentConfig& config, const RunSpec& spec)
    : detector(config.detector, model_seed(spec, "detector")),
      discriminators(discriminator_config(config), model_seed(spec, "discriminators")),
      optimizer(static_cast<float>(config.learning_rate), static_cast<float>(config.momentum)) {}

std::vector<tensor::Parameter<float>> TrainingState::trainable(RunMode mode) const {
  const auto det = detector.parameters().all();
  std::vector<tensor::Parameter<float>> out(det.begin(), det.end());
  if (mode == RunMode::kInstance) {
    const auto inst = discriminators.parameters().with_prefix("da.instance.");
    out.insert(out.end(), inst.begin(), inst.end());
  } else if (mode == RunMode::kFull) {
    const auto all = discriminators.parameters().all();
    out.insert(out.end(), all.begin(), all.end());
  }
  return out;
}

double learning_rate_at(const ExperimentConfig& c, std::size_t step) {
  double lr = c.learning_rate;
  if (step < c.warmup_steps) lr *= static_cast<double>(step + 1) / static_cast<double>(c.warmup_steps);
  for (std::size_t s : c.lr_decay_steps) {
    if (step >= s) lr *= c.lr_decay_factor;
  }
  return lr;
}

LossRecord training_step(const ExperimentConfig& config, const RunSpec& spec, const TrainingData& data,
                         TrainingState& state, bool apply_update) {
  const std::size_t step = state.step;
  const bgda::DaMode mode = da_mode(spec.mode);
  const bgda::AdaptationSettings settings{static_cast<float>(config.grl_weight), config.iou_bg_threshold};
  // Counter-based per-step streams: resuming at any step reproduces the same draws,
  // and HC draws do not depend on whether SOC images are used.
  const Rng step_rng = Rng(spec.seed).fork("train").fork(static_cast<std::uint64_t>(step));
  Rng hc_pick = step_rng.fork("hc"), soc_pick = step_rng.fork("soc");
  Rng hc_sampling = step_rng.fork("hc-sampling"), soc_sampling = step_rng.fork("soc-sampling");

  Tape tape;
  DetectionLossBundle det;
  bgda::DaLossTerms da;
  Tensor da_instance, da_image, da_consistency;
  std::vector<bgda::DAOutputs> hc_outputs;
  const detector::Detector& model = state.detector;
  const TrainingData& ds = data;

  auto add_da = [&](const bgda::DAOutputs& out) {
    da_instance = add_or_init(tape, da_instance, out.losses.instance);
    if (mode == bgda::DaMode::kFull) {
      da_image = add_or_init(tape, da_image, out.losses.image);
      da_consistency = add_or_init(tape, da_consistency, out.losses.consistency);
    }
  };

  try {
    for (std::size_t k = 0; k < config.hc_per_step; ++k) {
      const std::size_t i = hc_pick.index(ds.hc_train.images.size());
      const auto& gt = ds.hc_train.manifest.samples[i].annotations;
      const Tensor image = detector::image_tensor(ds.hc_train.images[i], ds.hc_train.height, ds.hc_train.width);
      const Tensor features = model.backbone(tape, image);
      std::vector<detector::Proposal> proposals;
      accumulate(tape, det, model.detection_losses(tape, features, gt, hc_sampling, &proposals));
      if (mode != bgda::DaMode::kBaseline) {
        auto out = bgda::adapt_image(tape, state.discriminators, model, features, proposals, gt, Domain::kHC,
                                     settings, mode);
        for (const auto& p : out.selected) {
          const double iou = bgda::max_iou(p.box, gt);
          ++state.audit.proposals_checked;
          state.audit.max_selected_iou = std::max(state.audit.max_selected_iou, iou);
          if (iou > config.iou_bg_threshold) ++state.audit.proposal_violations;
        }
        add_da(out);
        hc_outputs.push_back(std::move(out));
      }
    }
    if (uses_soc(spec.mode)) {
      const std::span<const Annotation> no_gt{};
      for (std::size_t k = 0; k < config.soc_per_step; ++k) {
        const std::size_t i = soc_pick.index(ds.soc_train.images.size());
        const Tensor image = detector::image_tensor(ds.soc_train.images[i], ds.soc_train.height, ds.soc_train.width);
        const Tensor features = model.backbone(tape, image);
        std::vector<detector::Proposal> proposals;
        if (config.soc_roi_loss) {
          accumulate(tape, det, model.detection_losses(tape, features, no_gt, soc_sampling, &proposals));
        } else {
          auto rpn = model.rpn_forward(tape, features, no_gt, soc_sampling);
          det.rpn_objectness = add_or_init(tape, det.rpn_objectness, *rpn.objectness_loss);
          det.rpn_box = add_or_init(tape, det.rpn_box, *rpn.box_loss);
          proposals = std::move(rpn.proposals);
        }
        if (mode != bgda::DaMode::kBaseline) {
          add_da(bgda::adapt_image(tape, state.discriminators, model, features, proposals, no_gt, Domain::kSOC,
                                   settings, mode));
        }
      }
    }
  } catch (const NumericalError& e) {
    throw NumericalError("step " + std::to_string(step) + ": " + e.what());
  }

  LossRecord rec;
  rec.step = step;
  const Tensor* det_terms[] = {&det.rpn_objectness, &det.rpn_box, &det.roi_class, &det.roi_box};
  for (std::size_t k = 0; k < 4; ++k) rec.components[kDetectionKeys[k]] = checked_value(*det_terms[k], step, kDetectionKeys[k]);
  if (mode != bgda::DaMode::kBaseline) {
    da.instance = da_instance;
    rec.components["da_instance"] = checked_value(da_instance, step, "da_instance");
    if (mode == bgda::DaMode::kFull) {
      da.image = da_image;
      da.consistency = da_consistency;
      rec.components["da_image"] = checked_value(da_image, step, "da_image");
      rec.components["consistency"] = checked_value(da_consistency, step, "consistency");
    }
  }
  Tensor total = bgda::total_loss(tape, det, da, static_cast<float>(spec.lambda_da), mode);
  rec.total = checked_value(total, step, "total");

  tape.backward(total);

  // Anti-crop audit: the image-DA path must leave masked cells untouched.
  for (const auto& out : hc_outputs) {
    if (mode != bgda::DaMode::kFull) break;
    const std::size_t channels = out.reversed_features.dim(1), cells = out.mask.cells.size();
    const auto grad = out.reversed_features.has_grad() ? out.reversed_features.grad() : std::span<const float>{};
    for (std::size_t cell = 0; cell < cells; ++cell) {
      if (out.mask.cells[cell] != 0) continue;
      for (std::size_t c = 0; c < channels; ++c) {
        const double g = grad.empty() ? 0.0 : std::abs(static_cast<double>(grad[c * cells + cell]));
        ++state.audit.masked_cells_checked;
        state.audit.max_masked_gradient = std::max(state.audit.max_masked_gradient, g);
        if (g != 0.0) ++state.audit.masked_cell_violations;
      }
    }
  }

  if (apply_update) {
    state.optimizer.set_learning_rate(static_cast<float>(learning_rate_at(config, step)));
    state.optimizer.step(state.trainable(spec.mode));
    ++state.step;
  } else {
    state.detector.parameters().zero_grad();
    state.discriminators.parameters().zero_grad();
  }
  return rec;
}

void save_checkpoint(const fs::path& path, const ExperimentConfig& config, const RunSpec& spec,
                     const TrainingState& state) {
  std::vector<tensor::Parameter<float>> tensors;
  for (const auto& p : state.detector.parameters().all()) tensors.push_back({p.name, p.tensor.detach()});
  for (const auto& p : state.discriminators.parameters().all()) tensors.push_back({p.name, p.tensor.detach()});
  for (auto& v : state.optimizer.state(kVelocityPrefix)) tensors.push_back(std::move(v));
  tensors.push_back({kHashPrefix + config_hash(config), Tensor({1}, std::vector<float>{0.0f})});
  const auto bytes = tensor::encode_snapshot(tensors);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  json trace = json::array();
  for (const auto& l : state.loss_trace) trace.push_back(to_json(l));
  const std::string_view byte_view(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const json side{{"config_hash", config_hash(config)},
                  {"run", spec_json(spec)},
                  {"step", state.step},
                  {"snapshot_hash", to_hex64(fnv1a64(byte_view))},
                  {"config", config},
                  {"loss_trace", trace},
                  {"masking_audit", audit_json(state.audit)}};
  const fs::path side_tmp = sidecar_path(path).string() + ".tmp";
  {
    std::ofstream out(side_tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + side_tmp.string());
    out << side.dump(1) << '\n';
  }
  fs::rename(tmp, path);
  fs::rename(side_tmp, sidecar_path(path));
}

CheckpointInfo read_checkpoint_info(const fs::path& path) {
  const fs::path side = sidecar_path(path);
  std::ifstream in(side);
  if (!in) throw ValidationError("checkpoint sidecar " + side.string() + " not found");
  try {
    json j;
    in >> j;
    CheckpointInfo info;
    info.config_hash = j.at("config_hash").get<std::string>();
    const json& run = j.at("run");
    info.spec.experiment = run.at("experiment").get<std::string>();
    info.spec.mode = parse_run_mode(run.at("mode").get<std::string>());
    info.spec.seed = run.at("seed").get<std::uint64_t>();
    info.spec.lambda_da = run.at("lambda_da").get<double>();
    info.step = j.at("step").get<std::size_t>();
    info.config = j.at("config");
    return info;
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint sidecar " + side.string() + ": " + e.what());
  }
}

void load_checkpoint(const fs::path& path, const ExperimentConfig& config, const RunSpec& spec, TrainingState& state) {
  const CheckpointInfo info = read_checkpoint_info(path);
  const std::string expected = config_hash(config);
  if (info.config_hash != expected) {
    throw ValidationError("checkpoint " + path.string() + ": config hash " + info.config_hash +
                          " does not match current config " + expected);
  }
  if (info.spec.label() != spec.label() || info.spec.lambda_da != spec.lambda_da) {
    throw ValidationError("checkpoint " + path.string() + " belongs to run " + info.spec.label() + ", not " +
                          spec.label());
  }
  const auto bytes = read_bytes(path);
  std::ifstream side(sidecar_path(path));
  json j;
  side >> j;
  const std::string_view byte_view(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (j.at("snapshot_hash").get<std::string>() != to_hex64(fnv1a64(byte_view))) {
    throw ValidationError("checkpoint " + path.string() + ": tensor file does not match its sidecar");
  }
  std::vector<tensor::Parameter<float>> det, disc, velocity;
  bool hash_marker = false;
  for (auto& p : tensor::decode_snapshot(bytes)) {
    if (p.name.starts_with(kHashPrefix)) {
      hash_marker = p.name == kHashPrefix + expected;
    } else if (p.name.starts_with(kVelocityPrefix)) {
      velocity.push_back(std::move(p));
    } else if (p.name.starts_with("da.")) {
      disc.push_back(std::move(p));
    } else {
      det.push_back(std::move(p));
    }
  }
  if (!hash_marker) throw ValidationError("checkpoint " + path.string() + ": tensor file carries a different config hash");
  if (det.size() != state.detector.parameters().size() || disc.size() != state.discriminators.parameters().size()) {
    throw ValidationError("checkpoint " + path.string() + ": parameter count does not match the model");
  }
  state.detector.parameters().load(det);
  state.discriminators.parameters().load(disc);
  state.optimizer.load_state(velocity, kVelocityPrefix);
  state.step = info.step;
  state.loss_trace.clear();
  for (const auto& l : j.at("loss_trace")) {
    LossRecord r;
    r.step = l.at("step").get<std::size_t>();
    r.components = l.at("components").get<std::map<std::string, double>>();
    r.total = l.at("total").get<double>();
    state.loss_trace.push_back(std::move(r));
  }
  state.audit = audit_from_json(j.at("masking_audit"));
}

std::vector<std::vector<detector::Detection>> detect_all(const detector::Detector& model,
                                                         const synthgen::LoadedDataset& data) {
  std::vector<std::vector<detector::Detection>> out;
  out.reserve(data.images.size());
  for (const auto& px : data.images) out.push_back(model.detect(detector::image_tensor(px, data.height, data.width)));
  return out;
}

std::vector<eval::FeatureGroup> cell_features(const detector::Detector& model, const synthgen::LoadedDataset& data) {
  std::vector<eval::FeatureGroup> groups;
  const bool hc = data.manifest.domain == Domain::kHC;
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    const Tensor f = model.extract_features(detector::image_tensor(data.images[i], data.height, data.width));
    const std::size_t channels = f.dim(1), h = f.dim(2), w = f.dim(3);
    const auto mask = hc ? bgda::anti_crop_mask(data.manifest.samples[i].annotations, h, w, model.config().stride)
                         : bgda::anti_crop_mask({}, h, w, model.config().stride);
    eval::FeatureGroup g;
    for (std::size_t cell : mask.usable_indices()) {
      std::vector<double> row(channels);
      for (std::size_t c = 0; c < channels; ++c) row[c] = static_cast<double>(f[c * h * w + cell]);
      g.push_back(std::move(row));
    }
    if (!g.empty()) groups.push_back(std::move(g));
  }
  return groups;
}

RunMetrics evaluate_model(const detector::Detector& model, const TrainingData& data, double target_recall,
                          std::uint64_t probe_seed) {
  RunMetrics m;
  std::vector<std::vector<Annotation>> hc_gt, probe_gt;
  for (const auto& s : data.hc_test.manifest.samples) hc_gt.push_back(s.annotations);
  for (const auto& s : data.probe.manifest.samples) probe_gt.push_back(s.annotations);

  const auto hc_dets = detect_all(model, data.hc_test);
  m.hc_ap = eval::evaluate_ap(hc_dets, hc_gt);
  m.recall_threshold = eval::threshold_for_recall(hc_dets, hc_gt, target_recall);
  // Below target everywhere: fall back to the lowest score the detector emits.
  m.score_threshold = m.recall_threshold.value_or(model.config().score_threshold);
  m.hc_recall = eval::recall_at_threshold(hc_dets, hc_gt, m.score_threshold);
  m.far_at_threshold = eval::false_alarm_rate(detect_all(model, data.soc_test), m.score_threshold);
  m.probe_recall = eval::recall_at_threshold(detect_all(model, data.probe), probe_gt, m.score_threshold);
  const auto hc_cells = cell_features(model, data.hc_test), soc_cells = cell_features(model, data.soc_test);
  m.probe_auc = eval::domain_probe_auc(std::span<const eval::FeatureGroup>(hc_cells),
                                       std::span<const eval::FeatureGroup>(soc_cells), probe_seed);
  return m;
}

RunRecord train(const ExperimentConfig& config, const RunSpec& spec, const TrainingData& data,
                const TrainOptions& options, TrainingState* state_out) {
  const auto start = std::chrono::steady_clock::now();
  TrainingState local(config, spec);
  TrainingState& state = state_out != nullptr ? *state_out : local;
  if (options.resume) load_checkpoint(*options.resume, config, spec, state);

  RunRecord rec;
  rec.config_hash = config_hash(config);
  rec.spec = spec;
  const fs::path checkpoint = options.run_dir.empty() ? fs::path() : options.run_dir / "checkpoint.bgdt";
  if (!options.run_dir.empty()) fs::create_directories(options.run_dir);

  while (state.step < config.total_steps) {
    if (options.stop_after && state.step >= *options.stop_after) break;
    const std::size_t step = state.step;
    LossRecord loss = training_step(config, spec, data, state, true);
    if (step % config.log_interval == 0 || step + 1 == config.total_steps) state.loss_trace.push_back(std::move(loss));
    if (!checkpoint.empty() && config.checkpoint_interval > 0 && state.step % config.checkpoint_interval == 0) {
      save_checkpoint(checkpoint, config, spec, state);
    }
  }
  if (!checkpoint.empty()) {
    save_checkpoint(checkpoint, config, spec, state);
    rec.checkpoint_path = checkpoint.string();
  }
  rec.steps_completed = state.step;
  rec.loss_trace = state.loss_trace;
  rec.audit = state.audit;
  if (state.step == config.total_steps) {
    rec.metrics = evaluate_model(state.detector, data, config.target_recall, spec.seed);
  }
  rec.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<eval::MetricsRow> metrics_rows(const RunRecord& r) {
  std::vector<eval::MetricsRow> rows;
  if (!r.metrics) return rows;
  const RunMetrics& m = *r.metrics;
  for (const auto& c : m.hc_ap.classes) {
    eval::MetricsRow row;
    row.experiment = r.spec.experiment;
    row.mode = std::string(to_string(r.spec.mode));
    row.seed = r.spec.seed;
    row.class_name = std::string(detector::class_name(c.class_id));
    row.ap = c.ap;
    row.map = m.hc_ap.map;
    row.far_at_threshold = m.far_at_threshold;
    row.probe_recall = m.probe_recall;
    row.probe_auc = m.probe_auc;
    row.score_threshold = m.score_threshold;
    row.config_hash = r.config_hash;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bafrcnn::harness
