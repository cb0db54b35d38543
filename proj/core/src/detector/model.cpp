#include "bafrcnn/detector/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bafrcnn/common/error.hpp"
#include "bafrcnn/detector/nms.hpp"
#include "bafrcnn/tensor/losses.hpp"
#include "bafrcnn/tensor/ops.hpp"

namespace bafrcnn::detector {
namespace {

// Loss ops report non-finite values by op name; prefix the component they feed.
template <typename F>
Tensor named_loss(const char* component, F&& compute) {
  try {
    return compute();
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(component) + ": " + e.what());
  }
}

namespace ops = bafrcnn::tensor;

// Picks up to k of the given indices uniformly; result is sorted ascending.
std::vector<std::size_t> sample_subset(std::vector<std::size_t> pool, std::size_t k, Rng& rng) {
  if (pool.size() > k) {
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
    pool.resize(k);
  }
  std::sort(pool.begin(), pool.end());
  return pool;
}

float sigmoidf(float x) {
  return x >= 0.0f ? 1.0f / (1.0f + std::exp(-x)) : std::exp(x) / (1.0f + std::exp(x));
}

}  // namespace

Tensor image_tensor(std::span<const float> pixels, std::size_t height, std::size_t width) {
  if (pixels.size() != height * width) throw std::invalid_argument("image_tensor: pixel count does not match extents");
  Tensor t(tensor::Shape{1, 1, height, width});
  auto out = t.mutable_data();
  // Attenuation (1 - transmittance): empty regions map to 0.
  for (std::size_t i = 0; i < pixels.size(); ++i) out[i] = 1.0f - pixels[i];
  return t;
}

Detector::Detector(DetectorConfig config, std::uint64_t seed) : config_(std::move(config)), params_(seed) {
  config_.validate();
  std::size_t in_ch = 1;
  for (std::size_t b = 0; b < config_.backbone_channels.size(); ++b) {
    const std::size_t out_ch = config_.backbone_channels[b];
    const std::string base = "backbone.conv" + std::to_string(b + 1);
    params_.add(base + ".weight", {out_ch, in_ch, 3, 3}, in_ch * 9);
    params_.add(base + ".bias", {out_ch}, in_ch * 9);
    in_ch = out_ch;
  }
  const std::size_t a = config_.anchors_per_cell();
  const std::size_t hid = config_.rpn_hidden;
  params_.add("rpn.conv.weight", {hid, in_ch, 3, 3}, in_ch * 9);
  params_.add("rpn.conv.bias", {hid}, in_ch * 9);
  params_.add("rpn.cls.weight", {a, hid, 1, 1}, hid);
  params_.add("rpn.cls.bias", {a}, hid);
  params_.add("rpn.reg.weight", {4 * a, hid, 1, 1}, hid);
  params_.add("rpn.reg.bias", {4 * a}, hid);

  const std::size_t p = config_.roi_output_size;
  const std::size_t flat = in_ch * p * p;
  const std::size_t roi_hid = config_.roi_hidden;
  params_.add("roi.fc1.weight", {roi_hid, flat}, flat);
  params_.add("roi.fc1.bias", {roi_hid}, flat);
  params_.add("roi.cls.weight", {static_cast<std::size_t>(kNumThreatClasses + 1), roi_hid}, roi_hid);
  params_.add("roi.cls.bias", {static_cast<std::size_t>(kNumThreatClasses + 1)}, roi_hid);
  params_.add("roi.box.weight", {4, roi_hid}, roi_hid);
  params_.add("roi.box.bias", {4}, roi_hid);

  anchors_ = generate_anchors(config_, config_.feature_size(), config_.feature_size());
}

Tensor Detector::backbone(Tape& tape, const Tensor& image) const {
  const std::size_t s = config_.image_size;
  if (image.shape() != tensor::Shape{1, 1, s, s}) {
    throw std::invalid_argument("Detector::backbone: expected image " + tensor::shape_string({1, 1, s, s}) + ", got " +
                                tensor::shape_string(image.shape()));
  }
  Tensor x = image;
  for (std::size_t b = 0; b < config_.backbone_channels.size(); ++b) {
    const std::string base = "backbone.conv" + std::to_string(b + 1);
    x = ops::conv2d(tape, x, params_.get(base + ".weight"), params_.get(base + ".bias"), {1, 1});
    x = ops::max_pool2d(tape, ops::relu(tape, x));
  }
  return x;
}

Tensor Detector::extract_features(const Tensor& image) const {
  Tape tape(false);
  return backbone(tape, image);
}

Tensor Detector::zero_connected(Tape& tape, const Tensor& t) const {
  return ops::scale(tape, ops::sum(tape, t), 0.0f);
}

RpnOutput Detector::rpn_forward(Tape& tape, const Tensor& features, GroundTruth gt, Rng& rng) const {
  RpnOutput out;
  Tensor h = ops::relu(tape, ops::conv2d(tape, features, params_.get("rpn.conv.weight"), params_.get("rpn.conv.bias"), {1, 1}));
  out.objectness_logits = ops::conv2d(tape, h, params_.get("rpn.cls.weight"), params_.get("rpn.cls.bias"));
  out.box_deltas = ops::conv2d(tape, h, params_.get("rpn.reg.weight"), params_.get("rpn.reg.bias"));

  const std::size_t fh = features.dim(2), fw = features.dim(3);
  if (fh != anchors_.height || fw != anchors_.width) {
    throw std::invalid_argument("rpn_forward: feature map " + tensor::shape_string(features.shape()) +
                                " does not match the anchor grid");
  }
  const std::size_t hw = fh * fw;
  const std::size_t per_cell = anchors_.per_cell();
  const std::size_t n_anchors = anchors_.anchors.size();
  auto logit_index = [&](std::size_t anchor) {
    const std::size_t cell = anchor / per_cell, a = anchor % per_cell;
    return a * hw + cell;
  };
  auto delta_index = [&](std::size_t anchor, std::size_t k) {
    const std::size_t cell = anchor / per_cell, a = anchor % per_cell;
    return (a * 4 + k) * hw + cell;
  };

  // Proposals: decode, clip, drop degenerate boxes, top-k, NMS, top-N.
  const double limit = static_cast<double>(config_.image_size);
  const auto logits = out.objectness_logits.data();
  const auto deltas = out.box_deltas.data();
  std::vector<ScoredBox> candidates;
  candidates.reserve(n_anchors);
  for (std::size_t ai = 0; ai < n_anchors; ++ai) {
    const BoxDelta d{deltas[delta_index(ai, 0)], deltas[delta_index(ai, 1)], deltas[delta_index(ai, 2)],
                     deltas[delta_index(ai, 3)]};
    const Box box = decode_box(anchors_.anchors[ai], d).clipped(limit, limit);
    if (box.width() < 1.0 || box.height() < 1.0) continue;
    candidates.push_back(ScoredBox{box, static_cast<double>(sigmoidf(logits[logit_index(ai)]))});
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return candidates[a].score > candidates[b].score; });
  order.resize(std::min(order.size(), config_.pre_nms_top_n));
  std::vector<ScoredBox> top;
  top.reserve(order.size());
  for (std::size_t i : order) top.push_back(candidates[i]);
  std::vector<std::size_t> kept = nms(top, config_.rpn_nms_iou);
  kept.resize(std::min(kept.size(), config_.post_nms_top_n));
  for (std::size_t k : kept) out.proposals.push_back(Proposal{top[k].box, static_cast<float>(top[k].score), Domain::kHC});
  if (out.proposals.empty()) out.proposals.push_back(Proposal{Box{0.0, 0.0, limit, limit}, 0.0f, Domain::kHC});

  if (!gt) return out;

  const AnchorTargets targets = match_anchors_to_gt(anchors_, *gt, config_.rpn_positive_iou, config_.rpn_negative_iou);
  std::vector<std::size_t> pos, neg;
  for (std::size_t ai = 0; ai < n_anchors; ++ai) {
    if (targets.labels[ai] == AnchorLabel::kPositive) pos.push_back(ai);
    if (targets.labels[ai] == AnchorLabel::kNegative) neg.push_back(ai);
  }
  const auto max_pos = static_cast<std::size_t>(static_cast<double>(config_.rpn_batch) * config_.rpn_positive_fraction);
  pos = sample_subset(std::move(pos), max_pos, rng);
  neg = sample_subset(std::move(neg), config_.rpn_batch - pos.size(), rng);
  out.sampled_positives = pos.size();
  out.sampled_negatives = neg.size();

  std::vector<std::size_t> sampled_logits;
  std::vector<float> labels;
  for (std::size_t ai : pos) {
    sampled_logits.push_back(logit_index(ai));
    labels.push_back(1.0f);
  }
  for (std::size_t ai : neg) {
    sampled_logits.push_back(logit_index(ai));
    labels.push_back(0.0f);
  }
  if (sampled_logits.empty()) {
    out.objectness_loss = zero_connected(tape, out.objectness_logits);
  } else {
    out.objectness_loss = named_loss("rpn_objectness", [&] {
      return ops::binary_cross_entropy_with_logits(tape, ops::gather(tape, out.objectness_logits, sampled_logits),
                                                   std::span<const float>(labels));
    });
  }

  if (pos.empty()) {
    out.box_loss = zero_connected(tape, out.box_deltas);
  } else {
    std::vector<std::size_t> idx;
    std::vector<float> target;
    for (std::size_t ai : pos) {
      for (std::size_t k = 0; k < 4; ++k) {
        idx.push_back(delta_index(ai, k));
        target.push_back(targets.regression[ai][k]);
      }
    }
    const std::size_t n = target.size();
    const Tensor target_t(tensor::Shape{n}, std::move(target));
    out.box_loss =
        named_loss("rpn_box", [&] { return ops::smooth_l1(tape, ops::gather(tape, out.box_deltas, idx), target_t); });
  }
  return out;
}

RoiEmbedding Detector::roi_embedding(Tape& tape, const Tensor& features, std::span<const Box> boxes) const {
  const std::size_t p = config_.roi_output_size;
  auto aligned = ops::roi_align(tape, features, boxes, config_.stride, p, p);
  RoiEmbedding emb;
  emb.kept = std::move(aligned.kept);
  if (emb.kept.empty()) return emb;
  const std::size_t r = emb.kept.size();
  Tensor flat = ops::reshape(tape, aligned.features, tensor::Shape{r, aligned.features.numel() / r});
  emb.features = ops::relu(tape, ops::linear(tape, flat, params_.get("roi.fc1.weight"), params_.get("roi.fc1.bias")));
  return emb;
}

RoiHeadOutput Detector::roi_head_forward(Tape& tape, const Tensor& features, std::span<const Proposal> proposals,
                                         GroundTruth gt, Rng& rng) const {
  if (proposals.empty()) throw std::invalid_argument("roi_head_forward: proposal list is empty");
  RoiHeadOutput out;

  std::vector<Box> boxes;
  std::vector<int> labels;
  std::vector<int> matched;
  if (gt) {
    std::vector<Box> candidates;
    for (const auto& p : proposals) candidates.push_back(p.box);
    if (config_.roi_append_gt) {
      for (const auto& a : *gt) candidates.push_back(a.box);
    }
    std::vector<std::size_t> pos, neg;
    std::vector<int> cand_label(candidates.size(), kBackgroundClass), cand_match(candidates.size(), -1);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      double best = 0.0;
      for (std::size_t g = 0; g < gt->size(); ++g) {
        const double iou = compute_iou(candidates[i], (*gt)[g].box);
        if (iou > best) {
          best = iou;
          cand_match[i] = static_cast<int>(g);
        }
      }
      if (cand_match[i] >= 0 && best >= config_.roi_positive_iou) {
        cand_label[i] = (*gt)[static_cast<std::size_t>(cand_match[i])].class_id;
        pos.push_back(i);
      } else {
        neg.push_back(i);
      }
    }
    const auto max_pos = static_cast<std::size_t>(static_cast<double>(config_.roi_batch) * config_.roi_positive_fraction);
    pos = sample_subset(std::move(pos), max_pos, rng);
    neg = sample_subset(std::move(neg), config_.roi_batch - pos.size(), rng);
    for (std::size_t i : pos) {
      boxes.push_back(candidates[i]);
      labels.push_back(cand_label[i]);
      matched.push_back(cand_match[i]);
    }
    for (std::size_t i : neg) {
      boxes.push_back(candidates[i]);
      labels.push_back(kBackgroundClass);
      matched.push_back(-1);
    }
  } else {
    for (const auto& p : proposals) boxes.push_back(p.box);
  }

  RoiEmbedding emb = roi_embedding(tape, features, boxes);
  if (emb.kept.size() != boxes.size()) {
    // Proposals and gt boxes are valid and clipped, so nothing should be dropped.
    throw std::logic_error("roi_head_forward: roi_align dropped a valid box");
  }
  out.sampled_boxes = boxes;
  out.class_logits = ops::linear(tape, emb.features, params_.get("roi.cls.weight"), params_.get("roi.cls.bias"));
  out.box_deltas = ops::linear(tape, emb.features, params_.get("roi.box.weight"), params_.get("roi.box.bias"));

  if (!gt) return out;
  out.sampled_labels = labels;
  std::vector<std::size_t> cls(labels.begin(), labels.end());
  out.class_loss = named_loss("roi_class", [&] { return ops::softmax_cross_entropy(tape, out.class_logits, cls); });

  std::vector<std::size_t> pos_rows;
  std::vector<float> target;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (labels[i] == kBackgroundClass) continue;
    pos_rows.push_back(i);
    const BoxDelta d = encode_box(boxes[i], (*gt)[static_cast<std::size_t>(matched[i])].box, kRoiDeltaWeights);
    target.insert(target.end(), d.begin(), d.end());
  }
  if (pos_rows.empty()) {
    out.box_loss = zero_connected(tape, out.box_deltas);
  } else {
    const Tensor target_t(tensor::Shape{pos_rows.size(), 4}, target);
    out.box_loss = named_loss(
        "roi_box", [&] { return ops::smooth_l1(tape, ops::gather_rows(tape, out.box_deltas, pos_rows), target_t); });
  }
  return out;
}

std::vector<Detection> Detector::postprocess(const RoiHeadOutput& head) const {
  const std::size_t r = head.sampled_boxes.size();
  const std::size_t k = kNumThreatClasses + 1;
  const double limit = static_cast<double>(config_.image_size);
  const auto logits = head.class_logits.data();
  const auto deltas = head.box_deltas.data();

  std::vector<std::vector<ScoredBox>> per_class(kNumThreatClasses);
  for (std::size_t i = 0; i < r; ++i) {
    const float* row = logits.data() + i * k;
    const double m = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(static_cast<double>(row[j]) - m);
    const BoxDelta d{deltas[i * 4], deltas[i * 4 + 1], deltas[i * 4 + 2], deltas[i * 4 + 3]};
    const Box box = decode_box(head.sampled_boxes[i], d, kRoiDeltaWeights).clipped(limit, limit);
    if (!box.valid()) continue;
    for (std::size_t c = 1; c < k; ++c) {
      const double p = std::exp(static_cast<double>(row[c]) - m) / z;
      if (p >= config_.score_threshold) per_class[c - 1].push_back(ScoredBox{box, p});
    }
  }
  std::vector<Detection> dets;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    for (std::size_t idx : nms(per_class[c], config_.nms_iou)) {
      dets.push_back(Detection{static_cast<int>(c + 1), static_cast<float>(per_class[c][idx].score), per_class[c][idx].box});
    }
  }
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
  if (dets.size() > config_.max_detections) dets.resize(config_.max_detections);
  return dets;
}

std::vector<Detection> Detector::detect(const Tensor& image) const {
  Tape tape(false);
  Rng unused(0);
  Tensor features = backbone(tape, image);
  RpnOutput rpn = rpn_forward(tape, features, std::nullopt, unused);
  RoiHeadOutput head = roi_head_forward(tape, features, rpn.proposals, std::nullopt, unused);
  return postprocess(head);
}

DetectionLossBundle Detector::detection_losses(Tape& tape, const Tensor& features, std::span<const Annotation> gt,
                                               Rng& rng, std::vector<Proposal>* proposals_out) const {
  RpnOutput rpn = rpn_forward(tape, features, gt, rng);
  RoiHeadOutput roi = roi_head_forward(tape, features, rpn.proposals, gt, rng);
  if (proposals_out != nullptr) *proposals_out = rpn.proposals;
  return DetectionLossBundle{*rpn.objectness_loss, *rpn.box_loss, *roi.class_loss, *roi.box_loss};
}

}  // namespace bafrcnn::detector
