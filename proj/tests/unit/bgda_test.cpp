#include <gtest/gtest.h>

#include <cmath>

#include "bafrcnn/bgda/losses.hpp"
#include "bafrcnn/common/rng.hpp"
#include "bafrcnn/tensor/ops.hpp"
#include "bafrcnn/tensor/optim.hpp"

namespace bafrcnn::bgda {
namespace {

using detector::Box;
namespace ops = bafrcnn::tensor;

Tensor random_image(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> px(64 * 64);
  for (float& p : px) p = static_cast<float>(rng.uniform(0.2, 1.0));
  return detector::image_tensor(px, 64, 64);
}

Tensor filled(tensor::Shape shape, float v, bool requires_grad = false) { return Tensor::full(shape, v, requires_grad); }

BackgroundPixelMask all_ones(std::size_t h, std::size_t w) { return anti_crop_mask({}, h, w, 8); }

TEST(SelectBackground, Examples) {
  const std::vector<Proposal> props{{Box{0, 0, 100, 100}, 0.5f, Domain::kHC},
                                    {Box{99, 0, 199, 100}, 0.5f, Domain::kHC},
                                    {Box{90, 0, 190, 100}, 0.5f, Domain::kHC}};
  EXPECT_EQ(select_background_proposals(props, {}, 0.01).size(), 3u);
  const std::vector<Annotation> gt{{1, Box{99, 0, 199, 100}}};
  EXPECT_NEAR(detector::compute_iou(props[0].box, gt[0].box), 100.0 / 19900.0, 1e-12);
  const auto sel = select_background_proposals(props, gt, 0.01);
  // [0,0,100,100] at IoU 0.005025 stays; the identical box and the 0.9-overlap one go.
  ASSERT_EQ(sel.size(), 1u);
  EXPECT_EQ(sel[0].box, props[0].box);
}

TEST(SelectBackground, MembersRespectThreshold) {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    std::vector<Proposal> props;
    std::vector<Annotation> gt;
    for (int i = 0; i < 20; ++i) {
      const double x = rng.uniform(0, 50), y = rng.uniform(0, 50);
      props.push_back({Box{x, y, x + rng.uniform(2, 14), y + rng.uniform(2, 14)}, 0.5f, Domain::kHC});
    }
    for (int i = 0; i < 2; ++i) {
      const double x = rng.uniform(0, 50), y = rng.uniform(0, 50);
      gt.push_back({1, Box{x, y, x + 12, y + 12}});
    }
    const auto sel = select_background_proposals(props, gt, 0.01);
    std::size_t expected = 0;
    for (const auto& p : props) {
      bool clear = true;
      for (const auto& g : gt) clear = clear && detector::compute_iou(p.box, g.box) <= 0.01;
      expected += clear;
    }
    EXPECT_EQ(sel.size(), expected);
    for (const auto& p : sel) EXPECT_LE(max_iou(p.box, gt), 0.01);
  }
}

TEST(AntiCropMask, Examples) {
  EXPECT_EQ(anti_crop_mask({}, 8, 8, 8).count(), 64u);
  const std::vector<Annotation> whole{{1, Box{0, 0, 64, 64}}};
  EXPECT_EQ(anti_crop_mask(whole, 8, 8, 8).count(), 0u);
  const std::vector<Annotation> corner{{1, Box{0, 0, 16, 16}}};
  const auto m = anti_crop_mask(corner, 8, 8, 8);
  EXPECT_EQ(m.count(), 60u);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(m.at(i, j), 0);
  }
  EXPECT_EQ(m.at(0, 2), 1);
  EXPECT_EQ(m.at(2, 0), 1);
}

TEST(AntiCropMask, MatchesPointSamplingOracle) {
  // Box corners on a quarter-pixel lattice; samples every 1/8 px (offset 1/16)
  // hit any nonempty cell/interior overlap.
  Rng rng(8);
  for (int t = 0; t < 300; ++t) {
    std::vector<Annotation> gt;
    for (int g = 0; g < 1 + static_cast<int>(rng.index(3)); ++g) {
      const double x0 = 0.25 * static_cast<double>(rng.uniform_int(0, 240));
      const double y0 = 0.25 * static_cast<double>(rng.uniform_int(0, 240));
      gt.push_back({1, Box{x0, y0, x0 + 0.25 * static_cast<double>(rng.uniform_int(1, 60)),
                           y0 + 0.25 * static_cast<double>(rng.uniform_int(1, 60))}});
    }
    const auto m = anti_crop_mask(gt, 8, 8, 8);
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        bool hit = false;
        for (int a = 0; a < 64 && !hit; ++a) {
          for (int b = 0; b < 64 && !hit; ++b) {
            const double x = static_cast<double>(j * 8) + (a + 0.5) / 8.0;
            const double y = static_cast<double>(i * 8) + (b + 0.5) / 8.0;
            for (const auto& g : gt) hit = hit || (x > g.box.x_min && x < g.box.x_max && y > g.box.y_min && y < g.box.y_max);
          }
        }
        ASSERT_EQ(m.at(i, j), hit ? 0 : 1) << "trial " << t << " cell " << i << "," << j;
      }
    }
  }
}

TEST(Discriminators, RangeAndSpatialSharing) {
  const DomainDiscriminators d(DiscriminatorConfig{}, 2);
  Tape tape;
  Rng rng(1);
  Tensor f(tensor::Shape{1, 32, 8, 8});
  for (float& v : f.mutable_data()) v = static_cast<float>(rng.uniform(-3, 3));
  for (float p : d.image_probs(tape, f, 0.1f).data()) {
    EXPECT_GT(p, 0.0f);
    EXPECT_LT(p, 1.0f);
  }
  const Tensor c = d.image_probs(tape, filled({1, 32, 8, 8}, 0.7f), 0.1f);
  for (float p : c.data()) EXPECT_EQ(p, c[0]);

  Tensor roi(tensor::Shape{5, 128});
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t k = 0; k < 128; ++k) roi.mutable_data()[r * 128 + k] = static_cast<float>(r < 2 ? k : r * k) / 100.0f;
  }
  const Tensor ip = d.instance_probs(tape, roi, 0.1f);
  ASSERT_EQ(ip.shape(), (tensor::Shape{5}));
  EXPECT_EQ(ip[0], ip[1]);
  for (float p : ip.data()) {
    EXPECT_GT(p, 0.0f);
    EXPECT_LT(p, 1.0f);
  }
  const DomainDiscriminators d2(DiscriminatorConfig{}, 2);
  Tape t2;
  EXPECT_EQ(d2.instance_probs(t2, roi, 0.1f)[3], ip[3]);
}

TEST(Discriminators, ReversalFlipsAndScalesUpstreamGradient) {
  const DomainDiscriminators d(DiscriminatorConfig{}, 2);
  const auto& p = d.parameters();
  Rng rng(6);
  Tensor base(tensor::Shape{1, 32, 8, 8});
  for (float& v : base.mutable_data()) v = static_cast<float>(rng.uniform(0, 2));
  const auto mask = all_ones(8, 8);

  Tensor with_grl = base.clone();
  with_grl.set_requires_grad(true);
  Tape t1;
  Tensor l1 = da_image_loss(t1, d.image_probs(t1, with_grl, 0.1f), mask, Domain::kSOC);
  t1.backward(l1);

  // Same head assembled by hand with no reversal.
  Tensor plain = base.clone();
  plain.set_requires_grad(true);
  Tape t2;
  Tensor x = ops::relu(t2, ops::conv2d(t2, plain, p.get("da.image.conv1.weight"), p.get("da.image.conv1.bias")));
  x = ops::sigmoid(t2, ops::conv2d(t2, x, p.get("da.image.conv2.weight"), p.get("da.image.conv2.bias")));
  Tensor l2 = da_image_loss(t2, x, mask, Domain::kSOC);
  t2.backward(l2);

  const auto g1 = with_grl.grad(), g2 = plain.grad();
  double norm = 0.0;
  for (std::size_t i = 0; i < g1.size(); ++i) {
    EXPECT_NEAR(g1[i], -0.1f * g2[i], 1e-9 + 1e-6 * std::abs(g2[i]));
    norm += std::abs(g2[i]);
  }
  EXPECT_GT(norm, 0.0);
}

TEST(DaLosses, ImageExamples) {
  Tape tape;
  const auto ones = all_ones(8, 8);
  EXPECT_NEAR(da_image_loss(tape, filled({1, 1, 8, 8}, 0.5f), ones, Domain::kHC).item(), std::log(2.0), 1e-6);
  EXPECT_NEAR(da_image_loss(tape, filled({1, 1, 8, 8}, 0.5f), ones, Domain::kSOC).item(), std::log(2.0), 1e-6);
  EXPECT_NEAR(da_image_loss(tape, filled({1, 1, 8, 8}, 0.9f), ones, Domain::kSOC).item(), 0.105361, 1e-6);
  const std::vector<Annotation> whole{{1, Box{0, 0, 64, 64}}};
  EXPECT_EQ(da_image_loss(tape, filled({1, 1, 8, 8}, 0.3f), anti_crop_mask(whole, 8, 8, 8), Domain::kHC).item(), 0.0f);
  EXPECT_THROW((void)da_image_loss(tape, filled({1, 1, 4, 4}, 0.3f), ones, Domain::kHC), std::invalid_argument);
}

TEST(DaLosses, InstanceExamples) {
  Tape tape;
  EXPECT_NEAR(da_instance_loss(tape, filled({6}, 0.5f), Domain::kSOC).item(), std::log(2.0), 1e-6);
  EXPECT_NEAR(da_instance_loss(tape, filled({6}, 0.1f), Domain::kHC).item(), 0.105361, 1e-6);
  EXPECT_EQ(da_instance_loss(tape, Tensor{}, Domain::kHC).item(), 0.0f);
}

TEST(DaLosses, ConsistencyExamples) {
  Tape tape;
  const auto ones = all_ones(2, 2);
  EXPECT_EQ(consistency_loss(tape, filled({1, 1, 2, 2}, 0.3f), ones, filled({4}, 0.3f)).item(), 0.0f);
  EXPECT_NEAR(consistency_loss(tape, filled({1, 1, 2, 2}, 0.6f), ones, filled({1}, 0.4f)).item(), 0.04, 1e-6);
  EXPECT_EQ(consistency_loss(tape, filled({1, 1, 2, 2}, 0.6f), ones, Tensor{}).item(), 0.0f);
  // Masked cells do not enter the mean: 0.2 on the usable cell, 0.9 elsewhere.
  const std::vector<Annotation> gt{{1, Box{8, 0, 16, 16}}, {1, Box{0, 8, 8, 16}}};
  const auto m = anti_crop_mask(gt, 2, 2, 8);
  ASSERT_EQ(m.count(), 1u);
  Tensor map(tensor::Shape{1, 1, 2, 2}, std::vector<float>{0.2f, 0.9f, 0.9f, 0.9f});
  EXPECT_NEAR(consistency_loss(tape, map, m, filled({2}, 0.5f)).item(), 0.09, 1e-6);
}

detector::DetectionLossBundle scalar_bundle(float a, float b, float c, float d) {
  return {Tensor::scalar(a), Tensor::scalar(b), Tensor::scalar(c), Tensor::scalar(d)};
}

TEST(TotalLoss, WeightingAndModes) {
  Tape tape;
  const auto det = scalar_bundle(0.4f, 0.1f, 0.3f, 0.2f);
  DaLossTerms da{Tensor::scalar(0.3f), Tensor::scalar(0.5f), Tensor::scalar(0.2f)};
  EXPECT_NEAR(total_loss(tape, det, da, 0.1f, DaMode::kFull).item(), 1.1, 1e-6);
  EXPECT_EQ(total_loss(tape, det, da, 0.0f, DaMode::kFull).item(), total_loss(tape, det, da, 0.1f, DaMode::kBaseline).item());
  const float inst = total_loss(tape, det, da, 0.1f, DaMode::kInstance).item();
  EXPECT_NEAR(inst, 1.03, 1e-6);
  DaLossTerms other{Tensor::scalar(0.3f), Tensor::scalar(7.0f), Tensor::scalar(9.0f)};
  EXPECT_EQ(total_loss(tape, det, other, 0.1f, DaMode::kInstance).item(), inst);
  EXPECT_THROW((void)parse_da_mode("naive"), std::invalid_argument);
  EXPECT_EQ(parse_da_mode("full"), DaMode::kFull);
}

struct Scene {
  detector::Detector det{detector::DetectorConfig{}, 21};
  DomainDiscriminators disc{DiscriminatorConfig{}, 22};
  std::vector<Annotation> gt{{1, Box{4, 6, 26, 30}}, {3, Box{38, 34, 60, 56}}};
};

TEST(Adaptation, MaskedCellsReceiveExactlyZeroGradient) {
  // Image branch input sees image + consistency; backbone features see the image loss alone
  // (the instance path may legitimately sample near masked cells).
  for (bool with_consistency : {true, false}) {
    Scene s;
    Tape tape;
    Rng rng(1);
    const Tensor f = s.det.backbone(tape, random_image(5));
    std::vector<Proposal> props;
    (void)s.det.detection_losses(tape, f, s.gt, rng, &props);
    DAOutputs da = adapt_image(tape, s.disc, s.det, f, props, s.gt, Domain::kHC, {}, DaMode::kFull);
    ASSERT_LT(da.mask.count(), 64u);
    ASSERT_GT(da.mask.count(), 0u);
    Tensor loss = with_consistency ? ops::add(tape, da.losses.image, da.losses.consistency) : da.losses.image;
    tape.backward(loss);
    const auto g = with_consistency ? da.reversed_features.grad() : f.grad();
    double usable = 0.0;
    for (std::size_t c = 0; c < 32; ++c) {
      for (std::size_t k = 0; k < 64; ++k) {
        if (da.mask.cells[k] == 0) {
          EXPECT_EQ(g[c * 64 + k], 0.0f);
        } else {
          usable += std::abs(g[c * 64 + k]);
        }
      }
    }
    EXPECT_GT(usable, 0.0);
  }
}

TEST(Adaptation, HcInstancesAreBackgroundAndSocUsesEverything) {
  Scene s;
  Tape tape;
  Rng rng(2);
  const Tensor f = s.det.backbone(tape, random_image(6));
  std::vector<Proposal> props;
  (void)s.det.detection_losses(tape, f, s.gt, rng, &props);
  const DAOutputs hc = adapt_image(tape, s.disc, s.det, f, props, s.gt, Domain::kHC, {}, DaMode::kFull);
  for (const auto& p : hc.selected) EXPECT_LE(max_iou(p.box, s.gt), 0.01);
  const DAOutputs soc = adapt_image(tape, s.disc, s.det, f, props, {}, Domain::kSOC, {}, DaMode::kFull);
  EXPECT_EQ(soc.selected.size(), props.size());
  EXPECT_EQ(soc.mask.count(), 64u);
  const DAOutputs inst = adapt_image(tape, s.disc, s.det, f, props, {}, Domain::kSOC, {}, DaMode::kInstance);
  EXPECT_FALSE(inst.image_prob_map.defined());
  EXPECT_EQ(inst.losses.instance.item(), soc.losses.instance.item());
}

TEST(Adaptation, FullyCoveredImageContributesNothing) {
  Scene s;
  Tape tape;
  Rng rng(2);
  const Tensor f = s.det.backbone(tape, random_image(6));
  const std::vector<Annotation> whole{{2, Box{0, 0, 64, 64}}};
  const std::vector<Proposal> props{{Box{0, 0, 64, 64}, 0.5f, Domain::kHC}, {Box{2, 2, 60, 60}, 0.5f, Domain::kHC}};
  const DAOutputs da = adapt_image(tape, s.disc, s.det, f, props, whole, Domain::kHC, {}, DaMode::kFull);
  EXPECT_TRUE(da.selected.empty());
  EXPECT_EQ(da.losses.instance.item(), 0.0f);
  EXPECT_EQ(da.losses.image.item(), 0.0f);
  EXPECT_EQ(da.losses.consistency.item(), 0.0f);
}

// Discriminator loss on a fixed HC + SOC pair.
float domain_loss(Scene& s, std::vector<tensor::Parameter<float>>* step_params, float lr) {
  Tape tape;
  Tensor total = Tensor::scalar(0.0f);
  for (int k = 0; k < 2; ++k) {
    const Domain dom = k == 0 ? Domain::kHC : Domain::kSOC;
    const std::span<const Annotation> gt = k == 0 ? std::span<const Annotation>(s.gt) : std::span<const Annotation>{};
    const Tensor f = s.det.backbone(tape, random_image(30 + static_cast<std::uint64_t>(k)));
    std::vector<Proposal> props;
    for (int i = 0; i < 6; ++i) {
      const double x = 6.0 * i;
      props.push_back({Box{x, 40, x + 18, 62}, 0.5f, dom});
    }
    const DAOutputs da = adapt_image(tape, s.disc, s.det, f, props, gt, dom, {}, DaMode::kFull);
    total = ops::add(tape, total, ops::add(tape, da.losses.image, da.losses.instance));
  }
  const float value = total.item();
  if (step_params != nullptr) {
    tape.backward(total);
    tensor::Sgd<float>(lr, 0.0).step(*step_params);
    s.det.parameters().zero_grad();
    s.disc.parameters().zero_grad();
  }
  return value;
}

TEST(Adaptation, HeadsDescendWhileBackboneAscends) {
  {
    Scene s;
    auto heads = s.disc.parameters().with_prefix("da.");
    const float before = domain_loss(s, &heads, 0.05f);
    EXPECT_LT(domain_loss(s, nullptr, 0.0f), before);
  }
  {
    Scene s;
    auto backbone = s.det.parameters().with_prefix("backbone.");
    const float before = domain_loss(s, &backbone, 0.05f);
    EXPECT_GT(domain_loss(s, nullptr, 0.0f), before);
  }
}

TEST(Adaptation, DecompositionAndOrderingInvariance) {
  Scene s;
  Tape tape;
  Rng rng(4);
  const Tensor f = s.det.backbone(tape, random_image(9));
  std::vector<Proposal> props;
  const auto det = s.det.detection_losses(tape, f, s.gt, rng, &props);
  const DAOutputs da = adapt_image(tape, s.disc, s.det, f, props, s.gt, Domain::kHC, {}, DaMode::kFull);
  const double total = total_loss(tape, det, da.losses, 0.1f, DaMode::kFull).item();
  const double parts = static_cast<double>(det.rpn_objectness.item()) + det.rpn_box.item() + det.roi_class.item() +
                       det.roi_box.item() +
                       0.1 * (static_cast<double>(da.losses.instance.item()) + da.losses.image.item() +
                              da.losses.consistency.item());
  EXPECT_NEAR(total, parts, 1e-6 * std::abs(parts));

  std::vector<Proposal> reversed(props.rbegin(), props.rend());
  const DAOutputs rda = adapt_image(tape, s.disc, s.det, f, reversed, s.gt, Domain::kHC, {}, DaMode::kFull);
  EXPECT_NEAR(rda.losses.instance.item(), da.losses.instance.item(), 1e-6);
  EXPECT_NEAR(rda.losses.consistency.item(), da.losses.consistency.item(), 1e-6);
  EXPECT_EQ(rda.losses.image.item(), da.losses.image.item());
}

}  // namespace
}  // namespace bafrcnn::bgda
