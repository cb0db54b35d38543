#include "bafrcnn/synthgen/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "bafrcnn/common/rng.hpp"

namespace bafrcnn::synthgen {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double draw(Rng& rng, const Range& r) { return rng.uniform(r.lo, r.hi); }

Range threat_aspect(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kKnife:
      return {0.2, 0.32};
    case ShapeKind::kBlunt:
      return {0.28, 0.42};
    case ShapeKind::kGun:
      return {0.45, 0.7};
    default:
      return {0.32, 0.46};
  }
}

const Range& threat_attenuation(const SynthConfig& c, ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kKnife:
      return c.knife_attenuation;
    case ShapeKind::kBlunt:
      return c.blunt_attenuation;
    case ShapeKind::kGun:
      return c.gun_attenuation;
    default:
      return c.lag_attenuation;
  }
}

void place_threats(const SynthConfig& c, Rng& rng, std::vector<ObjectSpec>& objects,
                   std::vector<detector::Annotation>& annotations) {
  static constexpr ShapeKind kKinds[] = {ShapeKind::kKnife, ShapeKind::kBlunt, ShapeKind::kGun, ShapeKind::kLag};
  const double size = static_cast<double>(c.image_size);
  const auto count = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(c.hc_threats_min), static_cast<std::int64_t>(c.hc_threats_max)));
  for (std::size_t t = 0; t < count; ++t) {
    const ShapeKind kind = kKinds[rng.index(4)];
    bool placed = false;
    for (std::size_t attempt = 0; attempt < c.max_placement_retries && !placed; ++attempt) {
      ObjectSpec o;
      o.kind = kind;
      o.attenuation = draw(rng, threat_attenuation(c, kind));
      o.aspect = draw(rng, threat_aspect(kind));
      o.pose = Pose{rng.uniform(0.0, size), rng.uniform(0.0, size), rng.uniform(0.0, kTwoPi), draw(rng, c.threat_scale)};
      const detector::Box full = outline_bounds(object_outline(o));
      const detector::Box vis = full.clipped(size, size);
      if (!vis.valid() || vis.width() < 2.0 || vis.height() < 2.0) continue;
      if (vis.area() < c.min_visible_fraction * full.area()) continue;
      // Keep threats separable from one another.
      const bool crowded = std::any_of(annotations.begin(), annotations.end(),
                                       [&](const detector::Annotation& a) { return detector::compute_iou(a.box, vis) > 0.3; });
      if (crowded) continue;
      objects.push_back(o);
      annotations.push_back({class_id(kind), vis});
      placed = true;
    }
    if (!placed) {
      throw std::runtime_error("generate_scene: could not place a threat within " +
                               std::to_string(c.max_placement_retries) + " attempts");
    }
  }
}

void place_clutter(const SynthConfig& c, Domain style, Rng& rng, std::vector<ObjectSpec>& objects) {
  const double size = static_cast<double>(c.image_size);
  const bool hc = style == Domain::kHC;
  const auto lo = static_cast<std::int64_t>(hc ? c.hc_clutter_min : c.soc_clutter_min);
  const auto hi = static_cast<std::int64_t>(hc ? c.hc_clutter_max : c.soc_clutter_max);
  const double confuser_p = hc ? c.hc_confuser_fraction : c.soc_confuser_fraction;
  const auto count = rng.uniform_int(lo, hi);
  for (std::int64_t k = 0; k < count; ++k) {
    ObjectSpec o;
    o.pose.cx = rng.uniform(0.0, size);
    o.pose.cy = rng.uniform(0.0, size);
    o.pose.rotation = rng.uniform(0.0, kTwoPi);
    o.variant = rng.next_u64();
    if (rng.bernoulli(confuser_p)) {
      o.kind = ShapeKind::kRectangle;
      o.pose.scale = draw(rng, c.confuser_scale);
      o.aspect = draw(rng, c.confuser_aspect);
      o.attenuation = draw(rng, c.confuser_attenuation);
    } else {
      static constexpr ShapeKind kClutter[] = {ShapeKind::kEllipse, ShapeKind::kRectangle, ShapeKind::kBlob};
      o.kind = kClutter[rng.index(3)];
      o.pose.scale = draw(rng, c.clutter_scale);
      o.aspect = rng.uniform(0.3, 1.0);
      o.attenuation = draw(rng, c.clutter_attenuation);
    }
    objects.push_back(o);
  }
}

}  // namespace

NuisanceField nuisance_field(const SynthConfig& c, Domain style, std::uint64_t seed) {
  const std::size_t n = c.image_size;
  NuisanceField f{std::vector<double>(n * n, 1.0), std::vector<double>(n * n, 0.0)};
  if (!c.nuisances_enabled) return f;
  Rng rng = Rng(seed).fork("nuisance");
  const double half = 0.5 * static_cast<double>(n);
  double sigma = 0.0;
  if (style == Domain::kHC) {
    const double vig = c.hc.vignette_amplitude * rng.uniform(0.8, 1.2);
    const double stripe = c.hc.stripe_amplitude * rng.uniform(0.8, 1.2);
    const double phase = rng.uniform(0.0, kTwoPi);
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const double dx = (static_cast<double>(x) + 0.5 - half) / half;
        const double dy = (static_cast<double>(y) + 0.5 - half) / half;
        const double r2 = 0.5 * (dx * dx + dy * dy);
        const double s = 0.5 + 0.5 * std::sin(kTwoPi * static_cast<double>(x) / c.hc.stripe_period + phase);
        f.gain[y * n + x] = (1.0 - vig * r2 * r2) * (1.0 - stripe * s);
      }
    }
    sigma = c.hc.noise_sigma;
  } else {
    struct Wave {
      double kx, ky, phase;
    };
    Wave waves[3];
    for (Wave& w : waves) {
      const double theta = rng.uniform(0.0, kTwoPi);
      const double k = kTwoPi / (c.soc.texture_scale * rng.uniform(0.8, 1.25));
      w = {k * std::cos(theta), k * std::sin(theta), rng.uniform(0.0, kTwoPi)};
    }
    const double amp = c.soc.texture_amplitude * rng.uniform(0.8, 1.2);
    const bool crop = rng.bernoulli(c.soc.edge_crop_probability);
    const bool left = rng.bernoulli(0.5);
    const double crop_w = draw(rng, c.soc.edge_crop_width);
    const double crop_a = draw(rng, c.soc.edge_crop_attenuation);
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        double t = 0.0;
        for (const Wave& w : waves) t += std::sin(w.kx * static_cast<double>(x) + w.ky * static_cast<double>(y) + w.phase);
        double g = 1.0 - amp * (0.5 + t / 6.0);
        const double px = static_cast<double>(x) + 0.5;
        const double edge = left ? px : static_cast<double>(n) - px;
        if (crop && edge < crop_w) g *= 1.0 - crop_a;
        f.gain[y * n + x] = g;
      }
    }
    sigma = c.soc.noise_sigma;
  }
  for (double& v : f.noise) v = rng.normal(0.0, sigma);
  return f;
}

Scene compose_scene(const SynthConfig& c, SceneRecipe recipe, std::uint64_t seed) {
  c.validate();
  Scene scene;
  const Rng root(seed);
  Rng threat_rng = root.fork("threats");
  Rng clutter_rng = root.fork("clutter");
  if (recipe.threats) place_threats(c, threat_rng, scene.objects, scene.annotations);
  place_clutter(c, recipe.style, clutter_rng, scene.objects);

  const std::size_t n = c.image_size;
  std::vector<float> px = render_transmissive(scene.objects, n, n);
  const NuisanceField f = nuisance_field(c, recipe.style, seed);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double v = static_cast<double>(px[i]) * f.gain[i] + f.noise[i];
    px[i] = std::clamp(static_cast<float>(v), kMinTransmittance, 1.0f);
  }
  scene.image = XrayImage{n, n, std::move(px), recipe.style, seed};
  return scene;
}

Scene generate_scene(const SynthConfig& c, Domain domain, std::uint64_t seed) {
  return compose_scene(c, SceneRecipe{domain == Domain::kHC, domain}, seed);
}

Scene generate_probe_scene(const SynthConfig& c, std::uint64_t seed) {
  return compose_scene(c, SceneRecipe{true, Domain::kSOC}, seed);
}

}  // namespace bafrcnn::synthgen
