#pragma once

#include <cstdint>
#include <vector>

#include "bafrcnn/common/domain.hpp"
#include "bafrcnn/detector/types.hpp"
#include "bafrcnn/synthgen/config.hpp"
#include "bafrcnn/synthgen/shapes.hpp"

namespace bafrcnn::synthgen {

/// Darkest transmittance a generated pixel may take (keeps pixels in (0,1]).
inline constexpr float kMinTransmittance = 1e-3f;

struct XrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;  ///< row-major transmittance in (0,1]
  Domain domain = Domain::kHC;
  std::uint64_t scene_seed = 0;
};

struct Scene {
  XrayImage image;
  std::vector<detector::Annotation> annotations;
  std::vector<ObjectSpec> objects;
};

/// What a scene contains and which scanner it looks like.
struct SceneRecipe {
  bool threats = true;
  Domain style = Domain::kHC;  ///< selects clutter mix and nuisances
};

/// Gain (multiplicative) and noise (additive) fields applied after rendering.
/// They depend only on (config, style, seed), never on the objects.
struct NuisanceField {
  std::vector<double> gain;
  std::vector<double> noise;
};

NuisanceField nuisance_field(const SynthConfig& config, Domain style, std::uint64_t seed);

Scene compose_scene(const SynthConfig& config, SceneRecipe recipe, std::uint64_t seed);

/// HC: 1-3 threats and HC nuisances. SOC: no threats and SOC nuisances.
Scene generate_scene(const SynthConfig& config, Domain domain, std::uint64_t seed);

/// SOC-looking scene with HC-style threat placement (evaluation only).
Scene generate_probe_scene(const SynthConfig& config, std::uint64_t seed);

}  // namespace bafrcnn::synthgen
