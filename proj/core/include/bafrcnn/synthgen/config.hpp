#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace bafrcnn::synthgen {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Periphery darkening, scanner stripes and sensor noise of the labeled lab scanners.
struct HcNuisance {
  double vignette_amplitude = 0.18;
  double stripe_amplitude = 0.08;
  double stripe_period = 6.0;
  double noise_sigma = 0.015;
};

/// Adjacent-bag edge crops, a distinct noise level and a smooth background texture.
struct SocNuisance {
  double edge_crop_probability = 0.5;
  Range edge_crop_width{4.0, 12.0};
  Range edge_crop_attenuation{0.3, 0.6};
  double noise_sigma = 0.04;
  double texture_amplitude = 0.10;
  double texture_scale = 5.0;  ///< dominant wavelength in pixels
};

struct SynthConfig {
  std::size_t image_size = 64;
  std::size_t hc_threats_min = 1, hc_threats_max = 3;
  std::size_t hc_clutter_min = 3, hc_clutter_max = 10;
  std::size_t soc_clutter_min = 5, soc_clutter_max = 15;

  Range threat_scale{16.0, 28.0};  ///< object length in pixels
  Range knife_attenuation{0.5, 0.7};
  Range blunt_attenuation{0.55, 0.75};
  Range gun_attenuation{0.6, 0.8};
  Range lag_attenuation{0.45, 0.65};

  Range clutter_scale{8.0, 30.0};
  Range clutter_attenuation{0.08, 0.3};
  /// Share of clutter drawn as dense thin bars resembling threats.
  double hc_confuser_fraction = 0.1;
  double soc_confuser_fraction = 0.35;
  Range confuser_scale{14.0, 26.0};
  Range confuser_aspect{0.12, 0.22};
  Range confuser_attenuation{0.35, 0.6};

  bool nuisances_enabled = true;
  HcNuisance hc;
  SocNuisance soc;

  /// Smallest fraction of a threat's unclipped box that must remain on canvas.
  double min_visible_fraction = 0.6;
  std::size_t max_placement_retries = 100;

  void validate() const;
};

void to_json(nlohmann::json& j, const Range& r);
void from_json(const nlohmann::json& j, Range& r);
void to_json(nlohmann::json& j, const HcNuisance& n);
void from_json(const nlohmann::json& j, HcNuisance& n);
void to_json(nlohmann::json& j, const SocNuisance& n);
void from_json(const nlohmann::json& j, SocNuisance& n);
void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

/// FNV-1a of the canonical JSON form, as 16 hex digits.
std::string config_hash(const SynthConfig& c);

}  // namespace bafrcnn::synthgen
