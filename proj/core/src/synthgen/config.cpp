#include "bafrcnn/synthgen/config.hpp"

#include <stdexcept>

#include "bafrcnn/common/hex.hpp"
#include "bafrcnn/common/json_fields.hpp"
#include "bafrcnn/common/rng.hpp"

namespace bafrcnn::synthgen {
namespace {

void check_range(const Range& r, double lo, double hi, const char* name) {
  if (!(r.lo >= lo && r.hi <= hi && r.lo <= r.hi)) {
    throw std::invalid_argument(std::string("SynthConfig: ") + name + " must satisfy " + std::to_string(lo) +
                                " <= lo <= hi <= " + std::to_string(hi));
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (image_size < 16) throw std::invalid_argument("SynthConfig: image_size must be at least 16");
  if (hc_threats_min < 1 || hc_threats_min > hc_threats_max) {
    throw std::invalid_argument("SynthConfig: HC scenes need 1 <= hc_threats_min <= hc_threats_max");
  }
  if (hc_clutter_min > hc_clutter_max || soc_clutter_min > soc_clutter_max) {
    throw std::invalid_argument("SynthConfig: clutter min exceeds max");
  }
  const double size = static_cast<double>(image_size);
  check_range(threat_scale, 2.0, size, "threat_scale");
  check_range(clutter_scale, 1.0, 2.0 * size, "clutter_scale");
  check_range(confuser_scale, 1.0, 2.0 * size, "confuser_scale");
  check_range(confuser_aspect, 0.01, 1.0, "confuser_aspect");
  // Attenuation 1 would give zero transmittance; keep it strictly inside (0,1).
  const double hi = 0.99;
  check_range(knife_attenuation, 0.01, hi, "knife_attenuation");
  check_range(blunt_attenuation, 0.01, hi, "blunt_attenuation");
  check_range(gun_attenuation, 0.01, hi, "gun_attenuation");
  check_range(lag_attenuation, 0.01, hi, "lag_attenuation");
  check_range(clutter_attenuation, 0.01, hi, "clutter_attenuation");
  check_range(confuser_attenuation, 0.01, hi, "confuser_attenuation");
  check_range(soc.edge_crop_attenuation, 0.0, hi, "soc.edge_crop_attenuation");
  check_range(soc.edge_crop_width, 0.0, size, "soc.edge_crop_width");
  if (!(hc_confuser_fraction >= 0 && hc_confuser_fraction <= 1 && soc_confuser_fraction >= 0 &&
        soc_confuser_fraction <= 1 && soc.edge_crop_probability >= 0 && soc.edge_crop_probability <= 1)) {
    throw std::invalid_argument("SynthConfig: fractions and probabilities must lie in [0, 1]");
  }
  if (hc.noise_sigma < 0 || soc.noise_sigma < 0 || hc.vignette_amplitude < 0 || hc.vignette_amplitude >= 1 ||
      hc.stripe_amplitude < 0 || hc.stripe_amplitude >= 1 || soc.texture_amplitude < 0 ||
      soc.texture_amplitude >= 1) {
    throw std::invalid_argument("SynthConfig: nuisance amplitudes must lie in [0, 1) and noise must be >= 0");
  }
  if (!(hc.stripe_period > 0 && soc.texture_scale > 0)) {
    throw std::invalid_argument("SynthConfig: stripe_period and texture_scale must be positive");
  }
  if (!(min_visible_fraction > 0 && min_visible_fraction <= 1) || max_placement_retries == 0) {
    throw std::invalid_argument("SynthConfig: placement settings out of range");
  }
}

void to_json(nlohmann::json& j, const Range& r) { j = nlohmann::json::array({r.lo, r.hi}); }

void from_json(const nlohmann::json& j, Range& r) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("range must be a [lo, hi] array");
  r.lo = j[0].get<double>();
  r.hi = j[1].get<double>();
}

void to_json(nlohmann::json& j, const HcNuisance& n) {
  j = {{"vignette_amplitude", n.vignette_amplitude},
       {"stripe_amplitude", n.stripe_amplitude},
       {"stripe_period", n.stripe_period},
       {"noise_sigma", n.noise_sigma}};
}

void from_json(const nlohmann::json& j, HcNuisance& n) {
  read_field(j, "vignette_amplitude", n.vignette_amplitude);
  read_field(j, "stripe_amplitude", n.stripe_amplitude);
  read_field(j, "stripe_period", n.stripe_period);
  read_field(j, "noise_sigma", n.noise_sigma);
}

void to_json(nlohmann::json& j, const SocNuisance& n) {
  j = {{"edge_crop_probability", n.edge_crop_probability},
       {"edge_crop_width", n.edge_crop_width},
       {"edge_crop_attenuation", n.edge_crop_attenuation},
       {"noise_sigma", n.noise_sigma},
       {"texture_amplitude", n.texture_amplitude},
       {"texture_scale", n.texture_scale}};
}

void from_json(const nlohmann::json& j, SocNuisance& n) {
  read_field(j, "edge_crop_probability", n.edge_crop_probability);
  read_field(j, "edge_crop_width", n.edge_crop_width);
  read_field(j, "edge_crop_attenuation", n.edge_crop_attenuation);
  read_field(j, "noise_sigma", n.noise_sigma);
  read_field(j, "texture_amplitude", n.texture_amplitude);
  read_field(j, "texture_scale", n.texture_scale);
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = {{"image_size", c.image_size},
       {"hc_threats_min", c.hc_threats_min},
       {"hc_threats_max", c.hc_threats_max},
       {"hc_clutter_min", c.hc_clutter_min},
       {"hc_clutter_max", c.hc_clutter_max},
       {"soc_clutter_min", c.soc_clutter_min},
       {"soc_clutter_max", c.soc_clutter_max},
       {"threat_scale", c.threat_scale},
       {"knife_attenuation", c.knife_attenuation},
       {"blunt_attenuation", c.blunt_attenuation},
       {"gun_attenuation", c.gun_attenuation},
       {"lag_attenuation", c.lag_attenuation},
       {"clutter_scale", c.clutter_scale},
       {"clutter_attenuation", c.clutter_attenuation},
       {"hc_confuser_fraction", c.hc_confuser_fraction},
       {"soc_confuser_fraction", c.soc_confuser_fraction},
       {"confuser_scale", c.confuser_scale},
       {"confuser_aspect", c.confuser_aspect},
       {"confuser_attenuation", c.confuser_attenuation},
       {"nuisances_enabled", c.nuisances_enabled},
       {"hc", c.hc},
       {"soc", c.soc},
       {"min_visible_fraction", c.min_visible_fraction},
       {"max_placement_retries", c.max_placement_retries}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  read_field(j, "image_size", c.image_size);
  read_field(j, "hc_threats_min", c.hc_threats_min);
  read_field(j, "hc_threats_max", c.hc_threats_max);
  read_field(j, "hc_clutter_min", c.hc_clutter_min);
  read_field(j, "hc_clutter_max", c.hc_clutter_max);
  read_field(j, "soc_clutter_min", c.soc_clutter_min);
  read_field(j, "soc_clutter_max", c.soc_clutter_max);
  read_field(j, "threat_scale", c.threat_scale);
  read_field(j, "knife_attenuation", c.knife_attenuation);
  read_field(j, "blunt_attenuation", c.blunt_attenuation);
  read_field(j, "gun_attenuation", c.gun_attenuation);
  read_field(j, "lag_attenuation", c.lag_attenuation);
  read_field(j, "clutter_scale", c.clutter_scale);
  read_field(j, "clutter_attenuation", c.clutter_attenuation);
  read_field(j, "hc_confuser_fraction", c.hc_confuser_fraction);
  read_field(j, "soc_confuser_fraction", c.soc_confuser_fraction);
  read_field(j, "confuser_scale", c.confuser_scale);
  read_field(j, "confuser_aspect", c.confuser_aspect);
  read_field(j, "confuser_attenuation", c.confuser_attenuation);
  read_field(j, "nuisances_enabled", c.nuisances_enabled);
  read_field(j, "hc", c.hc);
  read_field(j, "soc", c.soc);
  read_field(j, "min_visible_fraction", c.min_visible_fraction);
  read_field(j, "max_placement_retries", c.max_placement_retries);
}

std::string config_hash(const SynthConfig& c) {
  const nlohmann::json j = c;
  return to_hex64(fnv1a64(j.dump()));
}

}  // namespace bafrcnn::synthgen
