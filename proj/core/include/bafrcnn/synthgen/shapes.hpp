#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bafrcnn/detector/box.hpp"

namespace bafrcnn::synthgen {

enum class ShapeKind { kKnife, kBlunt, kGun, kLag, kEllipse, kRectangle, kBlob };

/// Threat class id (Knives 1, Blunts 2, Guns 3, LAGs 4); 0 for clutter.
int class_id(ShapeKind kind) noexcept;
bool is_threat(ShapeKind kind) noexcept;

struct Pose {
  double cx = 0.0, cy = 0.0;
  double rotation = 0.0;  ///< radians
  double scale = 1.0;     ///< object length in pixels
};

struct ObjectSpec {
  ShapeKind kind = ShapeKind::kRectangle;
  double attenuation = 0.5;  ///< in (0,1)
  Pose pose;
  double aspect = 0.3;        ///< kind-specific width/length proportion
  std::uint64_t variant = 0;  ///< seeds the lobes of a blob
};

struct Point {
  double x = 0.0, y = 0.0;
};
using Polygon = std::vector<Point>;  ///< convex, counter-clockwise

/// Object outline in image coordinates as a union of convex parts.
std::vector<Polygon> object_outline(const ObjectSpec& spec);

/// Axis-aligned bounds of the outline (not clipped).
detector::Box outline_bounds(const std::vector<Polygon>& parts);

/// Beer-Lambert composition: every pixel whose center lies inside an object is
/// multiplied by (1 - attenuation) of that object; uncovered pixels stay 1.
std::vector<float> render_transmissive(std::span<const ObjectSpec> objects, std::size_t height, std::size_t width);

}  // namespace bafrcnn::synthgen
