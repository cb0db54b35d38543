#include "bafrcnn/synthgen/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bafrcnn/common/rng.hpp"

namespace bafrcnn::synthgen {
namespace {

Polygon rect(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}; }

Polygon ellipse(double cx, double cy, double rx, double ry, int segments = 24) {
  Polygon p;
  for (int k = 0; k < segments; ++k) {
    const double t = 2.0 * std::numbers::pi * k / segments;
    p.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return p;
}

// Parts in object-local units: length 1 along x, centered on the origin.
std::vector<Polygon> local_outline(const ObjectSpec& s) {
  const double a = s.aspect;
  switch (s.kind) {
    case ShapeKind::kKnife:
      return {{{-0.5, -0.5 * a}, {0.5, 0.0}, {-0.5, 0.5 * a}}};
    case ShapeKind::kBlunt:
    case ShapeKind::kRectangle:
      return {rect(-0.5, -0.5 * a, 0.5, 0.5 * a)};
    case ShapeKind::kGun: {
      // Barrel along x, grip hanging from the rear end; aspect sets grip length.
      const double t = 0.11;
      return {rect(-0.5, -t, 0.5, t), rect(-0.5, t, -0.22, t + a)};
    }
    case ShapeKind::kLag: {
      const double h = 0.5 * a;
      return {rect(-0.5, -h, 0.2, h), rect(0.2, -0.4 * h, 0.5, 0.4 * h)};
    }
    case ShapeKind::kEllipse:
      return {ellipse(0.0, 0.0, 0.5, 0.5 * a)};
    case ShapeKind::kBlob: {
      Rng rng(s.variant);
      std::vector<Polygon> parts;
      const int lobes = 3 + static_cast<int>(rng.index(3));
      for (int k = 0; k < lobes; ++k) {
        const double r = rng.uniform(0.15, 0.3);
        parts.push_back(ellipse(rng.uniform(-0.5 + r, 0.5 - r), rng.uniform(-0.5 * a, 0.5 * a), r, r, 16));
      }
      return parts;
    }
  }
  return {};
}

bool inside_convex(const Polygon& p, double x, double y) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& u = p[i];
    const Point& v = p[(i + 1) % n];
    if ((v.x - u.x) * (y - u.y) - (v.y - u.y) * (x - u.x) < 0.0) return false;
  }
  return true;
}

}  // namespace

int class_id(ShapeKind kind) noexcept {
  switch (kind) {
    case ShapeKind::kKnife:
      return 1;
    case ShapeKind::kBlunt:
      return 2;
    case ShapeKind::kGun:
      return 3;
    case ShapeKind::kLag:
      return 4;
    default:
      return 0;
  }
}

bool is_threat(ShapeKind kind) noexcept { return class_id(kind) != 0; }

std::vector<Polygon> object_outline(const ObjectSpec& spec) {
  const double c = std::cos(spec.pose.rotation), s = std::sin(spec.pose.rotation);
  const double k = spec.pose.scale;
  std::vector<Polygon> parts = local_outline(spec);
  for (Polygon& p : parts) {
    for (Point& q : p) {
      const double x = q.x * k, y = q.y * k;
      q = {spec.pose.cx + c * x - s * y, spec.pose.cy + s * x + c * y};
    }
  }
  return parts;
}

detector::Box outline_bounds(const std::vector<Polygon>& parts) {
  detector::Box b{1e300, 1e300, -1e300, -1e300};
  for (const Polygon& p : parts) {
    for (const Point& q : p) {
      b.x_min = std::min(b.x_min, q.x);
      b.y_min = std::min(b.y_min, q.y);
      b.x_max = std::max(b.x_max, q.x);
      b.y_max = std::max(b.y_max, q.y);
    }
  }
  return b;
}

std::vector<float> render_transmissive(std::span<const ObjectSpec> objects, std::size_t height, std::size_t width) {
  std::vector<double> acc(height * width, 1.0);
  for (const ObjectSpec& o : objects) {
    const auto parts = object_outline(o);
    const detector::Box b = outline_bounds(parts);
    const auto lo_x = static_cast<std::ptrdiff_t>(std::floor(std::max(b.x_min, 0.0)));
    const auto lo_y = static_cast<std::ptrdiff_t>(std::floor(std::max(b.y_min, 0.0)));
    const auto hi_x = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::ceil(b.x_max)), static_cast<std::ptrdiff_t>(width));
    const auto hi_y = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::ceil(b.y_max)), static_cast<std::ptrdiff_t>(height));
    const double keep = 1.0 - o.attenuation;
    for (std::ptrdiff_t y = lo_y; y < hi_y; ++y) {
      for (std::ptrdiff_t x = lo_x; x < hi_x; ++x) {
        const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
        const bool covered = std::any_of(parts.begin(), parts.end(), [&](const Polygon& p) { return inside_convex(p, px, py); });
        if (covered) acc[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] *= keep;
      }
    }
  }
  return std::vector<float>(acc.begin(), acc.end());
}

}  // namespace bafrcnn::synthgen
