#pragma once

#include <algorithm>
#include <array>
#include <string>

namespace bafrcnn::detector {

/// Axis-aligned box in image-pixel coordinates, half-open on the max side.
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  [[nodiscard]] double width() const noexcept { return x_max - x_min; }
  [[nodiscard]] double height() const noexcept { return y_max - y_min; }
  [[nodiscard]] double area() const noexcept {
    return std::max(0.0, width()) * std::max(0.0, height());
  }
  [[nodiscard]] double center_x() const noexcept { return 0.5 * (x_min + x_max); }
  [[nodiscard]] double center_y() const noexcept { return 0.5 * (y_min + y_max); }
  [[nodiscard]] bool valid() const noexcept { return x_min < x_max && y_min < y_max; }

  [[nodiscard]] Box clipped(double width_limit, double height_limit) const noexcept {
    return Box{std::clamp(x_min, 0.0, width_limit), std::clamp(y_min, 0.0, height_limit),
               std::clamp(x_max, 0.0, width_limit), std::clamp(y_max, 0.0, height_limit)};
  }

  [[nodiscard]] std::array<double, 4> as_array() const noexcept { return {x_min, y_min, x_max, y_max}; }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Intersection over union; 0 for disjoint boxes.
[[nodiscard]] inline double compute_iou(const Box& a, const Box& b) noexcept {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::string to_string(const Box& b);

}  // namespace bafrcnn::detector
