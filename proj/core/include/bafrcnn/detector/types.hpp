#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "bafrcnn/common/domain.hpp"
#include "bafrcnn/detector/box.hpp"
#include "bafrcnn/tensor/tensor.hpp"

namespace bafrcnn::detector {

using Tensor = tensor::Tensor<float>;

inline constexpr int kBackgroundClass = 0;
inline constexpr int kNumThreatClasses = 4;
inline constexpr std::array<std::string_view, kNumThreatClasses> kClassNames = {"Knives", "Blunts", "Guns", "LAGs"};

/// Class id in [1, 4] -> column name used by reports.
inline std::string_view class_name(int class_id) { return kClassNames.at(static_cast<std::size_t>(class_id - 1)); }

struct Annotation {
  int class_id = 1;
  Box box;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Proposal {
  Box box;
  float objectness = 0.0f;
  Domain source_domain = Domain::kHC;
};

struct Detection {
  int class_id = 1;
  float score = 0.0f;
  Box box;
};

/// Detection-side losses for one image. Each is a [1] tensor on the tape.
struct DetectionLossBundle {
  Tensor rpn_objectness;
  Tensor rpn_box;
  Tensor roi_class;
  Tensor roi_box;
};

}  // namespace bafrcnn::detector
