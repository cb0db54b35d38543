#include "bafrcnn/detector/box.hpp"

#include <sstream>

namespace bafrcnn::detector {

std::string to_string(const Box& b) {
  std::ostringstream os;
  os << "[" << b.x_min << ", " << b.y_min << ", " << b.x_max << ", " << b.y_max << "]";
  return os.str();
}

}  // namespace bafrcnn::detector
