#pragma once

#include <nlohmann/json.hpp>

namespace bafrcnn {

/// Overwrites `out` only when `key` is present, so omitted fields keep defaults.
template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

}  // namespace bafrcnn
