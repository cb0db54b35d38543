#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bafrcnn {

/// Hand-collected (labeled source) or stream-of-commerce (unlabeled target).
enum class Domain { kHC, kSOC };

inline std::string_view to_string(Domain d) noexcept { return d == Domain::kHC ? "HC" : "SOC"; }

inline Domain parse_domain(std::string_view s) {
  if (s == "HC") return Domain::kHC;
  if (s == "SOC") return Domain::kSOC;
  throw std::invalid_argument("unknown domain '" + std::string(s) + "' (expected HC or SOC)");
}

/// Discriminator target: 1 for SOC, 0 for HC.
inline constexpr float domain_target(Domain d) noexcept { return d == Domain::kSOC ? 1.0f : 0.0f; }

}  // namespace bafrcnn
