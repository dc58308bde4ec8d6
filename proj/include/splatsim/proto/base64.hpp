#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace splatsim::proto {

/// Standard alphabet with padding, no line breaks.
std::string base64_encode(const std::uint8_t* data, std::size_t size);
inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  return base64_encode(bytes.data(), bytes.size());
}
/// Throws ProtocolError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace splatsim::proto
