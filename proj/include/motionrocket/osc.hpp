#pragma once

// Minimal OSC 1.0 encoder for the trigger message: address, ",if", int32 label, float32 probability.

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace motionrocket::osc {

namespace detail {

// OSC strings are NUL-terminated and padded with NULs to a multiple of 4.
inline void put_string(std::vector<std::uint8_t>& out, std::string_view s) {
  out.insert(out.end(), s.begin(), s.end());
  const std::size_t pad = 4 - (s.size() % 4);
  out.insert(out.end(), pad, 0);
}

inline void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_message(std::string_view address, std::int32_t label, float probability) {
  if (address.empty() || address.front() != '/') throw std::invalid_argument("OSC address must begin with '/'");
  if (address.find('\0') != std::string_view::npos) throw std::invalid_argument("OSC address must not contain NUL");
  std::vector<std::uint8_t> out;
  out.reserve(address.size() + 16);
  detail::put_string(out, address);
  detail::put_string(out, ",if");
  detail::put_u32_be(out, static_cast<std::uint32_t>(label));
  detail::put_u32_be(out, std::bit_cast<std::uint32_t>(probability));
  return out;
}

}  // namespace motionrocket::osc
