#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace morphdis {

// CRC-32C (Castagnoli), reflected, init and final xor 0xFFFFFFFF.
std::uint32_t crc32c(std::span<const unsigned char> bytes);

inline std::uint32_t crc32c(std::string_view s) {
  return crc32c(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

}  // namespace morphdis
