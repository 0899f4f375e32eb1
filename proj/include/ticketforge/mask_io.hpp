#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "ticketforge/mask.hpp"

namespace ticketforge {

// Binary layout, all integers little-endian:
//   u32 layer_count
//   per layer: u32 layer_index, u32 rank, u64 dims[rank],
//              ceil(n/8) bytes of bits, flat index i at byte i/8, bit i%8
std::string serialize_mask(const MaskSet& mask);
MaskSet deserialize_mask(std::string_view bytes);

/// FNV-1a of the serialized mask chained onto `previous`.
std::uint64_t mask_digest(const MaskSet& mask, std::uint64_t previous = 0);

std::string to_hex(std::string_view bytes);
std::string from_hex(std::string_view hex);

}  // namespace ticketforge
