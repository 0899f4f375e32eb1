#include "ticketforge/mask_io.hpp"

#include <fmt/format.h>

#include "ticketforge/error.hpp"
#include "ticketforge/rng.hpp"

namespace ticketforge {

namespace {

template <class T>
void put_le(std::string& out, T value) {
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * b)) & 0xff));
  }
}

template <class T>
T get_le(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) {
    throw FormatError(fmt::format("mask record truncated at byte {}", pos), pos);
  }
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + b])) << (8 * b);
  }
  pos += sizeof(T);
  return static_cast<T>(v);
}

}  // namespace

std::string serialize_mask(const MaskSet& mask) {
  std::string out;
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(mask.layers.size()));
  for (std::size_t j = 0; j < mask.layers.size(); ++j) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(j));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(mask.shapes[j].size()));
    for (std::size_t d : mask.shapes[j]) put_le<std::uint64_t>(out, d);
    const auto& bits = mask.layers[j];
    std::string packed((bits.size() + 7) / 8, '\0');
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i]) packed[i / 8] = static_cast<char>(packed[i / 8] | (1u << (i % 8)));
    }
    out += packed;
  }
  return out;
}

MaskSet deserialize_mask(std::string_view bytes) {
  std::size_t pos = 0;
  const auto count = get_le<std::uint32_t>(bytes, pos);
  MaskSet mask;
  for (std::uint32_t j = 0; j < count; ++j) {
    const std::size_t record_start = pos;
    const auto index = get_le<std::uint32_t>(bytes, pos);
    if (index != j) {
      throw FormatError(fmt::format("mask record at byte {} has layer index {}, expected {}",
                                    record_start, index, j),
                        record_start);
    }
    const auto rank = get_le<std::uint32_t>(bytes, pos);
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(get_le<std::uint64_t>(bytes, pos));
    const std::size_t n = shape_size(shape);
    const std::size_t nbytes = (n + 7) / 8;
    if (pos + nbytes > bytes.size()) {
      throw FormatError(fmt::format("mask bitset truncated at byte {}", pos), pos);
    }
    std::vector<std::uint8_t> bits(n);
    for (std::size_t i = 0; i < n; ++i) {
      bits[i] = (static_cast<unsigned char>(bytes[pos + i / 8]) >> (i % 8)) & 1u;
    }
    pos += nbytes;
    mask.shapes.push_back(std::move(shape));
    mask.layers.push_back(std::move(bits));
  }
  if (pos != bytes.size()) {
    throw FormatError(fmt::format("{} trailing bytes after mask records", bytes.size() - pos), pos);
  }
  return mask;
}

std::uint64_t mask_digest(const MaskSet& mask, std::uint64_t previous) {
  std::string bytes;
  put_le<std::uint64_t>(bytes, previous);
  bytes += serialize_mask(mask);
  return fnv1a64(bytes);
}

std::string to_hex(std::string_view bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 0xf]);
  }
  return out;
}

std::string from_hex(std::string_view hex) {
  auto nibble = [&](char c, std::size_t pos) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw FormatError(fmt::format("invalid hex digit at offset {}", pos), pos);
  };
  if (hex.size() % 2 != 0) throw FormatError("odd-length hex string", hex.size());
  std::string out(hex.size() / 2, '\0');
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<char>(nibble(hex[2 * i], 2 * i) * 16 + nibble(hex[2 * i + 1], 2 * i + 1));
  }
  return out;
}

}  // namespace ticketforge
