#pragma once

// Binary framing of collective messages.
//
// Header, 21 bytes, all little-endian:
//   offset 0   u8   kind (0 scatter, 1 all_to_all, 2 gather, 3 barrier)
//   offset 1   u64  generation
//   offset 9   u32  source rank
//   offset 13  u64  payload length in bytes
// Payload: IEEE-754 binary64 values, re/im interleaved, little-endian.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "taskfft/kernel.hpp"
#include "taskfft/matrix.hpp"

namespace taskfft {

enum class CollectiveKind : std::uint8_t { scatter = 0, all_to_all = 1, gather = 2, barrier = 3 };

const char* to_string(CollectiveKind k) noexcept;

struct CollectiveTag {
  std::uint64_t generation = 0;
  CollectiveKind kind = CollectiveKind::barrier;
  friend constexpr bool operator==(const CollectiveTag&, const CollectiveTag&) = default;
};

std::string to_string(const CollectiveTag& t);

struct WireMessage {
  CollectiveTag tag;
  LocalityId source;
  std::vector<Complex> payload;
};

inline constexpr std::size_t wire_header_size = 21;
inline constexpr std::size_t wire_sample_size = 16;

struct WireHeader {
  CollectiveTag tag;
  std::uint32_t source = 0;
  std::uint64_t payload_bytes = 0;
};

[[nodiscard]] std::array<std::byte, wire_header_size> encode_header(const WireHeader& h);
/// Throws ProtocolError on an unknown kind or a length that is not a whole
/// number of samples.
[[nodiscard]] WireHeader decode_header(std::span<const std::byte, wire_header_size> bytes);

void encode_payload(std::span<const Complex> in, std::span<std::byte> out);
void decode_payload(std::span<const std::byte> in, std::span<Complex> out);

[[nodiscard]] std::vector<std::byte> encode(const WireMessage& m);
/// Decodes one complete frame. Throws ProtocolError if the buffer length
/// disagrees with the header.
[[nodiscard]] WireMessage decode(std::span<const std::byte> frame);

}  // namespace taskfft
