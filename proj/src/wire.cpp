#include "taskfft/wire.hpp"

#include <bit>
#include <cstring>

#include "taskfft/error.hpp"

namespace taskfft {

namespace {

template <class U>
void put_le(std::byte* out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out[i] = static_cast<std::byte>(v & 0xffu);
    v = static_cast<U>(v >> 8);
  }
}

template <class U>
U get_le(const std::byte* in) {
  U v = 0;
  for (std::size_t i = sizeof(U); i-- > 0;) {
    v = static_cast<U>((v << 8) | std::to_integer<U>(in[i]));
  }
  return v;
}

}  // namespace

const char* to_string(CollectiveKind k) noexcept {
  switch (k) {
    case CollectiveKind::scatter:
      return "scatter";
    case CollectiveKind::all_to_all:
      return "all_to_all";
    case CollectiveKind::gather:
      return "gather";
    case CollectiveKind::barrier:
      return "barrier";
  }
  return "unknown";
}

std::string to_string(const CollectiveTag& t) {
  return std::string{to_string(t.kind)} + "#" + std::to_string(t.generation);
}

std::array<std::byte, wire_header_size> encode_header(const WireHeader& h) {
  std::array<std::byte, wire_header_size> out{};
  out[0] = static_cast<std::byte>(h.tag.kind);
  put_le<std::uint64_t>(out.data() + 1, h.tag.generation);
  put_le<std::uint32_t>(out.data() + 9, h.source);
  put_le<std::uint64_t>(out.data() + 13, h.payload_bytes);
  return out;
}

WireHeader decode_header(std::span<const std::byte, wire_header_size> bytes) {
  const auto kind = std::to_integer<std::uint8_t>(bytes[0]);
  if (kind > static_cast<std::uint8_t>(CollectiveKind::barrier)) {
    throw ProtocolError("unknown collective kind " + std::to_string(kind));
  }
  WireHeader h;
  h.tag.kind = static_cast<CollectiveKind>(kind);
  h.tag.generation = get_le<std::uint64_t>(bytes.data() + 1);
  h.source = get_le<std::uint32_t>(bytes.data() + 9);
  h.payload_bytes = get_le<std::uint64_t>(bytes.data() + 13);
  if (h.payload_bytes % wire_sample_size != 0) {
    throw ProtocolError("payload length " + std::to_string(h.payload_bytes) +
                        " is not a multiple of " + std::to_string(wire_sample_size));
  }
  return h;
}

void encode_payload(std::span<const Complex> in, std::span<std::byte> out) {
  if (out.size() != in.size() * wire_sample_size) {
    throw ShapeError("payload buffer of " + std::to_string(out.size()) + " bytes for " +
                     std::to_string(in.size()) + " samples");
  }
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.empty()) std::memcpy(out.data(), in.data(), out.size());
  } else {
    for (std::size_t i = 0; i < in.size(); ++i) {
      put_le(out.data() + 16 * i, std::bit_cast<std::uint64_t>(in[i].real()));
      put_le(out.data() + 16 * i + 8, std::bit_cast<std::uint64_t>(in[i].imag()));
    }
  }
}

void decode_payload(std::span<const std::byte> in, std::span<Complex> out) {
  if (in.size() != out.size() * wire_sample_size) {
    throw ProtocolError("payload of " + std::to_string(in.size()) + " bytes, expected " +
                        std::to_string(out.size() * wire_sample_size));
  }
  if constexpr (std::endian::native == std::endian::little) {
    if (!out.empty()) std::memcpy(out.data(), in.data(), in.size());
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = {std::bit_cast<double>(get_le<std::uint64_t>(in.data() + 16 * i)),
                std::bit_cast<double>(get_le<std::uint64_t>(in.data() + 16 * i + 8))};
    }
  }
}

std::vector<std::byte> encode(const WireMessage& m) {
  const std::uint64_t bytes = m.payload.size() * wire_sample_size;
  std::vector<std::byte> out(wire_header_size + bytes);
  const auto header = encode_header(
      WireHeader{m.tag, static_cast<std::uint32_t>(m.source.rank), bytes});
  std::memcpy(out.data(), header.data(), header.size());
  encode_payload(m.payload, std::span{out}.subspan(wire_header_size));
  return out;
}

WireMessage decode(std::span<const std::byte> frame) {
  if (frame.size() < wire_header_size) {
    throw ProtocolError("frame of " + std::to_string(frame.size()) + " bytes is shorter than a header");
  }
  const auto h = decode_header(frame.first<wire_header_size>());
  if (frame.size() - wire_header_size != h.payload_bytes) {
    throw ProtocolError("frame carries " + std::to_string(frame.size() - wire_header_size) +
                        " payload bytes, header says " + std::to_string(h.payload_bytes));
  }
  WireMessage m;
  m.tag = h.tag;
  m.source = LocalityId{h.source};
  m.payload.resize(h.payload_bytes / wire_sample_size);
  decode_payload(frame.subspan(wire_header_size), m.payload);
  return m;
}

}  // namespace taskfft
