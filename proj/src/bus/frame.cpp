#include "chil/bus/frame.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>

namespace chil::bus {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<T>(in[offset + i]) << (8 * i));
  }
  return value;
}

bool known_type(std::uint8_t t) { return t >= 0x01 && t <= 0x04; }

}  // namespace

bool BusFrame::operator==(const BusFrame& other) const {
  if (type != other.type || seq != other.seq || sim_time_ms != other.sim_time_ms ||
      payload.size() != other.payload.size()) {
    return false;
  }
  // Bitwise so NaN payloads compare equal to themselves.
  for (std::size_t i = 0; i < payload.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(payload[i]) != std::bit_cast<std::uint64_t>(other.payload[i])) {
      return false;
    }
  }
  return true;
}

std::size_t payload_values(MsgType type) {
  switch (type) {
    case MsgType::sensor:
      return 2;
    case MsgType::setpoint:
      return 1;
    case MsgType::end:
    case MsgType::fault:
      return 0;
  }
  return 0;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(::crc32(crc, bytes.data(), static_cast<uInt>(bytes.size())));
}

std::vector<std::uint8_t> encode_frame(const BusFrame& frame) {
  if (!known_type(static_cast<std::uint8_t>(frame.type))) {
    throw EncodeError("unknown message type");
  }
  if (frame.payload.size() != payload_values(frame.type)) {
    throw EncodeError("payload length does not match message type");
  }
  const auto payload_len = static_cast<std::uint16_t>(frame.payload.size() * sizeof(double));
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + payload_len + kCrcSize);
  for (std::uint8_t b : kMagic) out.push_back(b);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(frame.type));
  put_le(out, frame.seq);
  put_le(out, frame.sim_time_ms);
  put_le(out, payload_len);
  for (double v : frame.payload) {
    put_le(out, std::bit_cast<std::uint64_t>(v));
  }
  put_le(out, crc32(out));
  return out;
}

std::size_t frame_length_from_header(std::span<const std::uint8_t> header) {
  return kHeaderSize + get_le<std::uint16_t>(header, 18) + kCrcSize;
}

DecodeResult decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) {
    return DecodeError::truncated;
  }
  const std::size_t magic_seen = std::min(bytes.size(), kMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_seen), kMagic.begin())) {
    return DecodeError::bad_magic;
  }
  if (bytes.size() <= 4) {
    return DecodeError::truncated;
  }
  if (bytes[4] != kVersion) {
    return DecodeError::bad_version;
  }
  if (bytes.size() < kHeaderSize) {
    return DecodeError::truncated;
  }
  const std::size_t total = frame_length_from_header(bytes);
  if (bytes.size() < total) {
    return DecodeError::truncated;
  }
  if (bytes.size() > total) {
    return DecodeError::bad_length;
  }
  const std::size_t body = total - kCrcSize;
  if (crc32(bytes.first(body)) != get_le<std::uint32_t>(bytes, body)) {
    return DecodeError::bad_crc;
  }
  if (!known_type(bytes[5])) {
    return DecodeError::unknown_type;
  }

  BusFrame frame;
  frame.type = static_cast<MsgType>(bytes[5]);
  const std::size_t payload_len = body - kHeaderSize;
  if (payload_len != payload_values(frame.type) * sizeof(double)) {
    return DecodeError::bad_length;
  }
  frame.seq = get_le<std::uint32_t>(bytes, 6);
  frame.sim_time_ms = get_le<std::uint64_t>(bytes, 10);
  for (std::size_t off = kHeaderSize; off < body; off += sizeof(double)) {
    frame.payload.push_back(std::bit_cast<double>(get_le<std::uint64_t>(bytes, off)));
  }
  return frame;
}

std::string_view to_string(DecodeError e) {
  switch (e) {
    case DecodeError::truncated:
      return "truncated";
    case DecodeError::bad_magic:
      return "bad magic";
    case DecodeError::bad_version:
      return "bad version";
    case DecodeError::bad_length:
      return "bad length";
    case DecodeError::bad_crc:
      return "bad crc";
    case DecodeError::unknown_type:
      return "unknown message type";
  }
  return "unknown";
}

BusFrame make_sensor(std::uint32_t seq, std::uint64_t t_ms, double p_pv_w, double v_batt_v) {
  return {MsgType::sensor, seq, t_ms, {p_pv_w, v_batt_v}};
}

BusFrame make_setpoint(std::uint32_t seq, std::uint64_t t_ms, double i_set_a) {
  return {MsgType::setpoint, seq, t_ms, {i_set_a}};
}

BusFrame make_end(std::uint32_t seq, std::uint64_t t_ms) { return {MsgType::end, seq, t_ms, {}}; }

BusFrame make_fault(std::uint32_t seq, std::uint64_t t_ms) { return {MsgType::fault, seq, t_ms, {}}; }

}  // namespace chil::bus
