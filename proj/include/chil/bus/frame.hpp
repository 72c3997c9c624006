#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

namespace chil::bus {

// Wire layout, all integers little-endian:
//
//   off  size  field
//   0    4     magic "HESB" (48 45 53 42)
//   4    1     version (0x01)
//   5    1     msg_type
//   6    4     seq
//   10   8     sim_time_ms
//   18   2     payload_len
//   20   n     payload: n/8 IEEE-754 doubles
//   20+n 4     crc32 of bytes [0, 20+n)
inline constexpr std::array<std::uint8_t, 4> kMagic = {0x48, 0x45, 0x53, 0x42};
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 20;
inline constexpr std::size_t kCrcSize = 4;

enum class MsgType : std::uint8_t { sensor = 0x01, setpoint = 0x02, end = 0x03, fault = 0x04 };

struct BusFrame {
  MsgType type = MsgType::end;
  std::uint32_t seq = 0;
  std::uint64_t sim_time_ms = 0;
  std::vector<double> payload;  // sensor: {p_pv_w, v_batt_v}; setpoint: {i_set_a}

  bool operator==(const BusFrame& other) const;
};

/// Number of payload values a message type carries.
std::size_t payload_values(MsgType type);

class EncodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::vector<std::uint8_t> encode_frame(const BusFrame& frame);

enum class DecodeError {
  truncated,
  bad_magic,
  bad_version,
  bad_length,
  bad_crc,
  unknown_type,
};

std::string_view to_string(DecodeError e);

using DecodeResult = std::variant<BusFrame, DecodeError>;

/// Checks in order: magic, version, length, crc, message type, payload length.
DecodeResult decode_frame(std::span<const std::uint8_t> bytes);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

/// Total frame length announced by a header (needs kHeaderSize bytes).
std::size_t frame_length_from_header(std::span<const std::uint8_t> header);

BusFrame make_sensor(std::uint32_t seq, std::uint64_t t_ms, double p_pv_w, double v_batt_v);
BusFrame make_setpoint(std::uint32_t seq, std::uint64_t t_ms, double i_set_a);
BusFrame make_end(std::uint32_t seq, std::uint64_t t_ms);
BusFrame make_fault(std::uint32_t seq, std::uint64_t t_ms);

}  // namespace chil::bus
