#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <random>

#include "chil/bus/frame.hpp"
#include "chil/bus/session.hpp"

using namespace chil::bus;

namespace {

std::uint32_t crc_bitwise(std::span<const std::uint8_t> data) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::uint8_t b : data) {
    c ^= b;
    for (int i = 0; i < 8; ++i) c = (c >> 1) ^ (0xEDB88320u & (0u - (c & 1u)));
  }
  return ~c;
}

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

// Hand-assembled frame following the documented layout.
std::vector<std::uint8_t> assemble(std::uint8_t type, std::uint32_t seq, std::uint64_t t_ms,
                                   const std::vector<double>& payload) {
  std::vector<std::uint8_t> out = {'H', 'E', 'S', 'B', 0x01, type};
  put_le(out, seq, 4);
  put_le(out, t_ms, 8);
  put_le(out, payload.size() * 8, 2);
  for (double d : payload) put_le(out, std::bit_cast<std::uint64_t>(d), 8);
  put_le(out, crc_bitwise(out), 4);
  return out;
}

void fix_crc(std::vector<std::uint8_t>& f) {
  f.resize(f.size() - 4);
  put_le(f, crc_bitwise(f), 4);
}

DecodeError error_of(const std::vector<std::uint8_t>& bytes) {
  auto r = decode_frame(bytes);
  EXPECT_TRUE(std::holds_alternative<DecodeError>(r));
  return std::holds_alternative<DecodeError>(r) ? std::get<DecodeError>(r) : DecodeError::truncated;
}

}  // namespace

TEST(Crc, KnownVector) {
  const std::string s = "123456789";
  std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
  EXPECT_EQ(crc32(bytes), 0xCBF43926u);
  EXPECT_EQ(crc_bitwise(bytes), 0xCBF43926u);
}

TEST(Frame, Lengths) {
  EXPECT_EQ(encode_frame(make_sensor(1, 0, 1000, 53)).size(), 40u);
  EXPECT_EQ(encode_frame(make_setpoint(1, 0, 2)).size(), 32u);
  EXPECT_EQ(encode_frame(make_end(2, 5000)).size(), 24u);
  EXPECT_EQ(encode_frame(make_fault(2, 5000)).size(), 24u);
}

TEST(Frame, MatchesHandAssembledLayout) {
  EXPECT_EQ(encode_frame(make_sensor(7, 30000, 1234.5, 53.25)), assemble(1, 7, 30000, {1234.5, 53.25}));
  EXPECT_EQ(encode_frame(make_setpoint(0xA1B2C3D4, 0x0102030405060708ull, -3.5)),
            assemble(2, 0xA1B2C3D4, 0x0102030405060708ull, {-3.5}));
  EXPECT_EQ(encode_frame(make_end(9, 45000)), assemble(3, 9, 45000, {}));
}

TEST(Frame, RoundTripRandom) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20000; ++i) {
    const auto seq = static_cast<std::uint32_t>(rng());
    const std::uint64_t t = rng();
    BusFrame f;
    switch (rng() % 4) {
      case 0: f = make_sensor(seq, t, std::bit_cast<double>(rng()), std::bit_cast<double>(rng())); break;
      case 1: f = make_setpoint(seq, t, std::bit_cast<double>(rng())); break;
      case 2: f = make_end(seq, t); break;
      default: f = make_fault(seq, t); break;
    }
    auto bytes = encode_frame(f);
    auto back = decode_frame(bytes);
    ASSERT_TRUE(std::holds_alternative<BusFrame>(back));
    ASSERT_TRUE(std::get<BusFrame>(back) == f);
  }
}

TEST(Frame, EverySingleBitFlipRejected) {
  for (const auto& f : {make_sensor(3, 10000, 2500.125, 53.1), make_setpoint(3, 10000, -12.75), make_end(4, 1),
                        make_fault(4, 1)}) {
    const auto good = encode_frame(f);
    for (std::size_t bit = 0; bit < good.size() * 8; ++bit) {
      Bytes bad = good;
      flip_bit(bad, bit);
      EXPECT_TRUE(std::holds_alternative<DecodeError>(decode_frame(bad))) << "bit " << bit;
    }
  }
}

TEST(Frame, ErrorPrecedence) {
  EXPECT_EQ(error_of({}), DecodeError::truncated);
  auto good = encode_frame(make_sensor(1, 0, 1, 2));

  auto f = good;
  f[0] = 'X';  // crc left stale as well
  EXPECT_EQ(error_of(f), DecodeError::bad_magic);

  f = good;
  f[4] = 2;
  EXPECT_EQ(error_of(f), DecodeError::bad_version);

  f = good;
  f.push_back(0);
  EXPECT_EQ(error_of(f), DecodeError::bad_length);

  f = good;
  f.pop_back();
  EXPECT_EQ(error_of(f), DecodeError::truncated);

  f = good;
  f[25] ^= 1;
  EXPECT_EQ(error_of(f), DecodeError::bad_crc);

  f = good;
  f[5] = 9;
  fix_crc(f);
  EXPECT_EQ(error_of(f), DecodeError::unknown_type);

  // SENSOR header announcing a SETPOINT-sized payload.
  f = assemble(1, 1, 0, {5.0});
  EXPECT_EQ(error_of(f), DecodeError::bad_length);
}

TEST(Frame, EncodeRejectsPayloadMismatch) {
  BusFrame f = make_setpoint(1, 0, 1);
  f.payload.push_back(2);
  EXPECT_THROW(encode_frame(f), EncodeError);
}

TEST(Frame, HeaderAnnouncesLength) {
  auto bytes = encode_frame(make_sensor(1, 0, 1, 2));
  EXPECT_EQ(frame_length_from_header(bytes), 40u);
}

TEST(Hex, RoundTrip) {
  auto bytes = encode_frame(make_setpoint(5, 25000, 1.5));
  EXPECT_EQ(from_hex(to_hex(bytes)), bytes);
  EXPECT_EQ(to_hex(std::vector<std::uint8_t>{0x48, 0x0f}), "480f");
}
