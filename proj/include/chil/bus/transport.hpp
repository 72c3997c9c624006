#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace chil::bus {

using Bytes = std::vector<std::uint8_t>;

/// One side of a bidirectional, order-preserving frame channel.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual void send(std::span<const std::uint8_t> frame) = 0;
  /// Blocks until a frame arrives; nullopt once the peer has closed.
  virtual std::optional<Bytes> receive() = 0;
  virtual void close() = 0;
};

/// Two connected endpoints backed by in-memory queues.
std::pair<std::unique_ptr<Endpoint>, std::unique_ptr<Endpoint>> make_in_process_pair();

/// Loopback TCP. Each frame travels as a u32 little-endian length followed
/// by the frame bytes.
class TcpListener {
 public:
  TcpListener();  // binds 127.0.0.1 on an ephemeral port
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<Endpoint> accept();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

std::unique_ptr<Endpoint> tcp_connect(std::uint16_t port);

/// Applies a single-bit flip in place; bit 0 is the LSB of byte 0.
void flip_bit(Bytes& frame, std::size_t bit_index);

}  // namespace chil::bus
