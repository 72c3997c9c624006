#include "chil/bus/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <string>

namespace chil::bus {

namespace {

struct Mailbox {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<Bytes> to_a;
  std::deque<Bytes> to_b;
  bool a_closed = false;
  bool b_closed = false;
};

class InProcessEndpoint : public Endpoint {
 public:
  InProcessEndpoint(std::shared_ptr<Mailbox> box, bool is_a) : box_(std::move(box)), is_a_(is_a) {}
  ~InProcessEndpoint() override { close(); }

  void send(std::span<const std::uint8_t> frame) override {
    {
      std::lock_guard lock(box_->mutex);
      (is_a_ ? box_->to_b : box_->to_a).emplace_back(frame.begin(), frame.end());
    }
    box_->ready.notify_all();
  }

  std::optional<Bytes> receive() override {
    std::unique_lock lock(box_->mutex);
    auto& inbox = is_a_ ? box_->to_a : box_->to_b;
    box_->ready.wait(lock, [&] { return !inbox.empty() || peer_closed(); });
    if (inbox.empty()) return std::nullopt;
    Bytes frame = std::move(inbox.front());
    inbox.pop_front();
    return frame;
  }

  void close() override {
    {
      std::lock_guard lock(box_->mutex);
      (is_a_ ? box_->a_closed : box_->b_closed) = true;
    }
    box_->ready.notify_all();
  }

 private:
  bool peer_closed() const { return is_a_ ? box_->b_closed : box_->a_closed; }

  std::shared_ptr<Mailbox> box_;
  bool is_a_;
};

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error(what + ": " + std::strerror(errno));
}

bool write_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

bool read_all(int fd, std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::recv(fd, data, len, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

class TcpEndpoint : public Endpoint {
 public:
  explicit TcpEndpoint(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~TcpEndpoint() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void send(std::span<const std::uint8_t> frame) override {
    Bytes msg(4 + frame.size());
    const auto len = static_cast<std::uint32_t>(frame.size());
    for (int i = 0; i < 4; ++i) msg[i] = static_cast<std::uint8_t>(len >> (8 * i));
    std::memcpy(msg.data() + 4, frame.data(), frame.size());
    if (!write_all(fd_, msg.data(), msg.size())) {
      fail("tcp send");
    }
  }

  std::optional<Bytes> receive() override {
    std::uint8_t prefix[4];
    if (!read_all(fd_, prefix, 4)) return std::nullopt;
    const std::uint32_t len = static_cast<std::uint32_t>(prefix[0]) | (static_cast<std::uint32_t>(prefix[1]) << 8) |
                              (static_cast<std::uint32_t>(prefix[2]) << 16) |
                              (static_cast<std::uint32_t>(prefix[3]) << 24);
    if (len > (1u << 20)) return std::nullopt;
    Bytes frame(len);
    if (!read_all(fd_, frame.data(), len)) return std::nullopt;
    return frame;
  }

  void close() override {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
  }

 private:
  int fd_;
};

}  // namespace

std::pair<std::unique_ptr<Endpoint>, std::unique_ptr<Endpoint>> make_in_process_pair() {
  auto box = std::make_shared<Mailbox>();
  return {std::make_unique<InProcessEndpoint>(box, true), std::make_unique<InProcessEndpoint>(box, false)};
}

TcpListener::TcpListener() {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) fail("socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) fail("bind");
  if (::listen(fd_, 1) < 0) fail("listen");
  socklen_t len = sizeof(addr);
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) < 0) fail("getsockname");
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Endpoint> TcpListener::accept() {
  int fd = -1;
  do {
    fd = ::accept(fd_, nullptr, nullptr);
  } while (fd < 0 && errno == EINTR);
  if (fd < 0) fail("accept");
  return std::make_unique<TcpEndpoint>(fd);
}

std::unique_ptr<Endpoint> tcp_connect(std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) fail("socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(fd);
    fail("connect");
  }
  return std::make_unique<TcpEndpoint>(fd);
}

void flip_bit(Bytes& frame, std::size_t bit_index) {
  if (bit_index / 8 < frame.size()) {
    frame[bit_index / 8] ^= static_cast<std::uint8_t>(1u << (bit_index % 8));
  }
}

}  // namespace chil::bus
