// Minimal blocking TCP connection for scripted protocol tests. It builds
// frames by hand so the tests do not depend on the library's own encoder.
#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace esic::testsupport {

using Bytes = std::vector<std::uint8_t>;

inline Bytes le32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
          static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
}

inline Bytes raw_frame(std::uint8_t opcode, const Bytes &payload = {}) {
  Bytes out = le32(static_cast<std::uint32_t>(payload.size() + 1));
  out.push_back(opcode);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

inline Bytes cat(Bytes a, const Bytes &b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

struct RawFrame {
  std::uint8_t opcode = 0;
  Bytes payload;

  std::uint16_t error_code() const {
    return payload.size() >= 2 ? static_cast<std::uint16_t>(payload[0] | payload[1] << 8) : 0;
  }
  std::string error_text() const {
    return payload.size() >= 2 ? std::string(payload.begin() + 2, payload.end()) : "";
  }
};

class RawConn {
public:
  explicit RawConn(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (fd_ < 0 || ::connect(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0)
      throw std::runtime_error("connect failed");
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~RawConn() { ::close(fd_); }
  RawConn(const RawConn &) = delete;
  RawConn &operator=(const RawConn &) = delete;

  void write(const Bytes &bytes) {
    std::size_t off = 0;
    while (off < bytes.size()) {
      ssize_t w = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (w <= 0)
        throw std::runtime_error("send failed");
      off += static_cast<std::size_t>(w);
    }
  }

  /// Next frame, or nullopt on close or after `timeout_ms` of silence.
  std::optional<RawFrame> read(int timeout_ms = 5000) {
    Bytes header;
    if (!read_n(4, header, timeout_ms))
      return std::nullopt;
    std::uint32_t len = header[0] | header[1] << 8 | header[2] << 16 |
                        static_cast<std::uint32_t>(header[3]) << 24;
    Bytes body;
    if (len == 0 || !read_n(len, body, timeout_ms))
      return std::nullopt;
    return RawFrame{body[0], Bytes(body.begin() + 1, body.end())};
  }

  /// True when the peer closed the connection within `timeout_ms`. Frames
  /// still in flight are discarded.
  bool closed(int timeout_ms = 5000) {
    for (;;) {
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, timeout_ms) <= 0)
        return false;
      std::uint8_t buf[256];
      if (::recv(fd_, buf, sizeof buf, 0) <= 0)
        return true;
    }
  }

private:
  bool read_n(std::size_t n, Bytes &out, int timeout_ms) {
    out.resize(n);
    std::size_t got = 0;
    while (got < n) {
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, timeout_ms) <= 0)
        return false;
      ssize_t r = ::recv(fd_, out.data() + got, n - got, 0);
      if (r <= 0)
        return false;
      got += static_cast<std::size_t>(r);
    }
    return true;
  }

  int fd_ = -1;
};

} // namespace esic::testsupport
