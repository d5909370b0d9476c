//===- cosim.cpp - Manifest, framing and the blocking client --------------===//

#include "esic/cosim.hpp"
#include "esic/bits.hpp"
#include "esic/error.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

namespace esic {

Manifest manifest(const FabricGraph &graph) {
  Manifest m;
  m.design = graph.design;
  std::uint32_t id = 0;
  for (const FabricNode *n : graph.endpoints())
    m.endpoints.push_back({id++, n->name, n->direction, *n->type, type_id(*n->type)});
  return m;
}

nlohmann::ordered_json manifest_to_json(const Manifest &m) {
  nlohmann::ordered_json j;
  j["protocol_version"] = m.protocol_version;
  j["design"] = m.design;
  j["endpoints"] = nlohmann::ordered_json::array();
  for (const auto &e : m.endpoints)
    j["endpoints"].push_back({{"endpoint_id", e.endpoint_id},
                              {"name", e.name},
                              {"direction", to_string(e.direction)},
                              {"type", print_type(e.type)},
                              {"type_id", hex64(e.type_id)}});
  return j;
}

Manifest manifest_from_json(const nlohmann::json &j) {
  auto fail = [](const std::string &msg) -> Error {
    return Error(ErrorCode::Protocol, "bad manifest: " + msg);
  };
  try {
    Manifest m;
    m.protocol_version = j.at("protocol_version").get<std::uint16_t>();
    m.design = j.at("design").get<std::string>();
    for (const auto &e : j.at("endpoints")) {
      ManifestEndpoint ep;
      ep.endpoint_id = e.at("endpoint_id").get<std::uint32_t>();
      ep.name = e.at("name").get<std::string>();
      auto dir = e.at("direction").get<std::string>();
      if (dir == "to_host")
        ep.direction = EndpointDirection::ToHost;
      else if (dir == "from_host")
        ep.direction = EndpointDirection::FromHost;
      else
        throw fail("unknown direction '" + dir + "'");
      ep.type = parse_type(e.at("type").get<std::string>());
      ep.type_id = std::stoull(e.at("type_id").get<std::string>(), nullptr, 16);
      if (ep.type_id != type_id(ep.type))
        throw fail("type_id of '" + ep.name + "' does not match its type");
      if (ep.endpoint_id != m.endpoints.size())
        throw fail("endpoint ids are not dense");
      m.endpoints.push_back(std::move(ep));
    }
    return m;
  } catch (const nlohmann::json::exception &e) {
    throw fail(e.what());
  } catch (const std::invalid_argument &) {
    throw fail("type_id is not hexadecimal");
  } catch (const std::out_of_range &) {
    throw fail("type_id out of range");
  }
}

void put_u16(std::vector<std::uint8_t> &out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(const std::uint8_t *p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

std::uint32_t get_u32(const std::uint8_t *p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
         std::uint32_t{p[3]} << 24;
}

std::vector<std::uint8_t> encode_frame(const Frame &frame) {
  std::vector<std::uint8_t> out;
  out.reserve(5 + frame.payload.size());
  put_u32(out, static_cast<std::uint32_t>(frame.payload.size() + 1));
  out.push_back(static_cast<std::uint8_t>(frame.opcode));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

Frame error_frame(ProtocolError code, std::string_view text) {
  Frame f{Opcode::Error, {}};
  put_u16(f.payload, static_cast<std::uint16_t>(code));
  f.payload.insert(f.payload.end(), text.begin(), text.end());
  return f;
}

//===----------------------------------------------------------------------===//
// Client
//===----------------------------------------------------------------------===//

namespace {

void write_all(int fd, const std::uint8_t *data, std::size_t n) {
  while (n > 0) {
    ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0 && errno == EINTR)
      continue;
    if (w <= 0)
      throw Error(ErrorCode::Io, std::string("send failed: ") + std::strerror(errno));
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

/// False on orderly close before any byte.
bool read_exact(int fd, std::uint8_t *data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    ssize_t r = ::recv(fd, data + got, n - got, 0);
    if (r < 0 && errno == EINTR)
      continue;
    if (r == 0 && got == 0)
      return false;
    if (r <= 0)
      throw Error(ErrorCode::Io, "connection closed mid-frame");
    got += static_cast<std::size_t>(r);
  }
  return true;
}

[[noreturn]] void throw_error_frame(const Frame &f) {
  std::uint16_t code = f.payload.size() >= 2 ? get_u16(f.payload.data()) : 0;
  std::string text(f.payload.begin() + std::min<std::ptrdiff_t>(2, static_cast<std::ptrdiff_t>(f.payload.size())),
                   f.payload.end());
  throw Error(ErrorCode::Protocol, "server error " + std::to_string(code) + ": " + text);
}

} // namespace

CosimClient::CosimClient(const std::string &host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo *res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
    throw Error(ErrorCode::Io, "cannot resolve " + host);
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  int rc = fd_ < 0 ? -1 : ::connect(fd_, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) {
    std::string why = std::strerror(errno);
    if (fd_ >= 0)
      ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::Io, "cannot connect to " + host + ":" + std::to_string(port) + ": " + why);
  }
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  auto hello = read_frame();
  if (!hello || hello->opcode != Opcode::Hello || hello->payload.size() < 2)
    throw Error(ErrorCode::Protocol, "server did not send HELLO");
  version_ = get_u16(hello->payload.data());
  if (version_ != kProtocolVersion)
    throw Error(ErrorCode::Protocol, "unsupported protocol version " + std::to_string(version_));
  manifest_ = manifest_from_json(
      nlohmann::json::parse(hello->payload.begin() + 2, hello->payload.end()));
}

CosimClient::~CosimClient() {
  if (fd_ >= 0)
    ::close(fd_);
}

void CosimClient::send_raw(std::span<const std::uint8_t> bytes) {
  write_all(fd_, bytes.data(), bytes.size());
}

void CosimClient::send_frame(const Frame &frame) { send_raw(encode_frame(frame)); }

std::optional<Frame> CosimClient::read_frame() {
  std::uint8_t header[4];
  if (!read_exact(fd_, header, 4))
    return std::nullopt;
  std::uint32_t len = get_u32(header);
  if (len == 0)
    throw Error(ErrorCode::Protocol, "empty frame from server");
  std::vector<std::uint8_t> body(len);
  if (!read_exact(fd_, body.data(), len))
    throw Error(ErrorCode::Io, "connection closed mid-frame");
  return Frame{static_cast<Opcode>(body[0]), {body.begin() + 1, body.end()}};
}

void CosimClient::send(std::uint32_t endpoint, const MessageValue &value) {
  if (endpoint >= manifest_.endpoints.size())
    throw Error(ErrorCode::Protocol, "unknown endpoint " + std::to_string(endpoint));
  Frame f{Opcode::Send, {}};
  put_u32(f.payload, endpoint);
  auto bytes = to_wire_bytes(value, manifest_.endpoints[endpoint].type);
  f.payload.insert(f.payload.end(), bytes.begin(), bytes.end());
  send_frame(f);
}

std::optional<MessageValue> CosimClient::try_recv(std::uint32_t endpoint) {
  Frame req{Opcode::RecvReq, {}};
  put_u32(req.payload, endpoint);
  send_frame(req);
  auto resp = read_frame();
  if (!resp)
    throw Error(ErrorCode::Io, "server closed the connection");
  if (resp->opcode == Opcode::Error)
    throw_error_frame(*resp);
  if (resp->opcode != Opcode::RecvResp || resp->payload.size() < 5 ||
      get_u32(resp->payload.data()) != endpoint)
    throw Error(ErrorCode::Protocol, "unexpected reply to RECV_REQ");
  if (resp->payload[4] == 0)
    return std::nullopt;
  const EsiType &type = manifest_.endpoints.at(endpoint).type;
  std::span<const std::uint8_t> bytes(resp->payload.data() + 5, resp->payload.size() - 5);
  return decode_message(bits_from_wire_bytes(bytes, type), type);
}

std::optional<MessageValue> CosimClient::recv(std::uint32_t endpoint, int attempts) {
  for (int i = 0; i < attempts; ++i) {
    if (auto v = try_recv(endpoint))
      return v;
    if (i > 16)
      std::this_thread::sleep_for(std::chrono::microseconds(200));
  }
  return std::nullopt;
}

nlohmann::json CosimClient::stats() {
  send_frame({Opcode::StatsReq, {}});
  auto resp = read_frame();
  if (!resp)
    throw Error(ErrorCode::Io, "server closed the connection");
  if (resp->opcode == Opcode::Error)
    throw_error_frame(*resp);
  if (resp->opcode != Opcode::StatsResp)
    throw Error(ErrorCode::Protocol, "unexpected reply to STATS_REQ");
  return nlohmann::json::parse(resp->payload.begin(), resp->payload.end());
}

void CosimClient::shutdown() { send_frame({Opcode::Shutdown, {}}); }

std::uint32_t CosimClient::endpoint_id(std::string_view name) const {
  for (const auto &e : manifest_.endpoints)
    if (e.name == name)
      return e.endpoint_id;
  throw Error(ErrorCode::Protocol, "no endpoint named '" + std::string(name) + "'");
}

} // namespace esic
