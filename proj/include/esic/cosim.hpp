//===- cosim.hpp - Host communication over framed TCP -----------*- C++ -*-===//
//
// Frames are a 32-bit little-endian length (covering opcode and payload), an
// opcode byte, then the payload. The server sends HELLO on connect and then
// answers requests:
//
//   SEND      0x02  u32 endpoint, message bytes          (no reply)
//   RECV_REQ  0x03  u32 endpoint                         -> RECV_RESP 0x04
//   STATS_REQ 0x05                                       -> STATS_RESP 0x06
//   SHUTDOWN  0x0F                                       (no reply)
//
// RECV_RESP carries u32 endpoint, a present byte and the message bytes.
// Failures produce ERROR 0x7F with a u16 code and UTF-8 text.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "esic/fabric.hpp"
#include "esic/sim.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace esic {

inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::uint16_t kDefaultCosimPort = 7643;
inline constexpr std::uint32_t kDefaultMaxFrame = 1u << 24;

enum class Opcode : std::uint8_t {
  Hello = 0x01,
  Send = 0x02,
  RecvReq = 0x03,
  RecvResp = 0x04,
  StatsReq = 0x05,
  StatsResp = 0x06,
  Shutdown = 0x0F,
  Error = 0x7F,
};

enum class ProtocolError : std::uint16_t {
  MalformedFrame = 1,
  UnknownOpcode = 2,
  UnknownEndpoint = 3,
  TypeMismatch = 4,
  MailboxFull = 5,
  WrongDirection = 6,
};

struct ManifestEndpoint {
  std::uint32_t endpoint_id = 0;
  std::string name;
  EndpointDirection direction = EndpointDirection::ToHost;
  EsiType type = EsiType::uint(1);
  std::uint64_t type_id = 0;

  friend bool operator==(const ManifestEndpoint &a, const ManifestEndpoint &b) {
    return a.endpoint_id == b.endpoint_id && a.name == b.name && a.direction == b.direction &&
           type_equal(a.type, b.type) && a.type_id == b.type_id;
  }
};

struct Manifest {
  std::uint16_t protocol_version = kProtocolVersion;
  std::string design;
  std::vector<ManifestEndpoint> endpoints;

  friend bool operator==(const Manifest &, const Manifest &) = default;
};

/// One entry per cosim endpoint node, ids dense in node order.
Manifest manifest(const FabricGraph &graph);
nlohmann::ordered_json manifest_to_json(const Manifest &m);
/// Throws ErrProtocol on missing fields, bad types or a type_id that does
/// not match the type text.
Manifest manifest_from_json(const nlohmann::json &j);

struct Frame {
  Opcode opcode = Opcode::Hello;
  std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_frame(const Frame &frame);
Frame error_frame(ProtocolError code, std::string_view text);
void put_u16(std::vector<std::uint8_t> &out, std::uint16_t v);
void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v);
std::uint16_t get_u16(const std::uint8_t *p);
std::uint32_t get_u32(const std::uint8_t *p);

struct ServeOptions {
  std::string address = "127.0.0.1";
  /// 0 picks a free port; CosimServer::port() reports it.
  std::uint16_t port = kDefaultCosimPort;
  std::uint64_t ticks_per_iter = 1024;
  std::uint32_t max_frame = kDefaultMaxFrame;
};

class CosimServerImpl;

/// Runs the simulation on a dedicated thread and serves any number of
/// clients, each on its own thread. Sessions reach the simulator only
/// through a request queue drained between tick batches.
class CosimServer {
public:
  CosimServer(const FabricGraph &graph, SimConfig config, ServeOptions options,
              const BehaviorMap &behaviors = {});
  ~CosimServer();
  CosimServer(const CosimServer &) = delete;
  CosimServer &operator=(const CosimServer &) = delete;

  /// Binds and starts serving; throws ErrIo on socket failures.
  void start();
  std::uint16_t port() const;
  /// Blocks until a client sends SHUTDOWN, stop() is called, or the
  /// simulation fails. Rethrows a simulation failure.
  void wait();
  void stop();

private:
  std::unique_ptr<CosimServerImpl> impl_;
};

/// Blocking client used by tests and tools.
class CosimClient {
public:
  /// Connects and reads the HELLO frame.
  CosimClient(const std::string &host, std::uint16_t port);
  ~CosimClient();
  CosimClient(const CosimClient &) = delete;
  CosimClient &operator=(const CosimClient &) = delete;

  const Manifest &manifest() const { return manifest_; }
  std::uint16_t server_version() const { return version_; }

  void send_raw(std::span<const std::uint8_t> bytes);
  void send_frame(const Frame &frame);
  /// Reads one frame; nullopt when the server closed the connection.
  std::optional<Frame> read_frame();

  void send(std::uint32_t endpoint, const MessageValue &value);
  /// One RECV_REQ round trip. Throws ErrProtocol on an ERROR reply.
  std::optional<MessageValue> try_recv(std::uint32_t endpoint);
  /// Polls until a message arrives or `attempts` polls fail.
  std::optional<MessageValue> recv(std::uint32_t endpoint, int attempts = 10000);
  nlohmann::json stats();
  void shutdown();

  std::uint32_t endpoint_id(std::string_view name) const;

private:
  int fd_ = -1;
  Manifest manifest_;
  std::uint16_t version_ = 0;
};

} // namespace esic
