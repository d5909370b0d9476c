//===- cosim_server.cpp - Threaded TCP server around one Simulator --------===//

#include "esic/cosim.hpp"
#include "esic/error.hpp"
#include "esic/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <future>
#include <list>
#include <mutex>
#include <thread>
#include <variant>

namespace esic {

namespace {

struct InjectReq {
  std::uint32_t node;
  MessageValue value;
  std::promise<bool> done; // false when the mailbox was full
};
struct PopReq {
  std::uint32_t node;
  std::promise<std::optional<MessageValue>> done;
};
struct StatsReq {
  std::promise<std::string> done;
};
using Request = std::variant<InjectReq, PopReq, StatsReq>;

struct Session {
  int fd = -1;
  std::thread thread;
};

bool send_all(int fd, const std::vector<std::uint8_t> &bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    ssize_t w = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (w < 0 && errno == EINTR)
      continue;
    if (w <= 0)
      return false;
    off += static_cast<std::size_t>(w);
  }
  return true;
}

bool recv_all(int fd, std::uint8_t *data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    ssize_t r = ::recv(fd, data + got, n - got, 0);
    if (r < 0 && errno == EINTR)
      continue;
    if (r <= 0)
      return false;
    got += static_cast<std::size_t>(r);
  }
  return true;
}

} // namespace

class CosimServerImpl {
public:
  CosimServerImpl(const FabricGraph &graph, SimConfig config, ServeOptions options,
                  const BehaviorMap &behaviors)
      : graph_(graph), options_(std::move(options)), manifest_(esic::manifest(graph_)) {
    config.record_trace = false;
    config.record_payloads = false;
    sim_ = std::make_unique<Simulator>(graph_, config, behaviors);
    for (const FabricNode *n : graph_.endpoints())
      endpoint_nodes_.push_back(n->id);
    Frame hello{Opcode::Hello, {}};
    put_u16(hello.payload, kProtocolVersion);
    std::string text = manifest_to_json(manifest_).dump();
    hello.payload.insert(hello.payload.end(), text.begin(), text.end());
    hello_ = encode_frame(hello);
  }

  ~CosimServerImpl() {
    stop();
    join();
  }

  void start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0)
      throw Error(ErrorCode::Io, std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(options_.port);
    if (::inet_pton(AF_INET, options_.address.c_str(), &addr.sin_addr) != 1) {
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw Error(ErrorCode::Io, "invalid listen address '" + options_.address + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, 16) != 0) {
      std::string why = std::strerror(errno);
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw Error(ErrorCode::Io, "cannot listen on " + options_.address + ":" +
                                     std::to_string(options_.port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr *>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    sim_thread_ = std::thread([this] { sim_loop(); });
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  std::uint16_t port() const { return port_; }

  void wait() {
    {
      std::unique_lock lock(mu_);
      stopped_cv_.wait(lock, [this] { return stopping_; });
    }
    join();
    if (failure_)
      std::rethrow_exception(failure_);
  }

  void stop() {
    std::lock_guard lock(mu_);
    stopping_ = true;
    work_cv_.notify_all();
    stopped_cv_.notify_all();
  }

private:
  void join() {
    if (accept_thread_.joinable())
      accept_thread_.join();
    if (sim_thread_.joinable())
      sim_thread_.join();
    std::list<Session> sessions;
    {
      std::lock_guard lock(sessions_mu_);
      sessions.swap(sessions_);
      for (auto &s : sessions)
        ::shutdown(s.fd, SHUT_RDWR);
    }
    for (auto &s : sessions) {
      if (s.thread.joinable())
        s.thread.join();
      ::close(s.fd);
    }
    if (listen_fd_ >= 0) {
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
  }

  bool stopping() {
    std::lock_guard lock(mu_);
    return stopping_;
  }

  void fail(std::exception_ptr e) {
    std::lock_guard lock(mu_);
    if (!failure_)
      failure_ = e;
    stopping_ = true;
    work_cv_.notify_all();
    stopped_cv_.notify_all();
  }

  //===--------------------------------------------------------------------===//
  // Simulation thread
  //===--------------------------------------------------------------------===//

  void sim_loop() {
    bool idle = false;
    for (;;) {
      std::deque<Request> batch;
      {
        std::unique_lock lock(mu_);
        if (idle)
          work_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (stopping_)
          break;
        batch.swap(queue_);
      }
      try {
        for (auto &req : batch)
          serve(req);
        std::uint64_t before = sim_->transfers();
        sim_->run(options_.ticks_per_iter);
        idle = batch.empty() && sim_->transfers() == before;
      } catch (...) {
        fail(std::current_exception());
        break;
      }
    }
    // Anything still queued belongs to sessions that are about to be closed.
    std::lock_guard lock(mu_);
    for (auto &req : queue_)
      std::visit([](auto &r) { r.done.set_exception(std::make_exception_ptr(
                                   Error(ErrorCode::Io, "server stopping"))); },
                 req);
    queue_.clear();
  }

  void serve(Request &req) {
    if (auto *r = std::get_if<InjectReq>(&req)) {
      if (sim_->mailbox_full(r->node)) {
        r->done.set_value(false);
      } else {
        sim_->inject(r->node, std::move(r->value));
        r->done.set_value(true);
      }
    } else if (auto *r = std::get_if<PopReq>(&req)) {
      r->done.set_value(sim_->pop(r->node));
    } else {
      std::get<StatsReq>(req).done.set_value(monitor_report(sim_->result()).dump());
    }
  }

  template <typename R> auto post(R req) {
    auto future = req.done.get_future();
    {
      std::lock_guard lock(mu_);
      if (stopping_)
        throw Error(ErrorCode::Io, "server stopping");
      queue_.push_back(std::move(req));
    }
    work_cv_.notify_one();
    return future.get();
  }

  //===--------------------------------------------------------------------===//
  // Network side
  //===--------------------------------------------------------------------===//

  void accept_loop() {
    while (!stopping()) {
      pollfd p{listen_fd_, POLLIN, 0};
      int rc = ::poll(&p, 1, 50);
      if (rc <= 0 || !(p.revents & POLLIN))
        continue;
      int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0)
        continue;
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      std::lock_guard lock(sessions_mu_);
      auto &s = sessions_.emplace_back();
      s.fd = fd;
      s.thread = std::thread([this, fd] { session(fd); });
    }
  }

  void session(int fd) {
    serve_session(fd);
    ::shutdown(fd, SHUT_RDWR);
  }

  void serve_session(int fd) {
    try {
      if (!send_all(fd, hello_))
        return;
      for (;;) {
        std::uint8_t header[4];
        if (!recv_all(fd, header, 4))
          return;
        std::uint32_t len = get_u32(header);
        if (len > options_.max_frame) {
          send_all(fd, encode_frame(error_frame(
                           ProtocolError::MalformedFrame,
                           "frame length " + std::to_string(len) + " exceeds limit " +
                               std::to_string(options_.max_frame))));
          return;
        }
        if (len == 0) {
          if (!send_all(fd, encode_frame(error_frame(ProtocolError::MalformedFrame,
                                                     "empty frame"))))
            return;
          continue;
        }
        std::vector<std::uint8_t> body(len);
        if (!recv_all(fd, body.data(), len))
          return;
        Frame frame{static_cast<Opcode>(body[0]), {body.begin() + 1, body.end()}};
        auto reply = handle(frame);
        if (frame.opcode == Opcode::Shutdown) {
          stop();
          return;
        }
        if (reply && !send_all(fd, encode_frame(*reply)))
          return;
      }
    } catch (const std::exception &) {
      // The server is stopping or the simulation failed; drop the client.
    }
  }

  /// Resolves an endpoint id, producing the error reply on failure.
  std::optional<Frame> lookup(const Frame &f, EndpointDirection want, std::uint32_t &id) {
    if (f.payload.size() < 4)
      return error_frame(ProtocolError::MalformedFrame, "payload too short for an endpoint id");
    id = get_u32(f.payload.data());
    if (id >= manifest_.endpoints.size())
      return error_frame(ProtocolError::UnknownEndpoint, "unknown endpoint " + std::to_string(id));
    const auto &ep = manifest_.endpoints[id];
    if (ep.direction != want)
      return error_frame(ProtocolError::WrongDirection,
                         "endpoint '" + ep.name + "' is " + std::string(to_string(ep.direction)));
    return std::nullopt;
  }

  std::optional<Frame> handle(const Frame &f) {
    switch (f.opcode) {
    case Opcode::Send: {
      std::uint32_t id = 0;
      if (auto err = lookup(f, EndpointDirection::FromHost, id))
        return err;
      const auto &ep = manifest_.endpoints[id];
      std::span<const std::uint8_t> bytes(f.payload.data() + 4, f.payload.size() - 4);
      MessageValue value = MessageValue::uint(0);
      try {
        value = decode_message(bits_from_wire_bytes(bytes, ep.type), ep.type);
      } catch (const Error &e) {
        return error_frame(ProtocolError::TypeMismatch, e.what());
      }
      if (!post(InjectReq{endpoint_nodes_[id], std::move(value), {}}))
        return error_frame(ProtocolError::MailboxFull,
                           "mailbox of '" + ep.name + "' is full");
      return std::nullopt;
    }
    case Opcode::RecvReq: {
      std::uint32_t id = 0;
      if (auto err = lookup(f, EndpointDirection::ToHost, id))
        return err;
      if (f.payload.size() != 4)
        return error_frame(ProtocolError::MalformedFrame, "RECV_REQ payload must be 4 bytes");
      const auto &ep = manifest_.endpoints[id];
      Frame resp{Opcode::RecvResp, {}};
      put_u32(resp.payload, id);
      if (auto v = post(PopReq{endpoint_nodes_[id], {}})) {
        resp.payload.push_back(1);
        auto bytes = to_wire_bytes(*v, ep.type);
        resp.payload.insert(resp.payload.end(), bytes.begin(), bytes.end());
      } else {
        resp.payload.push_back(0);
      }
      return resp;
    }
    case Opcode::StatsReq: {
      if (!f.payload.empty())
        return error_frame(ProtocolError::MalformedFrame, "STATS_REQ takes no payload");
      std::string text = post(StatsReq{});
      return Frame{Opcode::StatsResp, {text.begin(), text.end()}};
    }
    case Opcode::Shutdown:
      return std::nullopt;
    default:
      return error_frame(ProtocolError::UnknownOpcode,
                         "unknown opcode " + std::to_string(static_cast<int>(f.opcode)));
    }
  }

  FabricGraph graph_;
  ServeOptions options_;
  Manifest manifest_;
  std::vector<std::uint32_t> endpoint_nodes_;
  std::vector<std::uint8_t> hello_;
  std::unique_ptr<Simulator> sim_;

  std::mutex mu_;
  std::condition_variable work_cv_;
  std::condition_variable stopped_cv_;
  std::deque<Request> queue_;
  bool stopping_ = false;
  std::exception_ptr failure_;

  std::mutex sessions_mu_;
  std::list<Session> sessions_;

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::thread sim_thread_;
  std::thread accept_thread_;
};

CosimServer::CosimServer(const FabricGraph &graph, SimConfig config, ServeOptions options,
                         const BehaviorMap &behaviors)
    : impl_(std::make_unique<CosimServerImpl>(graph, std::move(config), std::move(options),
                                              behaviors)) {}

CosimServer::~CosimServer() = default;
void CosimServer::start() { impl_->start(); }
std::uint16_t CosimServer::port() const { return impl_->port(); }
void CosimServer::wait() { impl_->wait(); }
void CosimServer::stop() { impl_->stop(); }

} // namespace esic
