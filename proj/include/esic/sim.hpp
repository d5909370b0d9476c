//===- sim.hpp - Tick-based elastic fabric simulator ------------*- C++ -*-===//
//
// Every FabricEdge is a valid/ready channel carrying one beat per transfer.
// A tick fires each clock domain whose period divides it, then:
//
//   1. actors in fired domains step (consume complete input messages,
//      produce output messages into per-port serializers),
//   2. valid/ready signals settle to a fixpoint across the combinational
//      elements (fork, monitor, service_demux, service_mux readies),
//   3. every active edge with valid and ready transfers its beat.
//
// Stall injection withholds actor readiness and validity from a
// counter-based stream keyed by (seed, port name, tick), so schedules do not
// depend on what else is in the graph.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "esic/fabric.hpp"
#include "esic/wire.hpp"

#include <json.hpp>

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace esic {

struct SimConfig {
  std::uint64_t seed = 0;
  std::uint64_t max_ticks = 1000;
  /// Probability that an actor port withholds ready (inputs) or valid
  /// (outputs) on a fired cycle.
  double stall_prob = 0.0;
  /// Per-port override of stall_prob, keyed "instance.port".
  std::map<std::string, double> port_stall;
  bool monitor_latency = true;
  bool record_trace = true;
  /// Adds the hex payload of every beat to transfer events.
  bool record_payloads = false;
  std::size_t mailbox_capacity = 1024;
};

class SimEngine;

/// What an actor sees during one firing.
class ActorContext {
public:
  std::uint64_t tick() const;
  const FabricNode &node() const;

  std::size_t num_inputs() const;
  std::size_t num_outputs() const;
  /// Port index by declared name; throws ErrBehaviorViolation if absent.
  std::size_t input(std::string_view name) const;
  std::size_t output(std::string_view name) const;

  /// A complete message is waiting on input `in`.
  bool available(std::size_t in) const;
  const MessageValue &peek(std::size_t in) const;
  MessageValue consume(std::size_t in);

  /// Output `out` can take a message this firing.
  bool ready(std::size_t out) const;
  void produce(std::size_t out, MessageValue value);

private:
  friend class SimEngine;
  ActorContext(SimEngine &engine, std::uint32_t node) : engine_(engine), node_(node) {}
  SimEngine &engine_;
  std::uint32_t node_;
  std::vector<bool> consumed_;
  std::vector<bool> produced_;
};

/// User model of a custom module. step() runs once per firing of the
/// actor's clock domain.
class ActorBehavior {
public:
  virtual ~ActorBehavior() = default;
  virtual void step(ActorContext &ctx) = 0;
};

using ActorFactory = std::function<std::unique_ptr<ActorBehavior>(const FabricNode &)>;
/// Custom behaviors keyed by the module's `actor` id.
using BehaviorMap = std::map<std::string, ActorFactory>;

enum class TraceKind { Transfer, ValidNotReady, ReadyNotValid };
std::string_view to_string(TraceKind kind);

struct TraceEvent {
  std::uint64_t tick = 0;
  std::uint32_t edge = 0;
  TraceKind kind = TraceKind::Transfer;
  /// Sequence number given to the message by the element that created it.
  std::uint64_t ordinal = 0;
  std::uint32_t beat = 0;
  bool last = false;
  std::uint64_t digest = 0;
  /// Digest of the whole message's logical bits; set on last beats.
  std::uint64_t message_digest = 0;
  std::string payload_hex;
};

struct MonitorRecord {
  std::string connection;
  std::uint32_t node = 0;
  std::uint32_t edge = 0;
  std::string domain;
  std::uint64_t fired_cycles = 0;
  std::uint64_t messages_accepted = 0;
  std::uint64_t beats_accepted = 0;
  std::uint64_t valid_not_ready_cycles = 0;
  std::uint64_t ready_not_valid_cycles = 0;
  std::map<std::uint64_t, std::uint64_t> latency_histogram;
};

struct AssertionEvent {
  std::uint64_t tick = 0;
  std::string service;
  std::string client;
  std::uint32_t code = 0;
};

struct TelemetryRecord {
  std::uint64_t tick = 0;
  std::string service;
  std::string client;
  MessageValue value = MessageValue::uint(0);
  EsiType type = EsiType::uint(1);
};

struct Delivery {
  std::uint64_t tick = 0;
  std::uint64_t ordinal = 0;
  std::uint64_t digest = 0;
};

struct SimResult {
  std::string design;
  std::uint64_t seed = 0;
  double stall_prob = 0.0;
  std::uint64_t ticks_executed = 0;
  std::vector<TraceEvent> trace;
  std::vector<MonitorRecord> monitors;
  std::vector<AssertionEvent> assertions_fired;
  std::vector<TelemetryRecord> telemetry;
  /// Messages arriving at sink actors, keyed "instance.port".
  std::map<std::string, std::vector<Delivery>> deliveries;
  /// Fired cycles per clock domain.
  std::map<std::string, std::uint64_t> fired_cycles;
};

/// Incremental simulator. run() below drives it for batch use; the cosim
/// server steps it and moves messages through the endpoint mailboxes.
class Simulator {
public:
  Simulator(const FabricGraph &graph, SimConfig config, const BehaviorMap &behaviors = {});
  ~Simulator();
  Simulator(const Simulator &) = delete;
  Simulator &operator=(const Simulator &) = delete;

  void step();
  void run(std::uint64_t ticks);
  std::uint64_t tick() const;
  /// Beats transferred on all edges so far.
  std::uint64_t transfers() const;

  /// Queues a message on a from_host endpoint. Throws ErrRange when the
  /// mailbox is full and ErrInvalidGraph for a non-endpoint or to_host node.
  void inject(std::uint32_t endpoint_node, MessageValue value);
  bool mailbox_full(std::uint32_t endpoint_node) const;
  /// Takes the oldest message delivered to a to_host endpoint.
  std::optional<MessageValue> pop(std::uint32_t endpoint_node);

  const SimResult &result() const;

private:
  std::unique_ptr<SimEngine> engine_;
};

/// Runs ticks 0 .. max_ticks-1. Throws ErrCombLoop, ErrBehaviorViolation.
SimResult run(const FabricGraph &graph, const SimConfig &config,
              const BehaviorMap &behaviors = {});

enum class ViolationKind { Loss, Duplicate, Order, Corruption, Capacity };
std::string_view to_string(ViolationKind kind);

struct DeliveryViolation {
  std::string connection;
  ViolationKind kind = ViolationKind::Loss;
  std::string message;
};

/// Compares each connection's source-edge and sink-edge message streams in
/// the trace: no loss beyond in-flight capacity, no duplicates, FIFO order,
/// matching digests.
std::vector<DeliveryViolation> verify_delivery(const SimResult &result,
                                               const FabricGraph &graph);

inline constexpr int kReportVersion = 1;
nlohmann::ordered_json monitor_report(const SimResult &result);
std::string monitor_report_text(const SimResult &result);
/// One JSON object per line.
std::string trace_ndjson(const SimResult &result);

} // namespace esic
