//===- fabric.hpp - Elaborated primitive fabric graph -----------*- C++ -*-===//
//
// elaborate() lowers a checked SystemDesc into FabricNodes joined by elastic
// FabricEdges. Per connection, in order from producer to consumer:
//
//   producer -> buffer_stage x N -> [repacker] -> [cdc_fifo] -> [monitor]
//            -> consumer
//
// A repacker appears when list chunk sizes differ, a cdc_fifo when the
// endpoint instances sit in different clock domains, and a monitor when the
// connection is marked monitored. Services add cosim endpoints (host_comm),
// a round-robin service_mux feeding a telemetry_serializer (telemetry), or a
// service_mux feeding an assertion collector (assertion).
//
// Node ids and edge ids follow document order and are stable.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "esic/system.hpp"
#include "esic/types.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace esic {

enum class NodeKind {
  Actor,
  BufferStage,
  Repacker,
  CdcFifo,
  Fork,
  Monitor,
  ServiceMux,
  ServiceDemux,
  TelemetrySerializer,
  CosimEndpoint,
};
inline constexpr int kNodeKindCount = 10;
std::string_view to_string(NodeKind kind);

enum class EndpointDirection { ToHost, FromHost };
std::string_view to_string(EndpointDirection dir);

/// What an actor node does.
enum class ActorRole { User, TelemetryCollector, AssertionCollector };

/// Capacity of one buffer stage, in beats.
inline constexpr std::size_t kBufferStageCapacity = 2;

struct FabricNode {
  std::uint32_t id = 0;
  NodeKind kind = NodeKind::Actor;
  std::string name;
  std::string domain;

  // Actor
  ActorRole role = ActorRole::User;
  std::string instance;
  std::string module;
  Behavior behavior;
  std::vector<PortDecl> in_ports;
  std::vector<PortDecl> out_ports;

  // Repacker
  std::uint64_t element_bits = 0;
  std::uint64_t width_in = 0;
  std::uint64_t width_out = 0;

  // CdcFifo
  std::uint32_t depth = 0;
  std::string from_domain;
  std::string to_domain;

  // Fork, ServiceMux, ServiceDemux: number of clients/outputs
  std::uint32_t fanout = 0;

  // Monitor: index into FabricGraph::connections
  int connection = -1;

  // TelemetrySerializer
  std::uint32_t out_width = 0;

  // CosimEndpoint
  EndpointDirection direction = EndpointDirection::ToHost;
  std::optional<EsiType> type;
  std::uint32_t chunk_size = 0;

  /// Edge ids by port index; -1 when unconnected.
  std::vector<int> inputs;
  std::vector<int> outputs;
};

struct FabricEdge {
  std::uint32_t id = 0;
  std::uint32_t from_node = 0;
  std::uint32_t from_port = 0;
  std::uint32_t to_node = 0;
  std::uint32_t to_port = 0;
  EsiType type = EsiType::uint(1);
  /// Elements per beat for list payloads, 0 otherwise.
  std::uint32_t chunk_size = 0;
  std::uint64_t width = 0;
  std::string domain;
  /// Index into FabricGraph::connections, or -1 for service plumbing.
  int connection = -1;
};

/// The elaborated path of one SystemDesc connection.
struct ConnectionPath {
  std::string name; // "a.out->b.in"
  std::uint32_t source_edge = 0;
  std::uint32_t sink_edge = 0;
  std::vector<std::uint32_t> edges;
  std::uint32_t buffer_stages = 0;
  std::uint32_t fifo_depth = 0; // 0 when no cdc_fifo
  bool repacked = false;
  bool monitored = false;
  int monitor_node = -1;
  EsiType type = EsiType::uint(1);
};

struct FabricGraph {
  std::string design;
  std::vector<ClockDomain> clocks;
  std::vector<FabricNode> nodes;
  std::vector<FabricEdge> edges;
  std::vector<ConnectionPath> connections;

  const ClockDomain *find_clock(std::string_view name) const;
  /// Cosim endpoint nodes in id order.
  std::vector<const FabricNode *> endpoints() const;
};

/// Throws ErrUnchecked when check(desc) reports errors.
FabricGraph elaborate(const SystemDesc &desc);

/// Structural validation: edge widths, clock domains and port wiring. Returns
/// one message per problem.
std::vector<std::string> validate_graph(const FabricGraph &graph);

/// Upper bound on the messages that can be in flight on a connection path:
/// stored beats (2 per buffer stage, FIFO depth, repacker queue) plus one
/// partially transferred message when messages span several beats.
std::size_t path_capacity(const FabricGraph &graph, const ConnectionPath &path);

std::string emit_dot(const FabricGraph &graph);

struct FabricStats {
  std::map<std::string, std::size_t> node_counts; // every kind, zeros included
  std::uint64_t total_edge_bits = 0;
  std::uint32_t max_path_stages = 0;

  friend bool operator==(const FabricStats &, const FabricStats &) = default;
};

FabricStats fabric_stats(const FabricGraph &graph);
std::string format_stats(const FabricStats &stats);

inline constexpr int kFabricJsonVersion = 1;
nlohmann::ordered_json fabric_to_json(const FabricGraph &graph);

} // namespace esic
