//===- system.hpp - Declarative system descriptions and checking -*- C++ -*-===//
//
// A SystemDesc is the flat netlist the toolchain consumes: clock domains,
// module declarations with typed ports, instances, point-to-point
// connections, services and service bindings. parse_system reads the JSON
// form and resolves every reference; check performs the static type and
// connectivity checks.
//
// Diagnostic codes:
//   E001 connected port types differ
//   E002 input port is not driven
//   E003 input port is driven more than once
//   E004 output port drives more than one sink (use a fork)
//   E005 invalid service binding
//   E006 unknown clock domain
//   E100 malformed JSON
//   E101 missing or mistyped field
//   E102 unresolved reference
//   E103 duplicate name
//   E104 invalid port type
//   E105 chunk_size given for a non-list port or missing for a list port
//   E106 numeric value out of range
//   E107 builtin behavior does not fit the module's ports
//   E108 connection endpoint has the wrong direction
//   E109 unsupported description version
//   W100 unknown key (ignored)
//
//===----------------------------------------------------------------------===//

#pragma once

#include "esic/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace esic {

inline constexpr int kSystemDescVersion = 1;
inline constexpr std::uint32_t kDefaultFifoDepth = 4;

struct ClockDomain {
  std::string name;
  std::uint32_t period = 1;
};

enum class Direction { In, Out };
std::string_view to_string(Direction dir);

struct PortDecl {
  std::string name;
  Direction direction = Direction::In;
  EsiType type = EsiType::uint(1);
  /// Elements per beat; list ports only, 0 otherwise.
  std::uint32_t chunk_size = 0;
};

enum class BehaviorKind { Source, Sink, Map, Fork, HostEndpoint, Custom };
std::string_view to_string(BehaviorKind kind);

struct Behavior {
  BehaviorKind kind = BehaviorKind::Custom;
  /// Custom actor id.
  std::string actor;
  /// Source: messages per output port, value seed and list length bound.
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  std::uint32_t max_list_length = 8;
};

struct ModuleDecl {
  std::string name;
  std::vector<PortDecl> ports;
  Behavior behavior;

  const PortDecl *find_port(std::string_view port) const;
};

struct Instance {
  std::string name;
  std::string module;
  std::string clock;
};

struct PortRef {
  std::string instance;
  std::string port;

  std::string str() const { return instance + "." + port; }
  friend bool operator==(const PortRef &, const PortRef &) = default;
  friend auto operator<=>(const PortRef &, const PortRef &) = default;
};

struct Connection {
  PortRef from;
  PortRef to;
  std::uint32_t buffer_stages = 0;
  bool monitored = false;
  std::uint32_t fifo_depth = kDefaultFifoDepth;
};

enum class ServiceKind { HostComm, Telemetry, Assertion };
std::string_view to_string(ServiceKind kind);

struct ServiceDecl {
  std::string name;
  ServiceKind kind = ServiceKind::HostComm;
  /// Telemetry: serializer output wires.
  std::uint32_t out_width = 0;
  /// Clock domain of the service plumbing; empty selects the first client's.
  std::string clock;
};

struct ServiceBinding {
  std::string instance;
  std::string port;
  std::string service;
};

struct SystemDesc {
  std::string name;
  std::vector<ClockDomain> clocks;
  std::vector<ModuleDecl> modules;
  std::vector<Instance> instances;
  std::vector<Connection> connections;
  std::vector<ServiceDecl> services;
  std::vector<ServiceBinding> bindings;

  /// Source file and element-path -> line map, filled by parse_system.
  std::string source_file;
  std::map<std::string, int> lines;

  const ClockDomain *find_clock(std::string_view name) const;
  const ModuleDecl *find_module(std::string_view name) const;
  const Instance *find_instance(std::string_view name) const;
  const ServiceDecl *find_service(std::string_view name) const;
  /// Resolves inst.port to its declaration, or nullptr.
  const PortDecl *find_port(const PortRef &ref) const;
};

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;
  std::string file;
  int line = 0;
  /// Element path, e.g. "connections[2].to".
  std::string path;
  std::string message;

  friend bool operator==(const Diagnostic &, const Diagnostic &) = default;
};

/// "file:line: error E001: message [path]"
std::string format_diagnostic(const Diagnostic &diag);
bool has_errors(const std::vector<Diagnostic> &diags);

struct ParseResult {
  /// Present only when no error diagnostics were produced.
  std::optional<SystemDesc> desc;
  std::vector<Diagnostic> diagnostics;
};

ParseResult parse_system(std::string_view text,
                         const std::string &file = "<input>");

/// Static checks; an empty result means the design is well-formed.
std::vector<Diagnostic> check(const SystemDesc &desc);

/// Maps element paths of a JSON document to 1-based line numbers.
std::map<std::string, int> locate_json_paths(std::string_view text);
int line_of_offset(std::string_view text, std::size_t offset);

} // namespace esic
