//===- fabric.cpp - Elaboration, validation and rendering -----------------===//

#include "esic/fabric.hpp"
#include "esic/error.hpp"
#include "esic/wire.hpp"

#include <algorithm>
#include <sstream>

namespace esic {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
  case NodeKind::Actor: return "actor";
  case NodeKind::BufferStage: return "buffer_stage";
  case NodeKind::Repacker: return "repacker";
  case NodeKind::CdcFifo: return "cdc_fifo";
  case NodeKind::Fork: return "fork";
  case NodeKind::Monitor: return "monitor";
  case NodeKind::ServiceMux: return "service_mux";
  case NodeKind::ServiceDemux: return "service_demux";
  case NodeKind::TelemetrySerializer: return "telemetry_serializer";
  case NodeKind::CosimEndpoint: return "cosim_endpoint";
  }
  return "?";
}

std::string_view to_string(EndpointDirection dir) {
  return dir == EndpointDirection::ToHost ? "to_host" : "from_host";
}

const ClockDomain *FabricGraph::find_clock(std::string_view name) const {
  auto it = std::find_if(clocks.begin(), clocks.end(),
                         [&](const ClockDomain &c) { return c.name == name; });
  return it == clocks.end() ? nullptr : &*it;
}

std::vector<const FabricNode *> FabricGraph::endpoints() const {
  std::vector<const FabricNode *> out;
  for (const auto &n : nodes)
    if (n.kind == NodeKind::CosimEndpoint)
      out.push_back(&n);
  return out;
}

namespace {

struct PortSlot {
  std::uint32_t node;
  std::uint32_t port;
};

class Elaborator {
public:
  explicit Elaborator(const SystemDesc &d) : d_(d) {}

  FabricGraph run() {
    g_.design = d_.name;
    g_.clocks = d_.clocks;
    for (const auto &inst : d_.instances)
      add_instance(inst);
    for (std::size_t i = 0; i < d_.connections.size(); ++i)
      add_connection(d_.connections[i]);
    for (const auto &svc : d_.services)
      add_service(svc);
    return std::move(g_);
  }

private:
  FabricNode &new_node(NodeKind kind, std::string name, std::string domain,
                       std::size_t ins, std::size_t outs) {
    FabricNode n;
    n.id = static_cast<std::uint32_t>(g_.nodes.size());
    n.kind = kind;
    n.name = std::move(name);
    n.domain = std::move(domain);
    n.inputs.assign(ins, -1);
    n.outputs.assign(outs, -1);
    g_.nodes.push_back(std::move(n));
    return g_.nodes.back();
  }

  std::uint32_t add_edge(PortSlot from, PortSlot to, const EsiType &type,
                         std::uint32_t chunk, std::uint64_t width,
                         const std::string &domain, int connection) {
    FabricEdge e;
    e.id = static_cast<std::uint32_t>(g_.edges.size());
    e.from_node = from.node;
    e.from_port = from.port;
    e.to_node = to.node;
    e.to_port = to.port;
    e.type = type;
    e.chunk_size = chunk;
    e.width = width;
    e.domain = domain;
    e.connection = connection;
    g_.nodes[from.node].outputs[from.port] = static_cast<int>(e.id);
    g_.nodes[to.node].inputs[to.port] = static_cast<int>(e.id);
    g_.edges.push_back(std::move(e));
    return g_.edges.back().id;
  }

  void add_instance(const Instance &inst) {
    const ModuleDecl &mod = *d_.find_module(inst.module);
    std::vector<PortDecl> ins, outs;
    for (const auto &p : mod.ports)
      (p.direction == Direction::In ? ins : outs).push_back(p);

    if (mod.behavior.kind == BehaviorKind::HostEndpoint) {
      for (const auto &p : mod.ports) {
        bool from_host = p.direction == Direction::Out;
        auto &n = new_node(NodeKind::CosimEndpoint, inst.name + "." + p.name, inst.clock,
                           from_host ? 0 : 1, from_host ? 1 : 0);
        n.direction = from_host ? EndpointDirection::FromHost : EndpointDirection::ToHost;
        n.type = p.type;
        n.chunk_size = p.chunk_size;
        n.instance = inst.name;
        slots_[{inst.name, p.name}] = {n.id, 0};
      }
      return;
    }

    auto kind = mod.behavior.kind == BehaviorKind::Fork ? NodeKind::Fork : NodeKind::Actor;
    auto &n = new_node(kind, inst.name, inst.clock, ins.size(), outs.size());
    n.instance = inst.name;
    n.module = mod.name;
    n.behavior = mod.behavior;
    if (kind == NodeKind::Fork)
      n.fanout = static_cast<std::uint32_t>(outs.size());
    for (std::uint32_t i = 0; i < ins.size(); ++i)
      slots_[{inst.name, ins[i].name}] = {n.id, i};
    for (std::uint32_t i = 0; i < outs.size(); ++i)
      slots_[{inst.name, outs[i].name}] = {n.id, i};
    n.in_ports = std::move(ins);
    n.out_ports = std::move(outs);
  }

  const std::string &clock_of(const std::string &instance) const {
    return d_.find_instance(instance)->clock;
  }

  void add_connection(const Connection &c) {
    const PortDecl &from = *d_.find_port(c.from);
    const PortDecl &to = *d_.find_port(c.to);
    auto index = static_cast<int>(g_.connections.size());
    ConnectionPath path;
    path.name = c.from.str() + "->" + c.to.str();
    path.buffer_stages = c.buffer_stages;
    path.monitored = c.monitored;
    path.type = from.type;

    std::string domain = clock_of(c.from.instance);
    const std::string &sink_domain = clock_of(c.to.instance);
    std::uint32_t chunk = from.chunk_size;
    std::uint64_t width = channel_width(from.type, chunk);
    PortSlot cur = slots_.at(c.from);

    auto link = [&](std::uint32_t node) {
      path.edges.push_back(add_edge(cur, {node, 0}, from.type, chunk, width, domain, index));
      cur = {node, 0};
    };

    for (std::uint32_t s = 0; s < c.buffer_stages; ++s) {
      auto &n = new_node(NodeKind::BufferStage, path.name + "/stage" + std::to_string(s),
                         domain, 1, 1);
      link(n.id);
    }
    if (from.type.is_list() && from.chunk_size != to.chunk_size) {
      auto &n = new_node(NodeKind::Repacker, path.name + "/repack", domain, 1, 1);
      n.element_bits = bit_width(from.type.element());
      n.width_in = width;
      n.width_out = channel_width(to.type, to.chunk_size);
      link(n.id);
      chunk = to.chunk_size;
      width = n.width_out;
      path.repacked = true;
    }
    if (domain != sink_domain) {
      auto &n = new_node(NodeKind::CdcFifo, path.name + "/cdc", sink_domain, 1, 1);
      n.depth = c.fifo_depth;
      n.from_domain = domain;
      n.to_domain = sink_domain;
      link(n.id);
      domain = sink_domain;
      path.fifo_depth = c.fifo_depth;
    }
    if (c.monitored) {
      auto &n = new_node(NodeKind::Monitor, path.name + "/monitor", domain, 1, 1);
      n.connection = index;
      path.monitor_node = static_cast<int>(n.id);
      link(n.id);
    }
    path.edges.push_back(add_edge(cur, slots_.at(c.to), from.type, chunk, width, domain, index));
    path.source_edge = path.edges.front();
    path.sink_edge = path.edges.back();
    g_.connections.push_back(std::move(path));
  }

  void add_service(const ServiceDecl &svc) {
    std::vector<const ServiceBinding *> clients;
    for (const auto &b : d_.bindings)
      if (b.service == svc.name)
        clients.push_back(&b);

    if (svc.kind == ServiceKind::HostComm) {
      for (const auto *b : clients) {
        PortRef ref{b->instance, b->port};
        const PortDecl &port = *d_.find_port(ref);
        bool to_host = port.direction == Direction::Out;
        const std::string &domain = clock_of(b->instance);
        auto &n = new_node(NodeKind::CosimEndpoint, ref.str(), domain, to_host ? 1 : 0,
                           to_host ? 0 : 1);
        n.direction = to_host ? EndpointDirection::ToHost : EndpointDirection::FromHost;
        n.type = port.type;
        n.chunk_size = port.chunk_size;
        n.instance = b->instance;
        std::uint64_t width = channel_width(port.type, port.chunk_size);
        if (to_host)
          add_edge(slots_.at(ref), {n.id, 0}, port.type, port.chunk_size, width, domain, -1);
        else
          add_edge({n.id, 0}, slots_.at(ref), port.type, port.chunk_size, width, domain, -1);
      }
      return;
    }
    if (clients.empty())
      return;

    std::string domain = svc.clock.empty() ? clock_of(clients[0]->instance) : svc.clock;
    std::vector<EsiType::Member> variants;
    for (std::size_t i = 0; i < clients.size(); ++i)
      variants.emplace_back("c" + std::to_string(i),
                            d_.find_port({clients[i]->instance, clients[i]->port})->type);
    EsiType tagged = EsiType::union_of(std::move(variants));

    auto n_clients = static_cast<std::uint32_t>(clients.size());
    std::uint32_t mux = new_node(NodeKind::ServiceMux, svc.name + "/mux", domain, n_clients, 1).id;
    g_.nodes[mux].fanout = n_clients;
    for (std::uint32_t i = 0; i < n_clients; ++i) {
      PortRef ref{clients[i]->instance, clients[i]->port};
      const EsiType &type = tagged.children()[i];
      const std::string &client_domain = clock_of(ref.instance);
      PortSlot cur = slots_.at(ref);
      if (client_domain != domain) {
        auto &n = new_node(NodeKind::CdcFifo, svc.name + "/cdc" + std::to_string(i), domain, 1, 1);
        n.depth = kDefaultFifoDepth;
        n.from_domain = client_domain;
        n.to_domain = domain;
        add_edge(cur, {n.id, 0}, type, 0, bit_width(type), client_domain, -1);
        cur = {n.id, 0};
      }
      add_edge(cur, {mux, i}, type, 0, bit_width(type), domain, -1);
    }

    std::uint32_t feed = mux;
    std::uint64_t feed_width = bit_width(tagged);
    ActorRole role = ActorRole::AssertionCollector;
    if (svc.kind == ServiceKind::Telemetry) {
      auto &ser = new_node(NodeKind::TelemetrySerializer, svc.name + "/serializer", domain, 1, 1);
      ser.out_width = svc.out_width;
      add_edge({mux, 0}, {ser.id, 0}, tagged, 0, feed_width, domain, -1);
      feed = ser.id;
      feed_width = svc.out_width;
      role = ActorRole::TelemetryCollector;
    }
    auto &sink = new_node(NodeKind::Actor, svc.name + "/collector", domain, 1, 0);
    sink.role = role;
    sink.instance = sink.name;
    sink.behavior.kind = BehaviorKind::Sink;
    sink.in_ports.push_back({"in", Direction::In, tagged, 0});
    add_edge({feed, 0}, {sink.id, 0}, tagged, 0, feed_width, domain, -1);
  }

  const SystemDesc &d_;
  FabricGraph g_;
  std::map<PortRef, PortSlot> slots_;
};

} // namespace

FabricGraph elaborate(const SystemDesc &desc) {
  auto diags = check(desc);
  if (has_errors(diags))
    throw Error(ErrorCode::Unchecked,
                "design has " + std::to_string(diags.size()) +
                    " check diagnostics; first: " + format_diagnostic(diags.front()));
  FabricGraph g = Elaborator(desc).run();
  auto problems = validate_graph(g);
  if (!problems.empty())
    throw Error(ErrorCode::InvalidGraph, "elaboration produced an invalid graph: " +
                                             problems.front());
  return g;
}

std::vector<std::string> validate_graph(const FabricGraph &g) {
  std::vector<std::string> problems;
  auto bad = [&](const std::string &msg) { problems.push_back(msg); };
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto &n = g.nodes[i];
    if (n.id != i)
      bad("node " + n.name + " has id " + std::to_string(n.id) + " at index " + std::to_string(i));
    if (!g.find_clock(n.domain))
      bad("node " + n.name + " has unknown clock domain '" + n.domain + "'");
    bool needs_all = n.kind != NodeKind::Actor && n.kind != NodeKind::Fork;
    for (int e : n.inputs)
      if (e < 0)
        bad("node " + n.name + " has an unconnected input");
    if (needs_all)
      for (int e : n.outputs)
        if (e < 0)
          bad("node " + n.name + " has an unconnected output");
  }
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto &e = g.edges[i];
    std::string where = "edge " + std::to_string(i);
    if (e.id != i || e.from_node >= g.nodes.size() || e.to_node >= g.nodes.size()) {
      bad(where + " has bad ids");
      continue;
    }
    const auto &src = g.nodes[e.from_node];
    const auto &dst = g.nodes[e.to_node];
    if (e.from_port >= src.outputs.size() || src.outputs[e.from_port] != static_cast<int>(i) ||
        e.to_port >= dst.inputs.size() || dst.inputs[e.to_port] != static_cast<int>(i))
      bad(where + " is not registered on its endpoints");
    std::uint64_t expect = src.kind == NodeKind::TelemetrySerializer
                               ? src.out_width
                               : (e.type.is_list() ? e.chunk_size * bit_width(e.type.element())
                                                   : bit_width(e.type));
    if (e.width != expect || e.width == 0)
      bad(where + " width " + std::to_string(e.width) + " != " + std::to_string(expect));
    std::string src_domain = src.kind == NodeKind::CdcFifo ? src.to_domain : src.domain;
    std::string dst_domain = dst.kind == NodeKind::CdcFifo ? dst.from_domain : dst.domain;
    if (e.domain != src_domain || e.domain != dst_domain)
      bad(where + " crosses clock domains outside a cdc_fifo");
    if (dst.kind == NodeKind::Repacker && e.width != dst.width_in)
      bad(where + " does not match repacker input width");
    if (src.kind == NodeKind::Repacker && e.width != src.width_out)
      bad(where + " does not match repacker output width");
  }
  return problems;
}

std::size_t path_capacity(const FabricGraph &g, const ConnectionPath &path) {
  std::size_t beats = kBufferStageCapacity * path.buffer_stages + path.fifo_depth;
  for (auto e : path.edges) {
    const auto &n = g.nodes[g.edges[e].to_node];
    if (n.kind == NodeKind::Repacker)
      beats += (n.width_in + n.width_out - 1) / n.width_out + 2;
  }
  bool multi_beat = path.type.is_list() || path.repacked;
  return beats + (multi_beat ? 1 : 0);
}

std::string emit_dot(const FabricGraph &g) {
  std::ostringstream os;
  os << "digraph \"" << g.design << "\" {\n  rankdir=LR;\n  node [shape=box];\n";
  for (const auto &n : g.nodes) {
    std::uint64_t width = 0;
    if (!n.outputs.empty() && n.outputs[0] >= 0)
      width = g.edges[static_cast<std::size_t>(n.outputs[0])].width;
    else if (!n.inputs.empty() && n.inputs[0] >= 0)
      width = g.edges[static_cast<std::size_t>(n.inputs[0])].width;
    os << "  n" << n.id << " [label=\"" << n.name << "\\n" << to_string(n.kind);
    switch (n.kind) {
    case NodeKind::Repacker: os << " " << n.width_in << "->" << n.width_out; break;
    case NodeKind::CdcFifo: os << " depth=" << n.depth << " " << n.from_domain << "->" << n.to_domain; break;
    case NodeKind::Fork:
    case NodeKind::ServiceMux:
    case NodeKind::ServiceDemux: os << " n=" << n.fanout; break;
    case NodeKind::TelemetrySerializer: os << " out=" << n.out_width; break;
    case NodeKind::CosimEndpoint: os << " " << to_string(n.direction); break;
    default: break;
    }
    os << "\\nW=" << width << " @" << n.domain << "\"];\n";
  }
  for (const auto &e : g.edges)
    os << "  n" << e.from_node << " -> n" << e.to_node << " [label=\"" << print_type(e.type)
       << " / " << e.width << "b\"];\n";
  os << "}\n";
  return os.str();
}

FabricStats fabric_stats(const FabricGraph &g) {
  FabricStats s;
  for (int k = 0; k < kNodeKindCount; ++k)
    s.node_counts[std::string(to_string(static_cast<NodeKind>(k)))] = 0;
  for (const auto &n : g.nodes)
    ++s.node_counts[std::string(to_string(n.kind))];
  for (const auto &e : g.edges)
    s.total_edge_bits += e.width;
  for (const auto &c : g.connections)
    s.max_path_stages = std::max(s.max_path_stages, c.buffer_stages);
  return s;
}

std::string format_stats(const FabricStats &s) {
  std::ostringstream os;
  for (const auto &[kind, count] : s.node_counts)
    os << kind << ": " << count << "\n";
  os << "total_edge_bits: " << s.total_edge_bits << "\n";
  os << "max_path_stages: " << s.max_path_stages << "\n";
  return os.str();
}

nlohmann::ordered_json fabric_to_json(const FabricGraph &g) {
  using J = nlohmann::ordered_json;
  J out;
  out["version"] = kFabricJsonVersion;
  out["design"] = g.design;
  out["clocks"] = J::array();
  for (const auto &c : g.clocks)
    out["clocks"].push_back({{"name", c.name}, {"period", c.period}});
  out["nodes"] = J::array();
  for (const auto &n : g.nodes) {
    J j;
    j["id"] = n.id;
    j["kind"] = to_string(n.kind);
    j["name"] = n.name;
    j["domain"] = n.domain;
    switch (n.kind) {
    case NodeKind::Actor: {
      j["role"] = n.role == ActorRole::User ? "user"
                  : n.role == ActorRole::TelemetryCollector ? "telemetry_collector"
                                                            : "assertion_collector";
      j["behavior"] = to_string(n.behavior.kind);
      if (n.behavior.kind == BehaviorKind::Custom)
        j["actor"] = n.behavior.actor;
      break;
    }
    case NodeKind::Repacker:
      j["element_bits"] = n.element_bits;
      j["width_in"] = n.width_in;
      j["width_out"] = n.width_out;
      break;
    case NodeKind::CdcFifo:
      j["depth"] = n.depth;
      j["from_domain"] = n.from_domain;
      j["to_domain"] = n.to_domain;
      break;
    case NodeKind::Fork:
    case NodeKind::ServiceMux:
    case NodeKind::ServiceDemux:
      j["fanout"] = n.fanout;
      break;
    case NodeKind::Monitor:
      j["connection"] = n.connection;
      break;
    case NodeKind::TelemetrySerializer:
      j["out_width"] = n.out_width;
      break;
    case NodeKind::CosimEndpoint:
      j["direction"] = to_string(n.direction);
      j["type"] = print_type(*n.type);
      break;
    case NodeKind::BufferStage:
      j["capacity"] = kBufferStageCapacity;
      break;
    }
    j["inputs"] = n.inputs;
    j["outputs"] = n.outputs;
    out["nodes"].push_back(std::move(j));
  }
  out["edges"] = J::array();
  for (const auto &e : g.edges)
    out["edges"].push_back({{"id", e.id},
                            {"from", {{"node", e.from_node}, {"port", e.from_port}}},
                            {"to", {{"node", e.to_node}, {"port", e.to_port}}},
                            {"type", print_type(e.type)},
                            {"chunk_size", e.chunk_size},
                            {"width", e.width},
                            {"domain", e.domain},
                            {"connection", e.connection}});
  out["connections"] = J::array();
  for (const auto &c : g.connections)
    out["connections"].push_back({{"name", c.name},
                                  {"edges", c.edges},
                                  {"buffer_stages", c.buffer_stages},
                                  {"fifo_depth", c.fifo_depth},
                                  {"repacked", c.repacked},
                                  {"monitored", c.monitored}});
  return out;
}

} // namespace esic
