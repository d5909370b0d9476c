//===- sim.cpp - Elastic fabric simulation engine -------------------------===//

#include "esic/sim.hpp"
#include "esic/bits.hpp"
#include "esic/error.hpp"

#include <algorithm>
#include <random>

namespace esic {

std::string_view to_string(TraceKind kind) {
  switch (kind) {
  case TraceKind::Transfer: return "xfer";
  case TraceKind::ValidNotReady: return "vnr";
  case TraceKind::ReadyNotValid: return "rnv";
  }
  return "?";
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Trims the concatenated beats of one message to its logical bits.
BitString logical_bits(const EsiType &type, const BitString &raw) {
  std::size_t len = 0;
  if (type.is_list()) {
    if (raw.size() < kListHeaderBits)
      throw Error(ErrorCode::Truncated, "list message shorter than its header");
    len = kListHeaderBits + raw.read_uint(0, kListHeaderBits) * bit_width(type.element());
  } else {
    len = bit_width(type);
  }
  if (raw.size() < len)
    throw Error(ErrorCode::Truncated, "message ended before its logical length");
  return raw.slice(0, len);
}

bool is_combinational(NodeKind kind) {
  return kind == NodeKind::Monitor || kind == NodeKind::Fork || kind == NodeKind::ServiceMux ||
         kind == NodeKind::ServiceDemux;
}

} // namespace

struct WireBeat {
  BitString bits;
  bool last = false;
  std::uint64_t ordinal = 0;
  std::uint32_t index = 0;
  std::uint64_t emit_tick = 0;
};

class SimEngine {
public:
  SimEngine(const FabricGraph &g, SimConfig cfg, const BehaviorMap &behaviors);

  void step();
  std::uint64_t tick() const { return tick_; }
  std::uint64_t transfers() const { return transfers_; }
  void inject(std::uint32_t node, MessageValue value);
  bool mailbox_full(std::uint32_t node) const;
  std::optional<MessageValue> pop(std::uint32_t node);
  const SimResult &result() const { return res_; }

private:
  friend class ActorContext;

  enum class Builtin { None, Source, Sink, Map, Collector, Custom };

  struct OutPort {
    std::deque<WireBeat> q;
    std::uint64_t next_ordinal = 0;
    std::uint64_t stall_key = 0;
    double stall_prob = 0.0;
  };
  struct InPort {
    BitString partial;
    std::optional<MessageValue> complete;
    std::uint64_t stall_key = 0;
    double stall_prob = 0.0;
  };

  struct NodeState {
    Builtin builtin = Builtin::None;
    bool stalls = false;
    std::unique_ptr<ActorBehavior> behavior;
    std::vector<OutPort> outs;
    std::vector<InPort> ins;
    std::vector<std::mt19937_64> rngs;
    std::vector<std::uint64_t> produced;

    std::deque<WireBeat> q;
    std::size_t capacity = 0;

    std::optional<Repacker> repacker;
    std::deque<std::pair<std::uint64_t, std::uint64_t>> meta; // ordinal, emit tick
    bool in_message = false;
    std::uint32_t out_index = 0;

    std::uint32_t rr = 0;
    int chosen = -1;
    std::uint64_t counter = 0;
    std::uint32_t tag_bits = 0;
    std::vector<WireBeat> scratch;

    std::deque<MessageValue> mailbox;

    std::string service;
    std::vector<std::string> clients;
    int monitor = -1;
  };

  const FabricNode &node(std::uint32_t id) const { return g_.nodes[id]; }
  bool stalled(std::uint64_t key, double prob) const;
  double stall_prob_for(const std::string &port) const;
  void detect_comb_cycles() const;
  void init_node(const FabricNode &n, NodeState &s, const BehaviorMap &behaviors);
  std::vector<std::string> client_names(std::uint32_t mux) const;

  void set_valid(int e, bool v, const WireBeat *data);
  void set_ready(int e, bool r);
  bool edge_valid(int e) const { return e >= 0 && valid_[static_cast<std::size_t>(e)]; }
  /// Unconnected outputs of forks and actors swallow everything.
  bool edge_ready(int e) const { return e < 0 || ready_[static_cast<std::size_t>(e)]; }

  void fire_actor(std::uint32_t id);
  void fire_endpoint(std::uint32_t id);
  void evaluate(std::uint32_t id);
  void settle();
  void commit();
  void pop_from(std::uint32_t id, std::uint32_t port);
  void push_into(std::uint32_t id, std::uint32_t port, WireBeat beat);
  MessageValue receive(const FabricNode &n, std::uint32_t port, const BitString &bits);
  void emit_message(std::uint32_t id, std::uint32_t port, const MessageValue &value);

  const FabricGraph &g_;
  SimConfig cfg_;
  SimResult res_;
  std::uint64_t tick_ = 0;
  std::uint64_t transfers_ = 0;
  std::vector<NodeState> state_;
  std::vector<char> active_, valid_, ready_;
  std::vector<const WireBeat *> data_;
  std::vector<char> domain_fired_;
  std::map<std::string, std::size_t> domain_index_;
  std::vector<std::size_t> edge_domain_, node_domain_;
  std::vector<char> source_edge_;
  std::vector<std::uint64_t> emit_tick_;
  std::vector<BitString> edge_acc_;
  std::vector<std::uint32_t> comb_nodes_;
  bool changed_ = false;
};

//===----------------------------------------------------------------------===//
// Construction
//===----------------------------------------------------------------------===//

SimEngine::SimEngine(const FabricGraph &g, SimConfig cfg, const BehaviorMap &behaviors)
    : g_(g), cfg_(cfg) {
  if (cfg_.stall_prob < 0.0 || cfg_.stall_prob > 1.0)
    throw Error(ErrorCode::Range, "stall probability must be in [0, 1]");
  for (const auto &[port, p] : cfg_.port_stall)
    if (p < 0.0 || p > 1.0)
      throw Error(ErrorCode::Range, "stall probability for " + port + " must be in [0, 1]");
  auto problems = validate_graph(g);
  if (!problems.empty())
    throw Error(ErrorCode::InvalidGraph, problems.front());
  detect_comb_cycles();

  res_.design = g.design;
  res_.seed = cfg_.seed;
  res_.stall_prob = cfg_.stall_prob;
  for (std::size_t i = 0; i < g.clocks.size(); ++i) {
    domain_index_[g.clocks[i].name] = i;
    res_.fired_cycles[g.clocks[i].name] = 0;
  }
  domain_fired_.assign(g.clocks.size(), 0);
  for (const auto &n : g.nodes)
    node_domain_.push_back(domain_index_.at(n.domain));
  for (const auto &e : g.edges)
    edge_domain_.push_back(domain_index_.at(e.domain));

  std::size_t ne = g.edges.size();
  active_.assign(ne, 0);
  valid_.assign(ne, 0);
  ready_.assign(ne, 0);
  data_.assign(ne, nullptr);
  source_edge_.assign(ne, 0);
  emit_tick_.assign(ne, 0);
  edge_acc_.assign(ne, BitString());
  for (const auto &c : g.connections)
    source_edge_[c.source_edge] = 1;

  state_.resize(g.nodes.size());
  for (const auto &n : g.nodes) {
    init_node(n, state_[n.id], behaviors);
    if (is_combinational(n.kind))
      comb_nodes_.push_back(n.id);
  }
  for (std::size_t c = 0; c < g.connections.size(); ++c) {
    const auto &path = g.connections[c];
    if (path.monitor_node < 0)
      continue;
    const auto &mon = g.nodes[static_cast<std::size_t>(path.monitor_node)];
    MonitorRecord rec;
    rec.connection = path.name;
    rec.node = mon.id;
    rec.edge = static_cast<std::uint32_t>(mon.inputs[0]);
    rec.domain = mon.domain;
    state_[mon.id].monitor = static_cast<int>(res_.monitors.size());
    res_.monitors.push_back(std::move(rec));
  }
}

std::vector<std::string> SimEngine::client_names(std::uint32_t mux) const {
  std::vector<std::string> names;
  for (int e : g_.nodes[mux].inputs) {
    const FabricEdge *edge = &g_.edges[static_cast<std::size_t>(e)];
    if (g_.nodes[edge->from_node].kind == NodeKind::CdcFifo)
      edge = &g_.edges[static_cast<std::size_t>(g_.nodes[edge->from_node].inputs[0])];
    const auto &src = g_.nodes[edge->from_node];
    if (src.kind == NodeKind::Actor && edge->from_port < src.out_ports.size())
      names.push_back(src.instance + "." + src.out_ports[edge->from_port].name);
    else
      names.push_back(src.name);
  }
  return names;
}

void SimEngine::init_node(const FabricNode &n, NodeState &s, const BehaviorMap &behaviors) {
  switch (n.kind) {
  case NodeKind::Actor: {
    s.outs.resize(n.outputs.size());
    s.ins.resize(n.inputs.size());
    for (std::size_t i = 0; i < s.outs.size(); ++i) {
      std::string port = n.name + "." + n.out_ports[i].name;
      s.outs[i].stall_key = fnv1a64(port);
      s.outs[i].stall_prob = stall_prob_for(port);
    }
    for (std::size_t i = 0; i < s.ins.size(); ++i) {
      std::string port = n.name + "." + n.in_ports[i].name;
      s.ins[i].stall_key = fnv1a64(port);
      s.ins[i].stall_prob = stall_prob_for(port);
    }
    if (n.role != ActorRole::User) {
      s.builtin = Builtin::Collector;
      s.service = n.name.substr(0, n.name.rfind('/'));
      // collector <- [serializer <-] mux
      std::uint32_t up = g_.edges[static_cast<std::size_t>(n.inputs[0])].from_node;
      if (g_.nodes[up].kind == NodeKind::TelemetrySerializer)
        up = g_.edges[static_cast<std::size_t>(g_.nodes[up].inputs[0])].from_node;
      s.clients = client_names(up);
      break;
    }
    s.stalls = true;
    switch (n.behavior.kind) {
    case BehaviorKind::Source:
      s.builtin = Builtin::Source;
      for (std::size_t i = 0; i < s.outs.size(); ++i)
        s.rngs.emplace_back(splitmix(n.behavior.seed ^ splitmix(fnv1a64(n.instance) + i)));
      s.produced.assign(s.outs.size(), 0);
      break;
    case BehaviorKind::Sink: s.builtin = Builtin::Sink; break;
    case BehaviorKind::Map: s.builtin = Builtin::Map; break;
    default: {
      auto it = behaviors.find(n.behavior.actor);
      if (it == behaviors.end())
        throw Error(ErrorCode::InvalidGraph,
                    "no behavior registered for actor '" + n.behavior.actor + "' (instance " +
                        n.instance + ")");
      s.builtin = Builtin::Custom;
      s.behavior = it->second(n);
      break;
    }
    }
    break;
  }
  case NodeKind::BufferStage: s.capacity = kBufferStageCapacity; break;
  case NodeKind::CdcFifo: s.capacity = n.depth; break;
  case NodeKind::Repacker: s.repacker.emplace(n.element_bits, n.width_in, n.width_out); break;
  case NodeKind::CosimEndpoint:
    s.outs.resize(n.outputs.size());
    s.ins.resize(n.inputs.size());
    break;
  case NodeKind::ServiceMux:
  case NodeKind::ServiceDemux:
    s.tag_bits = tag_width(n.fanout);
    s.scratch.resize(n.outputs.size());
    break;
  default: break;
  }
}

// Signals form a dependency graph through the combinational elements. Any
// cycle there can never settle to a well-defined value, so it is rejected
// before the first tick.
void SimEngine::detect_comb_cycles() const {
  std::size_t ne = g_.edges.size();
  auto V = [](int e) { return static_cast<std::size_t>(e) * 2; };
  auto R = [](int e) { return static_cast<std::size_t>(e) * 2 + 1; };
  std::vector<std::vector<std::size_t>> deps(2 * ne);
  auto dep = [&](std::size_t signal, std::size_t on) { deps[signal].push_back(on); };
  for (const auto &n : g_.nodes) {
    switch (n.kind) {
    case NodeKind::Monitor:
      dep(V(n.outputs[0]), V(n.inputs[0]));
      dep(R(n.inputs[0]), R(n.outputs[0]));
      break;
    case NodeKind::Fork:
    case NodeKind::ServiceDemux:
      for (int o : n.outputs) {
        if (o < 0)
          continue;
        dep(V(o), V(n.inputs[0]));
        dep(R(n.inputs[0]), R(o));
        if (n.kind == NodeKind::Fork)
          for (int other : n.outputs)
            if (other >= 0 && other != o)
              dep(V(o), R(other));
      }
      if (n.kind == NodeKind::ServiceDemux)
        dep(R(n.inputs[0]), V(n.inputs[0]));
      break;
    case NodeKind::ServiceMux:
      for (int i : n.inputs)
        for (int j : n.inputs)
          dep(R(i), V(j));
      break;
    default: break;
    }
  }
  std::vector<int> color(2 * ne, 0);
  for (std::size_t root = 0; root < 2 * ne; ++root) {
    if (color[root])
      continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    color[root] = 1;
    while (!stack.empty()) {
      auto &[sig, next] = stack.back();
      if (next < deps[sig].size()) {
        std::size_t d = deps[sig][next++];
        if (color[d] == 1)
          throw Error(ErrorCode::CombLoop,
                      "zero-latency cycle through edge " + std::to_string(d / 2) + " (" +
                          g_.nodes[g_.edges[d / 2].from_node].name + " -> " +
                          g_.nodes[g_.edges[d / 2].to_node].name + ")");
        if (color[d] == 0) {
          color[d] = 1;
          stack.emplace_back(d, 0);
        }
      } else {
        color[sig] = 2;
        stack.pop_back();
      }
    }
  }
}

//===----------------------------------------------------------------------===//
// Tick
//===----------------------------------------------------------------------===//

double SimEngine::stall_prob_for(const std::string &port) const {
  auto it = cfg_.port_stall.find(port);
  return it == cfg_.port_stall.end() ? cfg_.stall_prob : it->second;
}

bool SimEngine::stalled(std::uint64_t key, double prob) const {
  if (prob <= 0.0)
    return false;
  std::uint64_t r = splitmix(cfg_.seed ^ splitmix(key ^ splitmix(tick_)));
  return static_cast<double>(r >> 11) * 0x1.0p-53 < prob;
}

void SimEngine::step() {
  for (std::size_t d = 0; d < g_.clocks.size(); ++d) {
    domain_fired_[d] = tick_ % g_.clocks[d].period == 0;
    if (domain_fired_[d])
      ++res_.fired_cycles[g_.clocks[d].name];
  }
  for (std::size_t e = 0; e < g_.edges.size(); ++e) {
    active_[e] = domain_fired_[edge_domain_[e]];
    valid_[e] = ready_[e] = 0;
    data_[e] = nullptr;
  }
  for (const auto &n : g_.nodes) {
    if (!domain_fired_[node_domain_[n.id]])
      continue;
    if (n.kind == NodeKind::Actor)
      fire_actor(n.id);
    else if (n.kind == NodeKind::CosimEndpoint)
      fire_endpoint(n.id);
  }
  settle();
  commit();
  ++tick_;
  res_.ticks_executed = tick_;
}

void SimEngine::set_valid(int e, bool v, const WireBeat *data) {
  if (e < 0)
    return;
  auto i = static_cast<std::size_t>(e);
  v = v && active_[i];
  if (valid_[i] != v || (v && data_[i] != data))
    changed_ = true;
  valid_[i] = v;
  data_[i] = v ? data : nullptr;
}

void SimEngine::set_ready(int e, bool r) {
  if (e < 0)
    return;
  auto i = static_cast<std::size_t>(e);
  r = r && active_[i];
  if (ready_[i] != r)
    changed_ = true;
  ready_[i] = r;
}

void SimEngine::evaluate(std::uint32_t id) {
  const FabricNode &n = g_.nodes[id];
  NodeState &s = state_[id];
  switch (n.kind) {
  case NodeKind::Actor:
    for (std::size_t i = 0; i < s.outs.size(); ++i) {
      auto &o = s.outs[i];
      bool v = !o.q.empty() && !(s.stalls && stalled(o.stall_key, o.stall_prob));
      set_valid(n.outputs[i], v, v ? &o.q.front() : nullptr);
    }
    for (std::size_t i = 0; i < s.ins.size(); ++i) {
      auto &in = s.ins[i];
      set_ready(n.inputs[i], !in.complete && !(s.stalls && stalled(in.stall_key, in.stall_prob)));
    }
    break;
  case NodeKind::CosimEndpoint:
    if (n.direction == EndpointDirection::FromHost) {
      auto &o = s.outs[0];
      set_valid(n.outputs[0], !o.q.empty(), o.q.empty() ? nullptr : &o.q.front());
    } else {
      set_ready(n.inputs[0], s.mailbox.size() < cfg_.mailbox_capacity);
    }
    break;
  case NodeKind::BufferStage:
  case NodeKind::CdcFifo:
    set_valid(n.outputs[0], !s.q.empty(), s.q.empty() ? nullptr : &s.q.front());
    set_ready(n.inputs[0], s.q.size() < s.capacity);
    break;
  case NodeKind::Repacker:
  case NodeKind::TelemetrySerializer:
    set_valid(n.outputs[0], !s.q.empty(), s.q.empty() ? nullptr : &s.q.front());
    set_ready(n.inputs[0], s.q.size() <= 1);
    break;
  case NodeKind::Monitor:
    set_valid(n.outputs[0], edge_valid(n.inputs[0]), data_[static_cast<std::size_t>(n.inputs[0])]);
    set_ready(n.inputs[0], edge_ready(n.outputs[0]));
    break;
  case NodeKind::Fork: {
    int in = n.inputs[0];
    bool all_ready = true;
    for (int o : n.outputs)
      all_ready = all_ready && edge_ready(o);
    for (int o : n.outputs) {
      bool others = true;
      for (int p : n.outputs)
        if (p != o)
          others = others && edge_ready(p);
      set_valid(o, edge_valid(in) && others, data_[static_cast<std::size_t>(in)]);
    }
    set_ready(in, all_ready);
    break;
  }
  case NodeKind::ServiceMux: {
    s.chosen = -1;
    for (std::uint32_t k = 0; k < n.fanout; ++k) {
      std::uint32_t i = (s.rr + k) % n.fanout;
      if (edge_valid(n.inputs[i])) {
        s.chosen = static_cast<int>(i);
        break;
      }
    }
    for (std::uint32_t i = 0; i < n.fanout; ++i)
      set_ready(n.inputs[i], static_cast<int>(i) == s.chosen && s.q.size() < 2);
    set_valid(n.outputs[0], !s.q.empty(), s.q.empty() ? nullptr : &s.q.front());
    break;
  }
  case NodeKind::ServiceDemux: {
    int in = n.inputs[0];
    std::int64_t tag = -1;
    if (edge_valid(in)) {
      const WireBeat &b = *data_[static_cast<std::size_t>(in)];
      tag = static_cast<std::int64_t>(b.bits.read_uint(0, s.tag_bits));
      if (tag < static_cast<std::int64_t>(n.outputs.size())) {
        auto out = static_cast<std::size_t>(tag);
        const auto &edge = g_.edges[static_cast<std::size_t>(n.outputs[out])];
        s.scratch[out] = {b.bits.slice(s.tag_bits, edge.width), true, b.ordinal, 0, b.emit_tick};
      } else {
        tag = -1;
      }
    }
    for (std::size_t o = 0; o < n.outputs.size(); ++o)
      set_valid(n.outputs[o], static_cast<std::int64_t>(o) == tag, &s.scratch[o]);
    set_ready(in, tag >= 0 && edge_ready(n.outputs[static_cast<std::size_t>(tag)]));
    break;
  }
  }
}

void SimEngine::settle() {
  for (std::uint32_t id = 0; id < g_.nodes.size(); ++id)
    evaluate(id);
  if (comb_nodes_.empty())
    return;
  std::size_t bound = g_.nodes.size() + 1;
  for (std::size_t pass = 0;; ++pass) {
    if (pass > bound)
      throw Error(ErrorCode::CombLoop, "valid/ready did not settle at tick " +
                                           std::to_string(tick_));
    changed_ = false;
    for (std::uint32_t id : comb_nodes_)
      evaluate(id);
    if (!changed_)
      return;
  }
}

void SimEngine::commit() {
  struct Transfer {
    std::uint32_t edge;
    WireBeat beat;
  };
  std::vector<Transfer> transfers;
  for (std::uint32_t e = 0; e < g_.edges.size(); ++e)
    if (valid_[e] && ready_[e])
      transfers.push_back({e, *data_[e]});
  transfers_ += transfers.size();

  // Monitor counters and stall events on monitored edges.
  for (auto &rec : res_.monitors) {
    std::size_t e = rec.edge;
    if (!active_[e])
      continue;
    ++rec.fired_cycles;
    if (valid_[e] && ready_[e]) {
      ++rec.beats_accepted;
      const WireBeat &b = *data_[e];
      if (b.last) {
        ++rec.messages_accepted;
        if (cfg_.monitor_latency)
          ++rec.latency_histogram[tick_ - b.emit_tick];
      }
      continue;
    }
    TraceEvent ev;
    ev.tick = tick_;
    ev.edge = static_cast<std::uint32_t>(e);
    if (valid_[e]) {
      ++rec.valid_not_ready_cycles;
      ev.kind = TraceKind::ValidNotReady;
      ev.ordinal = data_[e]->ordinal;
      ev.beat = data_[e]->index;
    } else if (ready_[e]) {
      ++rec.ready_not_valid_cycles;
      ev.kind = TraceKind::ReadyNotValid;
    } else {
      continue;
    }
    if (cfg_.record_trace)
      res_.trace.push_back(ev);
  }

  for (auto &t : transfers) {
    const FabricEdge &edge = g_.edges[t.edge];
    if (source_edge_[t.edge]) {
      if (t.beat.index == 0)
        emit_tick_[t.edge] = tick_;
      t.beat.emit_tick = emit_tick_[t.edge];
    }
    if (cfg_.record_trace) {
      TraceEvent ev;
      ev.tick = tick_;
      ev.edge = t.edge;
      ev.ordinal = t.beat.ordinal;
      ev.beat = t.beat.index;
      ev.last = t.beat.last;
      ev.digest = t.beat.bits.digest();
      if (cfg_.record_payloads)
        ev.payload_hex = t.beat.bits.to_hex();
      BitString &acc = edge_acc_[t.edge];
      acc.append(t.beat.bits);
      if (t.beat.last) {
        ev.message_digest = logical_bits(edge.type, acc).digest();
        acc = BitString();
      }
      res_.trace.push_back(std::move(ev));
    }
  }
  for (const auto &t : transfers)
    pop_from(g_.edges[t.edge].from_node, g_.edges[t.edge].from_port);
  for (auto &t : transfers)
    push_into(g_.edges[t.edge].to_node, g_.edges[t.edge].to_port, std::move(t.beat));
}

void SimEngine::pop_from(std::uint32_t id, std::uint32_t port) {
  const FabricNode &n = g_.nodes[id];
  NodeState &s = state_[id];
  switch (n.kind) {
  case NodeKind::Actor:
  case NodeKind::CosimEndpoint: s.outs[port].q.pop_front(); break;
  case NodeKind::BufferStage:
  case NodeKind::CdcFifo:
  case NodeKind::Repacker:
  case NodeKind::TelemetrySerializer:
  case NodeKind::ServiceMux: s.q.pop_front(); break;
  default: break; // combinational: the upstream transfer pops
  }
}

MessageValue SimEngine::receive(const FabricNode &n, std::uint32_t port, const BitString &bits) {
  const EsiType &type =
      n.kind == NodeKind::CosimEndpoint ? *n.type : n.in_ports[port].type;
  return decode_message(logical_bits(type, bits), type);
}

void SimEngine::push_into(std::uint32_t id, std::uint32_t port, WireBeat beat) {
  const FabricNode &n = g_.nodes[id];
  NodeState &s = state_[id];
  switch (n.kind) {
  case NodeKind::Actor:
  case NodeKind::CosimEndpoint: {
    InPort &in = s.ins[port];
    in.partial.append(beat.bits);
    if (!beat.last)
      break;
    MessageValue value = receive(n, port, in.partial);
    if (n.kind == NodeKind::CosimEndpoint) {
      s.mailbox.push_back(std::move(value));
    } else {
      if (s.builtin == Builtin::Sink) {
        const EsiType &type = n.in_ports[port].type;
        res_.deliveries[n.instance + "." + n.in_ports[port].name].push_back(
            {tick_, beat.ordinal, logical_bits(type, in.partial).digest()});
      }
      in.complete = std::move(value);
    }
    in.partial = BitString();
    break;
  }
  case NodeKind::BufferStage:
  case NodeKind::CdcFifo: s.q.push_back(std::move(beat)); break;
  case NodeKind::Repacker: {
    if (!s.in_message)
      s.meta.emplace_back(beat.ordinal, beat.emit_tick);
    s.in_message = !beat.last;
    for (auto &out : s.repacker->push(Beat{std::move(beat.bits), beat.last})) {
      auto [ordinal, emit] = s.meta.front();
      bool last = out.last;
      s.q.push_back({std::move(out.bits), last, ordinal, s.out_index++, emit});
      if (last) {
        s.meta.pop_front();
        s.out_index = 0;
      }
    }
    break;
  }
  case NodeKind::TelemetrySerializer: {
    std::uint32_t index = 0;
    for (auto &out : gearbox_split(beat.bits, n.out_width))
      s.q.push_back({std::move(out.bits), out.last, beat.ordinal, index++, beat.emit_tick});
    break;
  }
  case NodeKind::ServiceMux: {
    const auto &out_edge = g_.edges[static_cast<std::size_t>(n.outputs[0])];
    BitString wrapped;
    wrapped.append_uint(port, s.tag_bits);
    wrapped.append(beat.bits);
    wrapped.resize(out_edge.width);
    s.q.push_back({std::move(wrapped), true, s.counter++, 0, beat.emit_tick});
    s.rr = (port + 1) % n.fanout;
    break;
  }
  default: break;
  }
}

//===----------------------------------------------------------------------===//
// Actors and endpoints
//===----------------------------------------------------------------------===//

void SimEngine::emit_message(std::uint32_t id, std::uint32_t port, const MessageValue &value) {
  const FabricNode &n = g_.nodes[id];
  OutPort &o = state_[id].outs[port];
  std::uint64_t ordinal = o.next_ordinal++;
  int e = n.outputs[port];
  if (e < 0)
    return; // unconnected output
  const FabricEdge &edge = g_.edges[static_cast<std::size_t>(e)];
  std::uint32_t index = 0;
  for (auto &b : gearbox_split(encode_message(value, edge.type), edge.width))
    o.q.push_back({std::move(b.bits), b.last, ordinal, index++, tick_});
}

void SimEngine::fire_endpoint(std::uint32_t id) {
  const FabricNode &n = g_.nodes[id];
  NodeState &s = state_[id];
  if (n.direction != EndpointDirection::FromHost || s.mailbox.empty())
    return;
  if (n.outputs[0] >= 0 && !s.outs[0].q.empty())
    return;
  MessageValue v = std::move(s.mailbox.front());
  s.mailbox.pop_front();
  emit_message(id, 0, v);
}

void SimEngine::fire_actor(std::uint32_t id) {
  const FabricNode &n = g_.nodes[id];
  NodeState &s = state_[id];
  ActorContext ctx(*this, id);
  ctx.consumed_.assign(s.ins.size(), false);
  ctx.produced_.assign(s.outs.size(), false);
  switch (s.builtin) {
  case Builtin::Source:
    for (std::size_t i = 0; i < s.outs.size(); ++i) {
      if (s.produced[i] >= n.behavior.count || !ctx.ready(i))
        continue;
      RandomValueOptions opt;
      opt.max_list_length = n.behavior.max_list_length;
      ctx.produce(i, random_value(n.out_ports[i].type, s.rngs[i], opt));
      ++s.produced[i];
    }
    break;
  case Builtin::Sink:
    for (std::size_t i = 0; i < s.ins.size(); ++i)
      if (ctx.available(i))
        ctx.consume(i);
    break;
  case Builtin::Map:
    if (ctx.available(0) && ctx.ready(0))
      ctx.produce(0, ctx.consume(0));
    break;
  case Builtin::Collector:
    if (ctx.available(0)) {
      MessageValue v = ctx.consume(0);
      std::uint32_t client = v.index();
      const MessageValue &payload = v.children().at(0);
      std::string name = client < s.clients.size() ? s.clients[client] : std::to_string(client);
      if (n.role == ActorRole::AssertionCollector) {
        res_.assertions_fired.push_back(
            {tick_, s.service, name, static_cast<std::uint32_t>(payload.as_u64())});
      } else {
        res_.telemetry.push_back(
            {tick_, s.service, name, payload, n.in_ports[0].type.children().at(client)});
      }
    }
    break;
  case Builtin::Custom:
    s.behavior->step(ctx);
    break;
  case Builtin::None: break;
  }
}

void SimEngine::inject(std::uint32_t id, MessageValue value) {
  if (id >= g_.nodes.size() || g_.nodes[id].kind != NodeKind::CosimEndpoint ||
      g_.nodes[id].direction != EndpointDirection::FromHost)
    throw Error(ErrorCode::InvalidGraph, "node is not a from_host endpoint");
  validate(value, *g_.nodes[id].type);
  if (mailbox_full(id))
    throw Error(ErrorCode::Range, "endpoint mailbox is full");
  state_[id].mailbox.push_back(std::move(value));
}

bool SimEngine::mailbox_full(std::uint32_t id) const {
  return state_.at(id).mailbox.size() >= cfg_.mailbox_capacity;
}

std::optional<MessageValue> SimEngine::pop(std::uint32_t id) {
  if (id >= g_.nodes.size() || g_.nodes[id].kind != NodeKind::CosimEndpoint ||
      g_.nodes[id].direction != EndpointDirection::ToHost)
    throw Error(ErrorCode::InvalidGraph, "node is not a to_host endpoint");
  auto &box = state_[id].mailbox;
  if (box.empty())
    return std::nullopt;
  MessageValue v = std::move(box.front());
  box.pop_front();
  return v;
}

//===----------------------------------------------------------------------===//
// ActorContext
//===----------------------------------------------------------------------===//

namespace {
[[noreturn]] void violation(const FabricNode &n, const std::string &what) {
  throw Error(ErrorCode::BehaviorViolation, "actor " + n.name + ": " + what);
}
} // namespace

std::uint64_t ActorContext::tick() const { return engine_.tick_; }
const FabricNode &ActorContext::node() const { return engine_.g_.nodes[node_]; }
std::size_t ActorContext::num_inputs() const { return engine_.state_[node_].ins.size(); }
std::size_t ActorContext::num_outputs() const { return engine_.state_[node_].outs.size(); }

std::size_t ActorContext::input(std::string_view name) const {
  const auto &ports = node().in_ports;
  for (std::size_t i = 0; i < ports.size(); ++i)
    if (ports[i].name == name)
      return i;
  violation(node(), "no input port '" + std::string(name) + "'");
}

std::size_t ActorContext::output(std::string_view name) const {
  const auto &ports = node().out_ports;
  for (std::size_t i = 0; i < ports.size(); ++i)
    if (ports[i].name == name)
      return i;
  violation(node(), "no output port '" + std::string(name) + "'");
}

bool ActorContext::available(std::size_t in) const {
  if (in >= num_inputs())
    violation(node(), "input index " + std::to_string(in) + " out of range");
  return engine_.state_[node_].ins[in].complete.has_value();
}

const MessageValue &ActorContext::peek(std::size_t in) const {
  if (!available(in))
    violation(node(), "peek on input " + std::to_string(in) + " with no message");
  return *engine_.state_[node_].ins[in].complete;
}

MessageValue ActorContext::consume(std::size_t in) {
  if (in < consumed_.size() && consumed_[in])
    violation(node(), "consumed input " + std::to_string(in) + " twice in one firing");
  if (!available(in))
    violation(node(), "consume on input " + std::to_string(in) + " with no message");
  auto &slot = engine_.state_[node_].ins[in].complete;
  MessageValue v = std::move(*slot);
  slot.reset();
  consumed_[in] = true;
  return v;
}

bool ActorContext::ready(std::size_t out) const {
  if (out >= num_outputs())
    violation(node(), "output index " + std::to_string(out) + " out of range");
  if (produced_[out])
    return false;
  return node().outputs[out] < 0 || engine_.state_[node_].outs[out].q.empty();
}

void ActorContext::produce(std::size_t out, MessageValue value) {
  if (!ready(out))
    violation(node(), "produced on output " + std::to_string(out) + " while not ready");
  try {
    validate(value, node().out_ports[out].type);
  } catch (const Error &e) {
    violation(node(), "produced a value that does not match " +
                          print_type(node().out_ports[out].type) + ": " + e.what());
  }
  engine_.emit_message(node_, static_cast<std::uint32_t>(out), value);
  produced_[out] = true;
}

//===----------------------------------------------------------------------===//
// Simulator facade
//===----------------------------------------------------------------------===//

Simulator::Simulator(const FabricGraph &graph, SimConfig config, const BehaviorMap &behaviors)
    : engine_(std::make_unique<SimEngine>(graph, config, behaviors)) {}
Simulator::~Simulator() = default;

void Simulator::step() { engine_->step(); }
void Simulator::run(std::uint64_t ticks) {
  for (std::uint64_t i = 0; i < ticks; ++i)
    engine_->step();
}
std::uint64_t Simulator::tick() const { return engine_->tick(); }
std::uint64_t Simulator::transfers() const { return engine_->transfers(); }
void Simulator::inject(std::uint32_t node, MessageValue value) {
  engine_->inject(node, std::move(value));
}
bool Simulator::mailbox_full(std::uint32_t node) const { return engine_->mailbox_full(node); }
std::optional<MessageValue> Simulator::pop(std::uint32_t node) { return engine_->pop(node); }
const SimResult &Simulator::result() const { return engine_->result(); }

SimResult run(const FabricGraph &graph, const SimConfig &config, const BehaviorMap &behaviors) {
  if (config.max_ticks < 1)
    throw Error(ErrorCode::Range, "max_ticks must be at least 1");
  Simulator sim(graph, config, behaviors);
  sim.run(config.max_ticks);
  return sim.result();
}

} // namespace esic
