// Fluent construction of SystemDesc values for tests, plus a generator of
// random well-formed designs.
#pragma once

#include "esic/system.hpp"
#include "random_types.hpp"

#include <random>
#include <string>
#include <vector>

namespace esic::testsupport {

inline PortDecl in_port(std::string name, const std::string &type, std::uint32_t chunk = 0) {
  return {std::move(name), Direction::In, parse_type(type), chunk};
}
inline PortDecl out_port(std::string name, const std::string &type, std::uint32_t chunk = 0) {
  return {std::move(name), Direction::Out, parse_type(type), chunk};
}

inline Behavior source_behavior(std::uint64_t count, std::uint64_t seed = 1,
                                std::uint32_t max_list_length = 8) {
  Behavior b{BehaviorKind::Source};
  b.count = count;
  b.seed = seed;
  b.max_list_length = max_list_length;
  return b;
}
inline Behavior simple_behavior(BehaviorKind kind) { return Behavior{kind}; }
inline Behavior custom_behavior(std::string actor) {
  Behavior b{BehaviorKind::Custom};
  b.actor = std::move(actor);
  return b;
}

inline PortRef ref(const std::string &text) {
  auto dot = text.find('.');
  return {text.substr(0, dot), text.substr(dot + 1)};
}

class DesignBuilder {
public:
  explicit DesignBuilder(std::string name = "test") { d_.name = std::move(name); }

  DesignBuilder &clock(std::string name, std::uint32_t period = 1) {
    d_.clocks.push_back({std::move(name), period});
    return *this;
  }
  DesignBuilder &module(std::string name, Behavior behavior, std::vector<PortDecl> ports) {
    d_.modules.push_back({std::move(name), std::move(ports), std::move(behavior)});
    return *this;
  }
  DesignBuilder &instance(std::string name, std::string module, std::string clock) {
    d_.instances.push_back({std::move(name), std::move(module), std::move(clock)});
    return *this;
  }
  DesignBuilder &connect(const std::string &from, const std::string &to,
                         std::uint32_t stages = 0, bool monitored = false,
                         std::uint32_t fifo_depth = kDefaultFifoDepth) {
    d_.connections.push_back({ref(from), ref(to), stages, monitored, fifo_depth});
    return *this;
  }
  DesignBuilder &service(std::string name, ServiceKind kind, std::uint32_t out_width = 0,
                         std::string clock = "") {
    d_.services.push_back({std::move(name), kind, out_width, std::move(clock)});
    return *this;
  }
  DesignBuilder &bind(const std::string &port, std::string service) {
    auto r = ref(port);
    d_.bindings.push_back({r.instance, r.port, std::move(service)});
    return *this;
  }
  SystemDesc build() const { return d_; }

private:
  SystemDesc d_;
};

/// source --stages--> sink on a single clock, carrying `type`.
inline SystemDesc simple_pipeline(const std::string &type, std::uint64_t count,
                                  std::uint32_t stages, bool monitored = false,
                                  std::uint32_t out_chunk = 0, std::uint32_t in_chunk = 0) {
  return DesignBuilder("pipe")
      .clock("core", 1)
      .module("P", source_behavior(count), {out_port("out", type, out_chunk)})
      .module("C", simple_behavior(BehaviorKind::Sink), {in_port("in", type, in_chunk)})
      .instance("p", "P", "core")
      .instance("c", "C", "core")
      .connect("p.out", "c.in", stages, monitored)
      .build();
}

struct RandomDesignOptions {
  int min_lanes = 1;
  int max_lanes = 3;
  std::uint32_t max_stages = 8;
  std::uint64_t messages = 20;
  std::vector<std::uint32_t> periods{1, 2, 3};
  double list_probability = 0.4;
  std::uint32_t max_chunk = 4;
  std::uint32_t max_list_length = 6;
};

/// Independent lanes of source -> [map relay] -> sink over two clock domains
/// with random payload types, chunk sizes, buffer depths and FIFO depths.
inline SystemDesc random_design(std::mt19937_64 &rng, const RandomDesignOptions &opt = {}) {
  auto pick = [&](auto lo, auto hi) {
    return std::uniform_int_distribution<decltype(lo)>(lo, hi)(rng);
  };
  DesignBuilder b("random");
  b.clock("a", opt.periods[pick(std::size_t{0}, opt.periods.size() - 1)]);
  b.clock("b", opt.periods[pick(std::size_t{0}, opt.periods.size() - 1)]);
  int lanes = pick(opt.min_lanes, opt.max_lanes);
  TypeGenOptions topt;
  topt.max_depth = 3;
  topt.max_int_width = 40;
  for (int lane = 0; lane < lanes; ++lane) {
    std::string l = std::to_string(lane);
    bool is_list = std::bernoulli_distribution(opt.list_probability)(rng);
    std::string type;
    if (is_list)
      type = "list<" + print_type(random_fixed_type(rng, topt)) + ">";
    else
      type = print_type(random_fixed_type(rng, topt));
    auto chunk = [&] { return is_list ? pick(std::uint32_t{1}, opt.max_chunk) : 0u; };
    auto clk = [&] { return pick(0, 1) ? std::string("a") : std::string("b"); };
    std::uint32_t c_src = chunk(), c_mid_in = chunk(), c_mid_out = chunk(), c_dst = chunk();
    bool relay = pick(0, 1) == 1;
    b.module("P" + l, source_behavior(opt.messages, 100 + lane, opt.max_list_length),
             {out_port("out", type, c_src)});
    b.module("C" + l, simple_behavior(BehaviorKind::Sink), {in_port("in", type, c_dst)});
    b.instance("p" + l, "P" + l, clk());
    b.instance("c" + l, "C" + l, clk());
    auto stages = [&] { return pick(std::uint32_t{0}, opt.max_stages); };
    auto depth = [&] { return pick(std::uint32_t{1}, std::uint32_t{6}); };
    if (relay) {
      b.module("M" + l, simple_behavior(BehaviorKind::Map),
               {in_port("in", type, c_mid_in), out_port("out", type, c_mid_out)});
      b.instance("m" + l, "M" + l, clk());
      b.connect("p" + l + ".out", "m" + l + ".in", stages(), pick(0, 1) == 1, depth());
      b.connect("m" + l + ".out", "c" + l + ".in", stages(), pick(0, 1) == 1, depth());
    } else {
      b.connect("p" + l + ".out", "c" + l + ".in", stages(), pick(0, 1) == 1, depth());
    }
  }
  return b.build();
}

} // namespace esic::testsupport
