//===- sim_report.cpp - Delivery checking and run reports ------------------===//

#include "esic/bits.hpp"
#include "esic/sim.hpp"
#include "esic/value_json.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

namespace esic {

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
  case ViolationKind::Loss: return "loss";
  case ViolationKind::Duplicate: return "duplicate";
  case ViolationKind::Order: return "order";
  case ViolationKind::Corruption: return "corruption";
  case ViolationKind::Capacity: return "capacity";
  }
  return "?";
}

namespace {

struct MessageEvent {
  std::uint64_t ordinal;
  std::uint64_t digest;
};

std::vector<MessageEvent> messages_on(const SimResult &r, std::uint32_t edge) {
  std::vector<MessageEvent> out;
  for (const auto &ev : r.trace)
    if (ev.edge == edge && ev.kind == TraceKind::Transfer && ev.last)
      out.push_back({ev.ordinal, ev.message_digest});
  return out;
}

} // namespace

std::vector<DeliveryViolation> verify_delivery(const SimResult &result,
                                               const FabricGraph &graph) {
  std::vector<DeliveryViolation> out;
  for (const auto &path : graph.connections) {
    auto report = [&](ViolationKind kind, std::string msg) {
      out.push_back({path.name, kind, std::move(msg)});
    };
    auto sent = messages_on(result, path.source_edge);
    auto got = messages_on(result, path.sink_edge);
    std::map<std::uint64_t, std::uint64_t> sent_digest;
    for (const auto &m : sent)
      sent_digest.emplace(m.ordinal, m.digest);

    std::set<std::uint64_t> seen;
    std::optional<std::uint64_t> prev;
    for (const auto &m : got) {
      std::string which = "message " + std::to_string(m.ordinal);
      auto it = sent_digest.find(m.ordinal);
      if (it == sent_digest.end()) {
        report(ViolationKind::Corruption, which + " arrived but was never sent");
      } else if (!seen.insert(m.ordinal).second) {
        report(ViolationKind::Duplicate, which + " arrived twice");
      } else {
        if (prev && m.ordinal < *prev)
          report(ViolationKind::Order, which + " arrived after message " + std::to_string(*prev));
        if (it->second != m.digest)
          report(ViolationKind::Corruption, which + " payload digest changed in transit");
      }
      prev = m.ordinal;
    }

    std::uint64_t newest = seen.empty() ? 0 : *seen.rbegin();
    std::size_t in_flight = 0;
    for (const auto &m : sent) {
      if (seen.count(m.ordinal))
        continue;
      if (!seen.empty() && m.ordinal < newest)
        report(ViolationKind::Loss, "message " + std::to_string(m.ordinal) + " never arrived");
      else
        ++in_flight;
    }
    std::size_t cap = path_capacity(graph, path);
    if (in_flight > cap)
      report(ViolationKind::Capacity, std::to_string(in_flight) +
                                          " messages in flight exceeds path capacity " +
                                          std::to_string(cap));
  }
  return out;
}

nlohmann::ordered_json monitor_report(const SimResult &r) {
  using J = nlohmann::ordered_json;
  J doc;
  doc["version"] = kReportVersion;
  doc["design"] = r.design;
  doc["seed"] = r.seed;
  doc["stall_prob"] = r.stall_prob;
  doc["ticks"] = r.ticks_executed;
  doc["fired_cycles"] = J::object();
  for (const auto &[domain, n] : r.fired_cycles)
    doc["fired_cycles"][domain] = n;

  doc["connections"] = J::array();
  for (const auto &m : r.monitors) {
    J c;
    c["name"] = m.connection;
    c["domain"] = m.domain;
    c["fired_cycles"] = m.fired_cycles;
    c["messages_accepted"] = m.messages_accepted;
    c["beats_accepted"] = m.beats_accepted;
    c["valid_not_ready_cycles"] = m.valid_not_ready_cycles;
    c["ready_not_valid_cycles"] = m.ready_not_valid_cycles;
    double cycles = static_cast<double>(m.fired_cycles);
    c["messages_per_cycle"] = cycles > 0 ? static_cast<double>(m.messages_accepted) / cycles : 0.0;
    c["backpressure_fraction"] =
        cycles > 0 ? static_cast<double>(m.valid_not_ready_cycles) / cycles : 0.0;
    J lat;
    std::uint64_t samples = 0, total = 0;
    J hist = J::array();
    for (const auto &[ticks, count] : m.latency_histogram) {
      samples += count;
      total += ticks * count;
      hist.push_back({{"ticks", ticks}, {"count", count}});
    }
    lat["samples"] = samples;
    if (samples > 0) {
      lat["min"] = m.latency_histogram.begin()->first;
      lat["max"] = m.latency_histogram.rbegin()->first;
      lat["mean"] = static_cast<double>(total) / static_cast<double>(samples);
    }
    lat["histogram"] = std::move(hist);
    c["latency"] = std::move(lat);
    doc["connections"].push_back(std::move(c));
  }

  doc["deliveries"] = J::object();
  for (const auto &[sink, list] : r.deliveries) {
    J d;
    d["messages"] = list.size();
    if (!list.empty()) {
      d["first_tick"] = list.front().tick;
      d["last_tick"] = list.back().tick;
    }
    doc["deliveries"][sink] = std::move(d);
  }

  doc["assertions"] = J::array();
  for (const auto &a : r.assertions_fired)
    doc["assertions"].push_back(
        {{"tick", a.tick}, {"service", a.service}, {"client", a.client}, {"code", a.code}});
  doc["telemetry"] = J::array();
  for (const auto &t : r.telemetry)
    doc["telemetry"].push_back({{"tick", t.tick},
                                {"service", t.service},
                                {"client", t.client},
                                {"value", value_to_json(t.value, t.type)}});
  return doc;
}

std::string monitor_report_text(const SimResult &r) {
  std::ostringstream os;
  os << "design " << r.design << ": " << r.ticks_executed << " ticks, seed " << r.seed
     << ", stall " << r.stall_prob << "\n";
  for (const auto &[domain, n] : r.fired_cycles)
    os << "  domain " << domain << ": " << n << " fired cycles\n";
  os << std::fixed << std::setprecision(4);
  for (const auto &m : r.monitors) {
    double cycles = static_cast<double>(m.fired_cycles);
    os << "connection " << m.connection << " @" << m.domain << "\n"
       << "  messages " << m.messages_accepted << ", beats " << m.beats_accepted << "\n"
       << "  valid_not_ready " << m.valid_not_ready_cycles << ", ready_not_valid "
       << m.ready_not_valid_cycles << "\n"
       << "  messages/cycle "
       << (cycles > 0 ? static_cast<double>(m.messages_accepted) / cycles : 0.0)
       << ", backpressure "
       << (cycles > 0 ? static_cast<double>(m.valid_not_ready_cycles) / cycles : 0.0) << "\n";
    if (!m.latency_histogram.empty()) {
      os << "  latency";
      for (const auto &[ticks, count] : m.latency_histogram)
        os << " " << ticks << "x" << count;
      os << "\n";
    }
  }
  for (const auto &[sink, list] : r.deliveries)
    os << "sink " << sink << ": " << list.size() << " messages\n";
  for (const auto &a : r.assertions_fired)
    os << "assertion tick " << a.tick << " " << a.service << " " << a.client << " code "
       << a.code << "\n";
  for (const auto &t : r.telemetry)
    os << "telemetry tick " << t.tick << " " << t.service << " " << t.client << " "
       << value_to_json(t.value, t.type).dump() << "\n";
  return os.str();
}

std::string trace_ndjson(const SimResult &r) {
  std::string out;
  for (const auto &ev : r.trace) {
    nlohmann::ordered_json j;
    j["tick"] = ev.tick;
    j["edge"] = ev.edge;
    j["kind"] = to_string(ev.kind);
    j["ordinal"] = ev.ordinal;
    if (ev.kind == TraceKind::Transfer) {
      j["beat"] = ev.beat;
      j["last"] = ev.last;
      j["digest"] = hex64(ev.digest);
      if (ev.last)
        j["message_digest"] = hex64(ev.message_digest);
      if (!ev.payload_hex.empty())
        j["payload"] = ev.payload_hex;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

} // namespace esic
