//===- system_parse.cpp - JSON system description reader ------------------===//

#include "esic/system.hpp"
#include "esic/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace esic {

using nlohmann::json;

std::string_view to_string(Direction dir) {
  return dir == Direction::In ? "in" : "out";
}

std::string_view to_string(BehaviorKind kind) {
  switch (kind) {
  case BehaviorKind::Source: return "source";
  case BehaviorKind::Sink: return "sink";
  case BehaviorKind::Map: return "map";
  case BehaviorKind::Fork: return "fork";
  case BehaviorKind::HostEndpoint: return "host_endpoint";
  case BehaviorKind::Custom: return "custom";
  }
  return "?";
}

std::string_view to_string(ServiceKind kind) {
  switch (kind) {
  case ServiceKind::HostComm: return "host_comm";
  case ServiceKind::Telemetry: return "telemetry";
  case ServiceKind::Assertion: return "assertion";
  }
  return "?";
}

const PortDecl *ModuleDecl::find_port(std::string_view port) const {
  auto it = std::find_if(ports.begin(), ports.end(),
                         [&](const PortDecl &p) { return p.name == port; });
  return it == ports.end() ? nullptr : &*it;
}

namespace {
template <typename T>
const T *find_named(const std::vector<T> &items, std::string_view name) {
  auto it = std::find_if(items.begin(), items.end(),
                         [&](const T &item) { return item.name == name; });
  return it == items.end() ? nullptr : &*it;
}
} // namespace

const ClockDomain *SystemDesc::find_clock(std::string_view n) const { return find_named(clocks, n); }
const ModuleDecl *SystemDesc::find_module(std::string_view n) const { return find_named(modules, n); }
const Instance *SystemDesc::find_instance(std::string_view n) const { return find_named(instances, n); }
const ServiceDecl *SystemDesc::find_service(std::string_view n) const { return find_named(services, n); }

const PortDecl *SystemDesc::find_port(const PortRef &ref) const {
  const Instance *inst = find_instance(ref.instance);
  if (!inst)
    return nullptr;
  const ModuleDecl *mod = find_module(inst->module);
  return mod ? mod->find_port(ref.port) : nullptr;
}

std::string format_diagnostic(const Diagnostic &d) {
  std::string out = d.file.empty() ? std::string("<input>") : d.file;
  if (d.line > 0)
    out += ":" + std::to_string(d.line);
  out += d.severity == Severity::Error ? ": error " : ": warning ";
  out += d.code + ": " + d.message;
  if (!d.path.empty())
    out += " [" + d.path + "]";
  return out;
}

bool has_errors(const std::vector<Diagnostic> &diags) {
  return std::any_of(diags.begin(), diags.end(), [](const Diagnostic &d) {
    return d.severity == Severity::Error;
  });
}

namespace {

class SystemParser {
public:
  SystemParser(std::string_view text, std::string file)
      : text_(text), file_(std::move(file)) {}

  ParseResult run() {
    json root;
    try {
      root = json::parse(text_);
    } catch (const json::parse_error &e) {
      Diagnostic d{Severity::Error, "E100", file_,
                   line_of_offset(text_, e.byte == 0 ? 0 : e.byte - 1), "",
                   "malformed JSON: " + std::string(e.what())};
      return {std::nullopt, {d}};
    }
    desc_.source_file = file_;
    desc_.lines = locate_json_paths(text_);
    if (!root.is_object()) {
      error("E101", "", "top level must be a JSON object");
      return finish();
    }
    parse_root(root);
    return finish();
  }

private:
  ParseResult finish() {
    ParseResult result;
    result.diagnostics = std::move(diags_);
    if (!has_errors(result.diagnostics))
      result.desc = std::move(desc_);
    return result;
  }

  int line_for(std::string path) const {
    while (true) {
      auto it = desc_.lines.find(path);
      if (it != desc_.lines.end())
        return it->second;
      auto cut = path.find_last_of(".[");
      if (cut == std::string::npos)
        return path.empty() ? 0 : line_for("");
      path.resize(cut);
    }
  }

  void error(const std::string &code, const std::string &path, const std::string &msg) {
    diags_.push_back({Severity::Error, code, file_, line_for(path), path, msg});
  }
  void warning(const std::string &code, const std::string &path, const std::string &msg) {
    diags_.push_back({Severity::Warning, code, file_, line_for(path), path, msg});
  }

  static std::string sub(const std::string &path, const std::string &key) {
    return path.empty() ? key : path + "." + key;
  }
  static std::string at(const std::string &path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
  }

  void known_keys(const json &obj, const std::string &path,
                  std::initializer_list<const char *> keys) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (std::none_of(keys.begin(), keys.end(),
                       [&](const char *k) { return it.key() == k; }))
        warning("W100", sub(path, it.key()), "unknown key '" + it.key() + "' ignored");
  }

  const json *member(const json &obj, const std::string &path, const char *key,
                     json::value_t kind, bool required) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required)
        error("E101", path, std::string("missing required field '") + key + "'");
      return nullptr;
    }
    bool ok = it->type() == kind ||
              (kind == json::value_t::number_integer && it->is_number_integer());
    if (!ok) {
      error("E101", sub(path, key),
            std::string("field '") + key + "' has the wrong JSON type");
      return nullptr;
    }
    return &*it;
  }

  std::optional<std::string> name_field(const json &obj, const std::string &path,
                                        const char *key = "name") {
    const json *v = member(obj, path, key, json::value_t::string, true);
    if (!v)
      return std::nullopt;
    std::string name = v->get<std::string>();
    if (!is_identifier(name)) {
      error("E101", sub(path, key), "'" + name + "' is not an identifier");
      return std::nullopt;
    }
    return name;
  }

  std::optional<std::int64_t> int_field(const json &obj, const std::string &path,
                                        const char *key, bool required,
                                        std::int64_t lo, std::int64_t hi) {
    const json *v = member(obj, path, key, json::value_t::number_integer, required);
    if (!v)
      return std::nullopt;
    if (v->is_number_unsigned() && v->get<std::uint64_t>() > static_cast<std::uint64_t>(hi)) {
      error("E106", sub(path, key), std::string("'") + key + "' out of range");
      return std::nullopt;
    }
    std::int64_t value = v->get<std::int64_t>();
    if (value < lo || value > hi) {
      error("E106", sub(path, key),
            std::string("'") + key + "' must be in " + std::to_string(lo) + ".." +
                std::to_string(hi) + ", got " + std::to_string(value));
      return std::nullopt;
    }
    return value;
  }

  const json *array_field(const json &root, const char *key) {
    return member(root, "", key, json::value_t::array, true);
  }

  void parse_root(const json &root) {
    known_keys(root, "", {"version", "name", "clocks", "modules", "instances",
                          "connections", "services", "bindings"});
    if (auto v = int_field(root, "", "version", false, 0, 1 << 30); v && *v != kSystemDescVersion)
      error("E109", "version", "unsupported description version " + std::to_string(*v));
    if (const json *n = member(root, "", "name", json::value_t::string, true))
      desc_.name = n->get<std::string>();

    if (const json *a = array_field(root, "clocks"))
      for (std::size_t i = 0; i < a->size(); ++i)
        parse_clock((*a)[i], at("clocks", i));
    if (const json *a = array_field(root, "modules"))
      for (std::size_t i = 0; i < a->size(); ++i)
        parse_module((*a)[i], at("modules", i));
    if (const json *a = array_field(root, "instances"))
      for (std::size_t i = 0; i < a->size(); ++i)
        parse_instance((*a)[i], at("instances", i));
    if (const json *a = array_field(root, "connections"))
      for (std::size_t i = 0; i < a->size(); ++i)
        parse_connection((*a)[i], at("connections", i));
    if (const json *a = array_field(root, "services"))
      for (std::size_t i = 0; i < a->size(); ++i)
        parse_service((*a)[i], at("services", i));
    if (const json *a = array_field(root, "bindings"))
      for (std::size_t i = 0; i < a->size(); ++i)
        parse_binding((*a)[i], at("bindings", i));
  }

  bool require_object(const json &v, const std::string &path) {
    if (!v.is_object()) {
      error("E101", path, "expected a JSON object");
      return false;
    }
    return true;
  }

  void parse_clock(const json &v, const std::string &path) {
    if (!require_object(v, path))
      return;
    known_keys(v, path, {"name", "period"});
    auto name = name_field(v, path);
    auto period = int_field(v, path, "period", true, 1, 1 << 20);
    if (name && !period)
      bad_clocks_.insert(*name);
    if (!name || !period)
      return;
    if (desc_.find_clock(*name) || bad_clocks_.count(*name)) {
      error("E103", sub(path, "name"), "duplicate clock domain '" + *name + "'");
      return;
    }
    desc_.clocks.push_back({*name, static_cast<std::uint32_t>(*period)});
  }

  std::optional<Behavior> parse_behavior(const json &v, const std::string &path) {
    Behavior b;
    std::string kind;
    if (v.is_string()) {
      kind = v.get<std::string>();
    } else if (v.is_object()) {
      known_keys(v, path, {"kind", "actor", "count", "seed", "max_list_length"});
      const json *k = member(v, path, "kind", json::value_t::string, true);
      if (!k)
        return std::nullopt;
      kind = k->get<std::string>();
      if (auto c = int_field(v, path, "count", false, 0, std::int64_t{1} << 40))
        b.count = static_cast<std::uint64_t>(*c);
      if (const json *s = v.contains("seed") ? &v["seed"] : nullptr) {
        if (!s->is_number_integer())
          error("E101", sub(path, "seed"), "field 'seed' has the wrong JSON type");
        else
          b.seed = s->get<std::uint64_t>();
      }
      if (auto m = int_field(v, path, "max_list_length", false, 0, 1 << 20))
        b.max_list_length = static_cast<std::uint32_t>(*m);
      if (const json *a = member(v, path, "actor", json::value_t::string, false))
        b.actor = a->get<std::string>();
    } else {
      error("E101", path, "behavior must be a string or an object");
      return std::nullopt;
    }
    static const std::pair<const char *, BehaviorKind> kinds[] = {
        {"source", BehaviorKind::Source}, {"sink", BehaviorKind::Sink},
        {"map", BehaviorKind::Map},       {"fork", BehaviorKind::Fork},
        {"host_endpoint", BehaviorKind::HostEndpoint}, {"custom", BehaviorKind::Custom}};
    auto it = std::find_if(std::begin(kinds), std::end(kinds),
                           [&](const auto &p) { return kind == p.first; });
    if (it == std::end(kinds)) {
      error("E101", path, "unknown behavior kind '" + kind + "'");
      return std::nullopt;
    }
    b.kind = it->second;
    if (b.kind == BehaviorKind::Custom && b.actor.empty()) {
      error("E101", path, "custom behavior needs an 'actor' id");
      return std::nullopt;
    }
    return b;
  }

  std::optional<PortDecl> parse_port(const json &v, const std::string &path) {
    if (!require_object(v, path))
      return std::nullopt;
    known_keys(v, path, {"name", "direction", "type", "chunk_size"});
    PortDecl port;
    auto name = name_field(v, path);
    const json *dir = member(v, path, "direction", json::value_t::string, true);
    const json *type = member(v, path, "type", json::value_t::string, true);
    bool ok = name && dir && type;
    if (dir) {
      auto d = dir->get<std::string>();
      if (d == "in" || d == "out") {
        port.direction = d == "in" ? Direction::In : Direction::Out;
      } else {
        error("E101", sub(path, "direction"), "direction must be 'in' or 'out'");
        ok = false;
      }
    }
    if (type) {
      try {
        port.type = parse_type(type->get<std::string>());
      } catch (const Error &e) {
        error("E104", sub(path, "type"), std::string("invalid type: ") + e.what());
        ok = false;
      }
    }
    bool has_chunk = v.contains("chunk_size");
    if (ok && port.type.is_list()) {
      if (!has_chunk) {
        error("E105", path, "list port needs a chunk_size");
        ok = false;
      } else if (auto c = int_field(v, path, "chunk_size", true, 1, 1 << 20)) {
        port.chunk_size = static_cast<std::uint32_t>(*c);
      } else {
        ok = false;
      }
    } else if (ok && has_chunk) {
      error("E105", sub(path, "chunk_size"), "chunk_size is only valid on list ports");
      ok = false;
    }
    if (!ok)
      return std::nullopt;
    port.name = *name;
    return port;
  }

  void check_behavior_shape(const ModuleDecl &m, const std::string &path) {
    std::vector<const PortDecl *> ins, outs;
    for (const auto &p : m.ports)
      (p.direction == Direction::In ? ins : outs).push_back(&p);
    auto bad = [&](const std::string &why) {
      error("E107", sub(path, "behavior"),
            std::string(to_string(m.behavior.kind)) + " module '" + m.name + "' " + why);
    };
    auto same_channel = [](const PortDecl *a, const PortDecl *b) {
      return type_equal(a->type, b->type) && a->chunk_size == b->chunk_size;
    };
    switch (m.behavior.kind) {
    case BehaviorKind::Source:
      if (!ins.empty() || outs.empty())
        bad("needs output ports only");
      break;
    case BehaviorKind::Sink:
      if (ins.empty() || !outs.empty())
        bad("needs input ports only");
      break;
    case BehaviorKind::Map:
      if (ins.size() != 1 || outs.size() != 1)
        bad("needs exactly one input and one output");
      else if (!type_equal(ins[0]->type, outs[0]->type))
        bad("needs equal input and output types");
      break;
    case BehaviorKind::Fork:
      if (ins.size() != 1 || outs.empty())
        bad("needs one input and at least one output");
      else if (!std::all_of(outs.begin(), outs.end(),
                            [&](const PortDecl *o) { return same_channel(ins[0], o); }))
        bad("needs every output to match the input type and chunk size");
      break;
    case BehaviorKind::HostEndpoint:
    case BehaviorKind::Custom:
      break;
    }
  }

  void parse_module(const json &v, const std::string &path) {
    if (!require_object(v, path))
      return;
    known_keys(v, path, {"name", "behavior", "ports"});
    ModuleDecl m;
    auto name = name_field(v, path);
    bool ok = name.has_value();
    std::optional<Behavior> behavior;
    if (!v.contains("behavior")) {
      error("E101", path, "missing required field 'behavior'");
      ok = false;
    } else {
      behavior = parse_behavior(v["behavior"], sub(path, "behavior"));
      ok = ok && behavior;
    }
    if (const json *ports = member(v, path, "ports", json::value_t::array, true)) {
      std::set<std::string> seen;
      for (std::size_t i = 0; i < ports->size(); ++i) {
        std::string ppath = at(sub(path, "ports"), i);
        auto port = parse_port((*ports)[i], ppath);
        if (!port) {
          ok = false;
          continue;
        }
        if (!seen.insert(port->name).second) {
          error("E103", sub(ppath, "name"), "duplicate port '" + port->name + "'");
          ok = false;
          continue;
        }
        m.ports.push_back(std::move(*port));
      }
    } else {
      ok = false;
    }
    if (name && (desc_.find_module(*name) || bad_modules_.count(*name))) {
      error("E103", sub(path, "name"), "duplicate module '" + *name + "'");
      return;
    }
    if (!ok) {
      if (name)
        bad_modules_.insert(*name);
      return;
    }
    m.name = *name;
    m.behavior = *behavior;
    check_behavior_shape(m, path);
    desc_.modules.push_back(std::move(m));
  }

  void parse_instance(const json &v, const std::string &path) {
    if (!require_object(v, path))
      return;
    known_keys(v, path, {"name", "module", "clock"});
    auto name = name_field(v, path);
    const json *mod = member(v, path, "module", json::value_t::string, true);
    const json *clk = member(v, path, "clock", json::value_t::string, true);
    bool ok = name && mod;
    if (mod && !desc_.find_module(mod->get<std::string>())) {
      if (!bad_modules_.count(mod->get<std::string>()))
        error("E102", sub(path, "module"), "unknown module '" + mod->get<std::string>() + "'");
      ok = false;
    }
    if (clk && !desc_.find_clock(clk->get<std::string>()) &&
        !bad_clocks_.count(clk->get<std::string>())) {
      error("E102", sub(path, "clock"),
            "unknown clock domain '" + clk->get<std::string>() + "'");
    }
    if (name && (desc_.find_instance(*name) || bad_instances_.count(*name))) {
      error("E103", sub(path, "name"), "duplicate instance '" + *name + "'");
      return;
    }
    // A bad clock still leaves the instance resolvable so later references
    // to it do not cascade into extra diagnostics.
    if (ok)
      desc_.instances.push_back({*name, mod->get<std::string>(), clk ? clk->get<std::string>() : ""});
    else if (name)
      bad_instances_.insert(*name);
  }

  std::optional<PortRef> port_ref(const json &v, const std::string &path, const char *key,
                                  Direction want) {
    const json *s = member(v, path, key, json::value_t::string, true);
    if (!s)
      return std::nullopt;
    std::string text = s->get<std::string>();
    auto dot = text.find('.');
    if (dot == std::string::npos || text.find('.', dot + 1) != std::string::npos) {
      error("E101", sub(path, key), "port reference must be 'instance.port', got '" + text + "'");
      return std::nullopt;
    }
    PortRef ref{text.substr(0, dot), text.substr(dot + 1)};
    if (!desc_.find_instance(ref.instance)) {
      if (!bad_instances_.count(ref.instance))
        error("E102", sub(path, key), "unknown instance '" + ref.instance + "'");
      return std::nullopt;
    }
    const PortDecl *port = desc_.find_port(ref);
    if (!port) {
      error("E102", sub(path, key), "unknown port '" + text + "'");
      return std::nullopt;
    }
    if (port->direction != want) {
      error("E108", sub(path, key),
            "'" + text + "' is an " + std::string(to_string(port->direction)) +
                " port; expected " + std::string(to_string(want)));
      return std::nullopt;
    }
    return ref;
  }

  void parse_connection(const json &v, const std::string &path) {
    if (!require_object(v, path))
      return;
    known_keys(v, path, {"from", "to", "buffer_stages", "monitored", "fifo_depth"});
    Connection c;
    auto from = port_ref(v, path, "from", Direction::Out);
    auto to = port_ref(v, path, "to", Direction::In);
    bool ok = from && to;
    if (v.contains("buffer_stages")) {
      auto s = int_field(v, path, "buffer_stages", true, 0, 4096);
      ok = ok && s;
      c.buffer_stages = static_cast<std::uint32_t>(s.value_or(0));
    }
    if (v.contains("fifo_depth")) {
      auto d = int_field(v, path, "fifo_depth", true, 1, 1 << 16);
      ok = ok && d;
      c.fifo_depth = static_cast<std::uint32_t>(d.value_or(kDefaultFifoDepth));
    }
    if (v.contains("monitored")) {
      const json *m = member(v, path, "monitored", json::value_t::boolean, true);
      ok = ok && m;
      c.monitored = m && m->get<bool>();
    }
    if (!ok)
      return;
    c.from = *from;
    c.to = *to;
    desc_.connections.push_back(c);
  }

  void parse_service(const json &v, const std::string &path) {
    if (!require_object(v, path))
      return;
    known_keys(v, path, {"name", "kind", "out_width", "clock"});
    ServiceDecl s;
    auto name = name_field(v, path);
    const json *kind = member(v, path, "kind", json::value_t::string, true);
    bool ok = name && kind;
    if (kind) {
      std::string k = kind->get<std::string>();
      if (k == "host_comm")
        s.kind = ServiceKind::HostComm;
      else if (k == "telemetry")
        s.kind = ServiceKind::Telemetry;
      else if (k == "assertion")
        s.kind = ServiceKind::Assertion;
      else {
        error("E101", sub(path, "kind"), "unknown service kind '" + k + "'");
        ok = false;
      }
    }
    if (ok && s.kind == ServiceKind::Telemetry) {
      auto w = int_field(v, path, "out_width", true, 1, 1 << 16);
      ok = ok && w;
      s.out_width = static_cast<std::uint32_t>(w.value_or(0));
    } else if (v.contains("out_width")) {
      error("E101", sub(path, "out_width"), "out_width applies to telemetry services only");
      ok = false;
    }
    if (const json *clk = member(v, path, "clock", json::value_t::string, false)) {
      s.clock = clk->get<std::string>();
      if (!desc_.find_clock(s.clock)) {
        if (!bad_clocks_.count(s.clock))
          error("E102", sub(path, "clock"), "unknown clock domain '" + s.clock + "'");
        ok = false;
      }
    }
    if (name && (desc_.find_service(*name) || bad_services_.count(*name))) {
      error("E103", sub(path, "name"), "duplicate service '" + *name + "'");
      return;
    }
    if (!ok) {
      if (name)
        bad_services_.insert(*name);
      return;
    }
    s.name = *name;
    desc_.services.push_back(s);
  }

  void parse_binding(const json &v, const std::string &path) {
    if (!require_object(v, path))
      return;
    known_keys(v, path, {"instance", "port", "service"});
    const json *inst = member(v, path, "instance", json::value_t::string, true);
    const json *port = member(v, path, "port", json::value_t::string, true);
    const json *svc = member(v, path, "service", json::value_t::string, true);
    if (!inst || !port || !svc)
      return;
    ServiceBinding b{inst->get<std::string>(), port->get<std::string>(), svc->get<std::string>()};
    bool ok = true;
    if (!desc_.find_instance(b.instance)) {
      if (!bad_instances_.count(b.instance))
        error("E102", sub(path, "instance"), "unknown instance '" + b.instance + "'");
      ok = false;
    } else if (!desc_.find_port({b.instance, b.port})) {
      error("E102", sub(path, "port"), "unknown port '" + b.instance + "." + b.port + "'");
      ok = false;
    }
    if (!desc_.find_service(b.service)) {
      if (!bad_services_.count(b.service))
        error("E102", sub(path, "service"), "unknown service '" + b.service + "'");
      ok = false;
    }
    if (ok)
      desc_.bindings.push_back(std::move(b));
  }

  std::string_view text_;
  std::string file_;
  SystemDesc desc_;
  std::vector<Diagnostic> diags_;
  // Names that were declared but rejected. References to them are not
  // reported again, the declaration already carries the diagnostic.
  std::set<std::string> bad_clocks_, bad_modules_, bad_instances_, bad_services_;
};

} // namespace

ParseResult parse_system(std::string_view text, const std::string &file) {
  return SystemParser(text, file).run();
}

} // namespace esic
