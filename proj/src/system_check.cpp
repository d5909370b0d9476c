//===- system_check.cpp - Static design checks ----------------------------===//

#include "esic/system.hpp"

#include <map>

namespace esic {

namespace {

class Checker {
public:
  explicit Checker(const SystemDesc &d) : d_(d) {}

  std::vector<Diagnostic> run() {
    check_instances();
    check_connections();
    check_services();
    check_drivers();
    return std::move(diags_);
  }

private:
  int line_for(std::string path) const {
    while (!path.empty()) {
      auto it = d_.lines.find(path);
      if (it != d_.lines.end())
        return it->second;
      auto cut = path.find_last_of(".[");
      path.resize(cut == std::string::npos ? 0 : cut);
    }
    return 0;
  }

  void error(const char *code, const std::string &path, const std::string &msg) {
    diags_.push_back({Severity::Error, code, d_.source_file, line_for(path), path, msg});
  }

  static std::string at(const char *list, std::size_t i) {
    return std::string(list) + "[" + std::to_string(i) + "]";
  }

  void check_instances() {
    for (std::size_t i = 0; i < d_.instances.size(); ++i) {
      const auto &inst = d_.instances[i];
      if (!d_.find_clock(inst.clock))
        error("E006", at("instances", i) + ".clock",
              "instance '" + inst.name + "' uses unknown clock domain '" + inst.clock + "'");
      const ModuleDecl *mod = d_.find_module(inst.module);
      if (!mod)
        error("E102", at("instances", i) + ".module",
              "instance '" + inst.name + "' uses unknown module '" + inst.module + "'");
      else if (mod->behavior.kind == BehaviorKind::HostEndpoint)
        has_host_endpoint_ = at("instances", i);
    }
    for (std::size_t i = 0; i < d_.services.size(); ++i)
      if (!d_.services[i].clock.empty() && !d_.find_clock(d_.services[i].clock))
        error("E006", at("services", i) + ".clock",
              "service '" + d_.services[i].name + "' uses unknown clock domain '" +
                  d_.services[i].clock + "'");
  }

  const PortDecl *resolve(const PortRef &ref, const std::string &path, Direction want) {
    const PortDecl *port = d_.find_port(ref);
    if (!port) {
      error("E102", path, "unknown port '" + ref.str() + "'");
      return nullptr;
    }
    if (port->direction != want) {
      error("E108", path, "'" + ref.str() + "' has the wrong direction");
      return nullptr;
    }
    return port;
  }

  void check_connections() {
    for (std::size_t i = 0; i < d_.connections.size(); ++i) {
      const auto &c = d_.connections[i];
      std::string path = at("connections", i);
      const PortDecl *from = resolve(c.from, path + ".from", Direction::Out);
      const PortDecl *to = resolve(c.to, path + ".to", Direction::In);
      if (from)
        drivers_out_[c.from].push_back(path + ".from");
      if (to)
        drivers_in_[c.to].push_back(path + ".to");
      if (from && to && !type_equal(from->type, to->type))
        error("E001", path,
              "type mismatch: " + c.from.str() + " is " + print_type(from->type) + " but " +
                  c.to.str() + " is " + print_type(to->type));
    }
  }

  void check_services() {
    bool host_service = false;
    for (const auto &s : d_.services)
      host_service = host_service || s.kind == ServiceKind::HostComm;
    if (!has_host_endpoint_.empty() && !host_service)
      error("E005", has_host_endpoint_,
            "host_endpoint instances require a host_comm service");

    for (std::size_t i = 0; i < d_.bindings.size(); ++i) {
      const auto &b = d_.bindings[i];
      std::string path = at("bindings", i);
      PortRef ref{b.instance, b.port};
      const ServiceDecl *svc = d_.find_service(b.service);
      if (!svc) {
        error("E005", path + ".service", "binding references undeclared service '" +
                                             b.service + "'");
        continue;
      }
      const PortDecl *port = d_.find_port(ref);
      if (!port) {
        error("E102", path + ".port", "unknown port '" + ref.str() + "'");
        continue;
      }
      const Instance *inst = d_.find_instance(b.instance);
      const ModuleDecl *mod = inst ? d_.find_module(inst->module) : nullptr;
      if (mod && mod->behavior.kind == BehaviorKind::HostEndpoint) {
        error("E005", path, "ports of host_endpoint instances are already host-visible");
        continue;
      }
      switch (svc->kind) {
      case ServiceKind::HostComm:
        break;
      case ServiceKind::Telemetry:
        if (port->direction != Direction::Out || port->type.is_list()) {
          error("E005", path, "telemetry clients must be fixed-size output ports; '" +
                                  ref.str() + "' is " + std::string(to_string(port->direction)) +
                                  " " + print_type(port->type));
          continue;
        }
        break;
      case ServiceKind::Assertion:
        if (port->direction != Direction::Out || port->type != EsiType::uint(32)) {
          error("E005", path, "assertion clients must be uint32 output ports; '" +
                                  ref.str() + "' is " + std::string(to_string(port->direction)) +
                                  " " + print_type(port->type));
          continue;
        }
        break;
      }
      (port->direction == Direction::Out ? drivers_out_ : drivers_in_)[ref].push_back(path);
    }
  }

  void check_drivers() {
    for (std::size_t i = 0; i < d_.instances.size(); ++i) {
      const auto &inst = d_.instances[i];
      const ModuleDecl *mod = d_.find_module(inst.module);
      if (!mod)
        continue;
      for (const auto &port : mod->ports) {
        PortRef ref{inst.name, port.name};
        if (port.direction == Direction::In) {
          auto it = drivers_in_.find(ref);
          std::size_t n = it == drivers_in_.end() ? 0 : it->second.size();
          if (n == 0)
            error("E002", at("instances", i), "input port '" + ref.str() + "' is not driven");
          for (std::size_t k = 1; k < n; ++k)
            error("E003", it->second[k], "input port '" + ref.str() + "' is driven " +
                                             std::to_string(n) + " times");
        } else {
          auto it = drivers_out_.find(ref);
          std::size_t n = it == drivers_out_.end() ? 0 : it->second.size();
          for (std::size_t k = 1; k < n; ++k)
            error("E004", it->second[k], "output port '" + ref.str() + "' drives " +
                                             std::to_string(n) +
                                             " sinks; fan-out needs an explicit fork");
        }
      }
    }
  }

  const SystemDesc &d_;
  std::vector<Diagnostic> diags_;
  std::map<PortRef, std::vector<std::string>> drivers_in_, drivers_out_;
  std::string has_host_endpoint_;
};

} // namespace

std::vector<Diagnostic> check(const SystemDesc &desc) { return Checker(desc).run(); }

} // namespace esic
