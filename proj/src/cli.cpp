//===- cli.cpp - Subcommands of the esic driver ---------------------------===//

#include "esic/cli.hpp"
#include "esic/cosim.hpp"
#include "esic/error.hpp"
#include "esic/fabric.hpp"
#include "esic/sim.hpp"
#include "esic/system.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace esic {

namespace {

std::shared_ptr<spdlog::logger> make_logger() {
  auto logger = spdlog::get("esic");
  if (!logger)
    logger = spdlog::stderr_logger_mt("esic");
  logger->set_pattern("esic: %l: %v");
  auto level = spdlog::level::warn;
  if (const char *env = std::getenv("ESIC_LOG")) {
    std::string v = env;
    if (v == "error")
      level = spdlog::level::err;
    else if (v == "warn")
      level = spdlog::level::warn;
    else if (v == "info")
      level = spdlog::level::info;
    else if (v == "debug")
      level = spdlog::level::debug;
    else
      logger->warn("ignoring ESIC_LOG='{}'; expected error, warn, info or debug", v);
  }
  logger->set_level(level);
  return logger;
}

/// Raised inside commands to leave with a given status.
struct Exit {
  int status;
};

std::string read_input(const std::string &path, std::ostream &err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    err << path << ": error: cannot read file\n";
    throw Exit{kExitRuntime};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string &path, const std::string &text, std::ostream &err) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    err << path << ": error: cannot write file\n";
    throw Exit{kExitRuntime};
  }
}

/// Parses and checks; prints every diagnostic. Exits with status 1 when
/// any of them is an error.
SystemDesc load_design(const std::string &path, std::ostream &err, spdlog::logger &log) {
  auto text = read_input(path, err);
  auto parsed = parse_system(text, path);
  auto diags = parsed.diagnostics;
  if (parsed.desc) {
    auto more = check(*parsed.desc);
    diags.insert(diags.end(), more.begin(), more.end());
  }
  for (const auto &d : diags)
    err << format_diagnostic(d) << "\n";
  if (has_errors(diags))
    throw Exit{kExitInput};
  log.info("{}: design '{}' checked, {} instances, {} connections", path, parsed.desc->name,
           parsed.desc->instances.size(), parsed.desc->connections.size());
  return std::move(*parsed.desc);
}

struct Options {
  std::string file;
  std::string dot, out, trace, json;
  bool stats = false;
  std::uint64_t ticks = 1000;
  std::uint64_t seed = 0;
  double stall = 0.0;
  std::string report = "json";
  std::uint16_t port = kDefaultCosimPort;
  std::uint64_t ticks_per_iter = 1024;
};

int cmd_check(const Options &o, std::ostream &, std::ostream &err, spdlog::logger &log) {
  load_design(o.file, err, log);
  return kExitOk;
}

int cmd_elaborate(const Options &o, std::ostream &out, std::ostream &err,
                  spdlog::logger &log) {
  auto g = elaborate(load_design(o.file, err, log));
  log.info("elaborated {} nodes, {} edges", g.nodes.size(), g.edges.size());
  if (!o.dot.empty())
    write_output(o.dot, emit_dot(g), err);
  if (!o.out.empty())
    write_output(o.out, fabric_to_json(g).dump(2) + "\n", err);
  if (o.stats)
    out << format_stats(fabric_stats(g));
  if (o.dot.empty() && o.out.empty() && !o.stats)
    out << fabric_to_json(g).dump(2) << "\n";
  return kExitOk;
}

int cmd_sim(const Options &o, std::ostream &out, std::ostream &err, spdlog::logger &log) {
  auto g = elaborate(load_design(o.file, err, log));
  SimConfig cfg;
  cfg.seed = o.seed;
  cfg.max_ticks = o.ticks;
  cfg.stall_prob = o.stall;
  cfg.record_trace = !o.trace.empty();
  log.info("simulating {} ticks, seed {}, stall {}", o.ticks, o.seed, o.stall);
  auto result = run(g, cfg);
  if (!o.trace.empty())
    write_output(o.trace, trace_ndjson(result), err);
  if (o.report == "text")
    out << monitor_report_text(result);
  else
    out << monitor_report(result).dump(2) << "\n";
  return kExitOk;
}

int cmd_serve(const Options &o, std::ostream &out, std::ostream &err, spdlog::logger &log) {
  auto g = elaborate(load_design(o.file, err, log));
  ServeOptions opt;
  opt.port = o.port;
  opt.ticks_per_iter = o.ticks_per_iter;
  CosimServer server(g, SimConfig{}, opt);
  server.start();
  out << "serving " << g.design << " on " << opt.address << ":" << server.port() << std::endl;
  log.info("{} endpoints", g.endpoints().size());
  server.wait();
  log.info("shutdown requested");
  return kExitOk;
}

int cmd_schema(const Options &o, std::ostream &out, std::ostream &err, spdlog::logger &log) {
  auto g = elaborate(load_design(o.file, err, log));
  auto text = manifest_to_json(manifest(g)).dump(2) + "\n";
  if (o.json.empty())
    out << text;
  else
    write_output(o.json, text, err);
  return kExitOk;
}

int status_for(const Error &e) {
  switch (e.code()) {
  case ErrorCode::Io:
  case ErrorCode::Protocol:
  case ErrorCode::BehaviorViolation:
    return kExitRuntime;
  case ErrorCode::InvalidGraph:
    // A design that names a custom actor cannot run from the command line.
    return kExitRuntime;
  default:
    return kExitInput;
  }
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  auto log = make_logger();
  Options o;
  CLI::App app{"Elastic interconnect toolchain", "esic"};
  app.require_subcommand(1);

  auto *check = app.add_subcommand("check", "Parse and type-check a system description");
  check->add_option("file", o.file, "System description (JSON)")->required();

  auto *elab = app.add_subcommand("elaborate", "Lower a design to its fabric graph");
  elab->add_option("file", o.file, "System description (JSON)")->required();
  elab->add_option("--dot", o.dot, "Write Graphviz DOT to PATH");
  elab->add_flag("--stats", o.stats, "Print node counts and path statistics");
  elab->add_option("--out", o.out, "Write the fabric JSON to PATH");

  auto *sim = app.add_subcommand("sim", "Simulate the fabric and print the monitor report");
  sim->add_option("file", o.file, "System description (JSON)")->required();
  sim->add_option("--ticks", o.ticks, "Ticks to simulate")->check(CLI::PositiveNumber);
  sim->add_option("--seed", o.seed, "Stall schedule seed");
  sim->add_option("--stall", o.stall, "Per-port stall probability")->check(CLI::Range(0.0, 1.0));
  sim->add_option("--report", o.report, "Report format")
      ->check(CLI::IsMember({"json", "text"}));
  sim->add_option("--trace", o.trace, "Write the NDJSON trace to PATH");

  auto *serve = app.add_subcommand("serve", "Serve host endpoints over TCP");
  serve->add_option("file", o.file, "System description (JSON)")->required();
  serve->add_option("--port", o.port, "TCP port (0 picks a free one)");
  serve->add_option("--ticks-per-iter", o.ticks_per_iter, "Ticks per service iteration")
      ->check(CLI::PositiveNumber);

  auto *schema = app.add_subcommand("schema", "Export the endpoint manifest of a design");
  schema->add_option("file", o.file, "System description (JSON)")->required();
  schema->add_option("--json", o.json, "Write the manifest to PATH");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "esic: " << e.what() << "\nRun 'esic --help' for usage.\n";
    return kExitUsage;
  }

  try {
    if (check->parsed())
      return cmd_check(o, out, err, *log);
    if (elab->parsed())
      return cmd_elaborate(o, out, err, *log);
    if (sim->parsed())
      return cmd_sim(o, out, err, *log);
    if (serve->parsed())
      return cmd_serve(o, out, err, *log);
    return cmd_schema(o, out, err, *log);
  } catch (const Exit &e) {
    return e.status;
  } catch (const Error &e) {
    err << o.file << ": error: " << e.what() << "\n";
    return status_for(e);
  } catch (const std::exception &e) {
    err << "esic: " << e.what() << "\n";
    return kExitRuntime;
  }
}

} // namespace esic
