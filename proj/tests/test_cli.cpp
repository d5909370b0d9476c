#include "esic/cli.hpp"
#include "esic/cosim.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace esic;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status;
  std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int status = run_cli(args, out, err);
  return {status, out.str(), err.str()};
}

std::string design(const char *name) {
  return (fs::path(ESIC_SOURCE_DIR) / "designs" / (std::string(name) + ".json")).string();
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh empty directory under the system temp directory.
fs::path scratch(const std::string &name) {
  auto dir = fs::temp_directory_path() / ("esic_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t entries(const fs::path &dir) {
  return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), {}));
}

} // namespace

TEST(Cli, CheckValidDesignIsSilent) {
  auto r = cli({"check", design("system")});
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "");
  EXPECT_EQ(r.err, "");
}

TEST(Cli, CheckTypeMismatchReportsE001) {
  auto r = cli({"check", design("type_mismatch")});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("error E001"), std::string::npos);
  EXPECT_NE(r.err.find("type_mismatch.json:"), std::string::npos);
  EXPECT_EQ(r.out, "");
}

TEST(Cli, UsageErrorsExitWith2) {
  EXPECT_EQ(cli({}).status, 2);
  EXPECT_EQ(cli({"frobnicate"}).status, 2);
  EXPECT_EQ(cli({"check"}).status, 2);
  EXPECT_EQ(cli({"sim", design("pipeline"), "--report", "xml"}).status, 2);
  EXPECT_EQ(cli({"sim", design("pipeline"), "--stall", "1.5"}).status, 2);
  EXPECT_EQ(cli({"sim", design("pipeline"), "--ticks", "0"}).status, 2);
  EXPECT_EQ(cli({"elaborate", design("pipeline"), "--bogus"}).status, 2);
}

TEST(Cli, HelpExitsWith0) {
  auto r = cli({"--help"});
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("elaborate"), std::string::npos);
  EXPECT_EQ(cli({"sim", "--help"}).status, 0);
}

TEST(Cli, MissingFileIsRuntimeFailure) {
  auto r = cli({"check", "/nonexistent/design.json"});
  EXPECT_EQ(r.status, 3);
  EXPECT_NE(r.err.find("cannot read"), std::string::npos);
}

TEST(Cli, SimIsByteIdenticalAcrossRuns) {
  auto dir = scratch("sim");
  auto a = cli({"sim", design("system"), "--ticks", "1000", "--seed", "7", "--report", "json",
                "--trace", (dir / "a.ndjson").string()});
  auto b = cli({"sim", design("system"), "--ticks", "1000", "--seed", "7", "--report", "json",
                "--trace", (dir / "b.ndjson").string()});
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_FALSE(slurp(dir / "a.ndjson").empty());
  EXPECT_EQ(slurp(dir / "a.ndjson"), slurp(dir / "b.ndjson"));
  auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["ticks"], 1000);
  auto c = cli({"sim", design("system"), "--ticks", "1000", "--seed", "8", "--stall", "0.3"});
  EXPECT_NE(a.out, c.out);
  fs::remove_all(dir);
}

TEST(Cli, SimTextReport) {
  auto r = cli({"sim", design("pipeline"), "--ticks", "50", "--report", "text"});
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out.rfind("design pipeline: 50 ticks", 0), 0u);
}

TEST(Cli, ElaborateWritesOnlyNamedPaths) {
  auto dir = scratch("elab");
  auto r = cli({"elaborate", design("system"), "--dot", (dir / "g.dot").string(), "--out",
                (dir / "g.json").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "");
  EXPECT_EQ(entries(dir), 2u);
  EXPECT_EQ(slurp(dir / "g.dot").rfind("digraph", 0), 0u);
  auto j = nlohmann::json::parse(slurp(dir / "g.json"));
  EXPECT_EQ(j["design"], "compress_encrypt");
  auto stats = cli({"elaborate", design("system"), "--stats"});
  EXPECT_NE(stats.out.find("max_path_stages:"), std::string::npos);
  EXPECT_EQ(entries(dir), 2u);
  auto plain = cli({"elaborate", design("pipeline")});
  EXPECT_EQ(nlohmann::json::parse(plain.out)["design"], "pipeline");
  fs::remove_all(dir);
}

TEST(Cli, SchemaExportsManifest) {
  auto r = cli({"schema", design("loopback")});
  ASSERT_EQ(r.status, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["endpoints"].size(), 2u);
  auto dir = scratch("schema");
  auto w = cli({"schema", design("loopback"), "--json", (dir / "m.json").string()});
  EXPECT_EQ(w.out, "");
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "m.json")), j);
  fs::remove_all(dir);
}

TEST(Cli, WriteFailureIsRuntimeFailure) {
  auto r = cli({"elaborate", design("pipeline"), "--out", "/nonexistent/dir/g.json"});
  EXPECT_EQ(r.status, 3);
}

TEST(CliBinary, LogLevelFromEnvironment) {
  std::string cmd = std::string("ESIC_LOG=info ") + ESIC_BIN + " check " + design("pipeline") + " 2>&1";
  FILE *p = ::popen(cmd.c_str(), "r");
  ASSERT_TRUE(p);
  std::string text;
  char buf[256];
  while (std::fgets(buf, sizeof buf, p))
    text += buf;
  EXPECT_EQ(::pclose(p), 0);
  EXPECT_NE(text.find("esic: info:"), std::string::npos) << text;
  cmd = std::string("ESIC_LOG=error ") + ESIC_BIN + " check " + design("pipeline") + " 2>&1";
  p = ::popen(cmd.c_str(), "r");
  text.clear();
  while (std::fgets(buf, sizeof buf, p))
    text += buf;
  ::pclose(p);
  EXPECT_EQ(text, "");
}

TEST(CliBinary, ServePrintsPortAndStopsOnShutdown) {
  std::string cmd = std::string(ESIC_BIN) + " serve " + design("loopback") + " --port 0";
  FILE *p = ::popen(cmd.c_str(), "r");
  ASSERT_TRUE(p);
  char buf[256];
  ASSERT_TRUE(std::fgets(buf, sizeof buf, p));
  std::string line = buf;
  auto colon = line.rfind(':');
  ASSERT_NE(colon, std::string::npos) << line;
  auto port = static_cast<std::uint16_t>(std::stoi(line.substr(colon + 1)));
  {
    CosimClient c("127.0.0.1", port);
    EXPECT_EQ(c.manifest().design, "loopback");
    c.shutdown();
  }
  EXPECT_EQ(::pclose(p), 0);
}
