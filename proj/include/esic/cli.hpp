//===- cli.hpp - The esic command-line driver -------------------*- C++ -*-===//
//
// Exit status: 0 success, 1 diagnostics or errors in the input design,
// 2 usage error, 3 runtime failure (I/O, protocol, simulation).
//
//===----------------------------------------------------------------------===//

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace esic {

enum ExitStatus : int { kExitOk = 0, kExitInput = 1, kExitUsage = 2, kExitRuntime = 3 };

/// Runs one command. `args` excludes the program name. Regular output goes
/// to `out`, diagnostics and errors to `err`; log records go to standard
/// error at the level named by ESIC_LOG (error, warn, info, debug).
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace esic
