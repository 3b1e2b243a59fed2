#pragma once

#include <optional>
#include <string>

namespace acctune {

struct ProcessResult {
  int exit_code = -1;  // -1 when killed by a signal
  bool timed_out = false;
  std::string out;
  std::string err;
  double wall_seconds = 0.0;
};

/// Runs `command` through /bin/sh in its own process group. On timeout the
/// whole group is killed. Throws EnvironmentError if the shell cannot start.
ProcessResult run_shell(const std::string& command, std::optional<double> timeout_s = std::nullopt,
                        const std::string& workdir = {});

/// Single-quotes `s` for safe interpolation into a shell command.
std::string shell_quote(const std::string& s);

}  // namespace acctune
