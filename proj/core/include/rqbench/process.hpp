#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>

namespace rqbench {

struct CommandResult {
  int exit_code = 0;
  std::string output;  // stdout and stderr interleaved
  double wall_seconds = 0.0;
};

/// Runs `command` through /bin/sh and captures its output. The wall time
/// covers process start to exit.
CommandResult run_command(const std::string& command);

/// Replaces `{key}` occurrences for every key in `values`. Unknown braces
/// are left untouched so shell syntax survives.
std::string expand_template(std::string_view text,
                            const std::map<std::string, std::string>& values);

/// Quotes a path or argument for /bin/sh.
std::string shell_quote(std::string_view arg);

/// Runs fn(0..count-1) on up to `jobs` threads. The first exception thrown
/// by any task is rethrown after all workers stop.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace rqbench
