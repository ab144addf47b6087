#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rqbench/error.hpp"

namespace rqbench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitManifest = 2;
inline constexpr int kExitProcess = 3;
inline constexpr int kExitData = 4;

int exit_code_for(ErrorKind kind);

/// One JSON object on a single line, e.g.
/// {"error":"manifest","field":"codec[0].qp_min","message":"..."}.
std::string error_line(const Error& error);

/// Runs one invocation (args excludes the program name) and returns the
/// exit status. Errors are reported on `err`, never thrown.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rqbench::cli
