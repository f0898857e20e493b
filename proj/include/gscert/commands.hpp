// SPDX-License-Identifier: Apache-2.0
#pragma once

// Command implementations behind the C API and the CLI. Each writes its
// outputs into `out_dir` and returns a process exit code:
//   0 success, 2 config/IO/precondition error, 3 certification failure,
//   4 verification failure, 1 any other error.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "gscert/error.hpp"

namespace gscert {

inline constexpr const char* kVersion = "1.0.0";

struct CommandOptions {
  std::string config_path;  // empty = built-in defaults
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;  // 0 = hardware concurrency
};

int exit_code_for(ErrorKind kind);

int cmd_render(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_certify(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_verify(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommandOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace gscert
