// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace gscert {

enum class ErrorKind {
  structure,      // mismatched shapes, block counts, indices
  numeric,        // non-finite values, singular covariance, divergence
  precondition,   // caller violated an operation's precondition
  certification,  // a certified constant is missing or degenerate
  verification,   // an empirical check failed
  io,             // unreadable/unwritable files
  config,         // malformed configuration or scene document
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace gscert
