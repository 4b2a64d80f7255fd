//===- Diagnostics.h - Diagnostic records and parse errors ----*- C++ -*-===//

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hida {

enum class Severity { Error, Warning };

// A single finding from verification or analysis. `path` names the offending
// op as a breadcrumb trail, e.g. "top/schedule/node[n1]/loop[i]".
struct Diag {
  Severity severity = Severity::Error;
  std::string path;
  std::string message;
};

using DiagList = std::vector<Diag>;

inline bool hasErrors(const DiagList &diags) {
  for (const Diag &d : diags)
    if (d.severity == Severity::Error)
      return true;
  return false;
}

inline std::string toString(const Diag &d) {
  std::string s = d.severity == Severity::Error ? "error: " : "warning: ";
  if (!d.path.empty())
    s += d.path + ": ";
  s += d.message;
  return s;
}

// Thrown by the kernel frontend and the IR loader on malformed input.
class ParseError : public std::runtime_error {
public:
  ParseError(int line, int col, const std::string &msg)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) +
                           ": " + msg),
        line(line), col(col) {}

  int line;
  int col;
};

// Thrown by the interpreter on out-of-bounds accesses, missing inputs under
// the error policy, division by zero, or token-order violations.
class InterpError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace hida
