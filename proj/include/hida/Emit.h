//===- Emit.h - HLS-style C++ emission -------------------------*- C++ -*-===//
//
// Turns optimized structural IR into compilable C++: one function per node,
// a top function invoking them under a dataflow pragma, unroll and cyclic
// array-partition pragmas from the applied plan, and token channels as
// FIFO streams. Plain mode drops every pragma and all stream plumbing so the
// output compiles with any host compiler; the arithmetic in both modes
// follows the interpreter exactly (float ops round per operation, integer
// ops widen to 64 bits and truncate back per operator).
//
//===----------------------------------------------------------------------===//

#pragma once

#include "hida/IR.h"

#include <string>

namespace hida {

struct EmitOptions {
  bool plain = false; // no pragmas, no streams; portable host C++
};

struct EmitResult {
  std::string headerName; // <name>.h
  std::string sourceName; // <name>_top.cpp
  std::string header;
  std::string source;
  std::string topSymbol; // sanitized <name>_top
};

// Emits the program. Throws std::invalid_argument when the IR still contains
// functional ops (task/dispatch); run the lowering pipeline first. Output is
// a pure function of the IR: identical input produces identical bytes.
EmitResult emitCpp(const Program &p, const EmitOptions &opts = {});

} // namespace hida
