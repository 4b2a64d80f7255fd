//===- Lowering.h - Functional to structural conversion -------*- C++ -*-===//

#pragma once

#include "hida/IR.h"

namespace hida {

// Converts the functional form into the structural one. Dispatches become
// schedules and each task becomes an isolated node that declares every
// buffer it touches together with its access effect. On-chip buffers shared
// between nodes are allocated in the enclosing schedule and double-buffered
// (depth 2) so adjacent pipeline frames can overlap; single-node buffers
// stay private allocs of that node at depth 1. Arrays no op references are
// dropped from the program. A program whose top level never formed a
// dispatch (a single nest, or loose ops) is wrapped into one schedule with
// one node per top-level op.
void lowerToStructural(Program &p);

} // namespace hida
