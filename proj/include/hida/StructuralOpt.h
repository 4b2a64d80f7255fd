//===- StructuralOpt.h - Schedule-level graph passes -----------*- C++ -*-===//
//
// Passes over the structural form: the node dataflow graph, the rewrite
// that leaves every buffer with a single producer node, and dataflow path
// balancing.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "hida/IR.h"

#include <string>
#include <vector>

namespace hida {

// Dataflow graph over the nodes of one schedule. An edge exists when a node
// writes a buffer that a later node reads; `level` is the longest path from
// any source, so producer levels are always less than consumer levels.
struct NodeGraph {
  struct Edge {
    int producer = 0;
    int consumer = 0;
    std::string buffer;
  };

  std::vector<const NodeOp *> nodes; // schedule order
  std::vector<Edge> edges;
  std::vector<int> levels;

  int indexOf(const std::string &nodeId) const;
};

NodeGraph buildNodeGraph(const ScheduleOp &schedule);

// Rewrites every schedule so that no buffer is written by more than one
// node. On-chip buffers get per-producer clones: each later producer writes
// a fresh copy of the buffer, prefixed with a whole-buffer copy when it
// reads the previous values, and every node it dominates switches to the
// clone. External buffers cannot be cloned (they are part of the memory
// interface), so all their producers collapse into one fused node at the
// first producer's position. Throws std::runtime_error if that fusion would
// reorder dependent nodes.
void eliminateMultiProducers(Program &p);

enum class BalanceMode { Onchip, SoftFifo };

struct BalanceOptions {
  BalanceMode mode = BalanceMode::Onchip;
};

// Equalizes path lengths through each schedule so every on-chip buffer is
// consumed exactly one level below its producer. Onchip mode inserts a chain
// of duplicate buffers with copy nodes; a consumer `g` levels away reads the
// g-th duplicate. SoftFifo mode instead demotes the buffer to external
// memory with `max gap + 2` frame slots and guards it with a broadcast token
// stream: one send at the end of the producer, one receive in front of every
// consumer.
void balancePaths(Program &p, const BalanceOptions &opts = {});

} // namespace hida
