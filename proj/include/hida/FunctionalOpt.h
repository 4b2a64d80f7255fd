//===- FunctionalOpt.h - Task formation and fusion ------------*- C++ -*-===//
//
// Passes over the functional form: carving loop nests into dispatched tasks,
// fusing tasks that benefit from sharing a kernel, and collapsing redundant
// hierarchy afterwards.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "hida/IR.h"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hida {

// Pattern names understood by fuseTasks, in their default application order.
std::vector<std::string> defaultFusionPatterns();

struct FusionOptions {
  // Pattern-driven stage; empty disables it.
  std::vector<std::string> patterns = defaultFusionPatterns();
  // Intensity-driven pairing stage.
  bool pairing = true;
  // Replaces the built-in profitability rule (combined intensity must not
  // exceed the current per-task maximum in the dispatch). Called with the
  // candidate pair's combined intensity and that maximum.
  std::function<bool(std::int64_t combined, std::int64_t maxIntensity)>
      profitable;
};

// Wraps every op of a multi-loop region into its own task under a single
// dispatch. Runs post-order so inner nests are carved before outer ones;
// regions that already hold dispatches or fewer than two loops are left
// alone, which makes the pass idempotent.
void constructDataflow(Program &p);

// Two-stage fusion inside each dispatch. Stage one applies the requested
// patterns over a worklist until none matches. Stage two repeatedly merges
// the producer/consumer pair with the lowest combined intensity, stopping
// as soon as the best pair is unprofitable. Both stages only consider pairs
// connected through a buffer whose fusion preserves program order.
void fuseTasks(Program &p, const FusionOptions &opts = {});

// Collapses single-task dispatches, directly nested tasks, and empty
// containers, to a fixpoint.
void simplifyHierarchy(Program &p);

} // namespace hida
