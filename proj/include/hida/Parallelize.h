//===- Parallelize.h - Connection analysis and unroll DSE -----*- C++ -*-===//
//
// Connection-aware parallelization: derives permutation/scaling maps between
// connected nodes, orders nodes by connectivity, sizes parallel factors by
// intensity, explores the divisor lattice of unroll vectors per node, and
// finally partitions arrays to feed the chosen parallelism.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "hida/Diagnostics.h"
#include "hida/Estimator.h"
#include "hida/IR.h"
#include "hida/Rational.h"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hida {

// One producer/consumer pair communicating through a buffer. The maps align
// loop levels of the two nodes: permS2T[t] names the source loop feeding
// target loop t, and scaleS2T[s] converts a source unroll factor into the
// matching target one (stride ratio). T2S is the inverse view. A connection
// whose accesses defy a per-dimension single-loop match is kept with empty
// maps (affine = false) and imposes no constraints.
struct Connection {
  std::string source;
  std::string target;
  std::string buffer;
  bool affine = true;
  std::vector<std::optional<std::size_t>> permS2T; // indexed by target loop
  std::vector<std::optional<std::size_t>> permT2S; // indexed by source loop
  std::vector<std::optional<Rational>> scaleS2T;   // indexed by source loop
  std::vector<std::optional<Rational>> scaleT2S;   // indexed by target loop
};

struct ConnectionAnalysis {
  std::vector<Connection> connections;
  std::map<std::string, std::int64_t> intensities;
  std::map<std::string, int> connectionCount;
};

ConnectionAnalysis analyzeConnections(const Program &p,
                                      DiagList *diags = nullptr);

// DSE order: descending connection count, descending intensity, stable.
std::vector<std::string> sortNodes(const Program &p,
                                   const ConnectionAnalysis &analysis);

// Per-node parallel factor, proportional to intensity when intensityAware,
// snapped down to the nearest product of trip-count divisors (reduction
// loops excluded). The most intense node receives maxFactor itself.
std::map<std::string, std::int64_t>
generateParallelFactors(const Program &p, const ConnectionAnalysis &analysis,
                        std::int64_t maxFactor, bool intensityAware);

struct ParallelizeOptions {
  std::int64_t maxFactor = 1;
  bool intensityAware = true;
  bool connectionAware = true;
  bool unrollReductions = false; // reduction loops stay at factor 1 otherwise
  CostModel costModel;
};

struct NodePlan {
  std::int64_t factor = 1;
  std::vector<std::int64_t> unroll; // loops in preorder
  // Constraint values imposed by earlier-planned neighbors, per loop.
  std::vector<std::vector<std::int64_t>> constraints;
};

struct ParallelPlan {
  std::vector<std::string> order;
  std::map<std::string, NodePlan> nodes;
};

// Plans every node in sort order. The chosen unroll vector minimizes
// estimated latency, then DSP, then prospective partition banks (summed over
// the global bank state when connectionAware, this node alone otherwise),
// then the spread between the busiest and laziest loop, and finally prefers
// the lexicographically greatest vector. Infeasible constraint sets fall
// back to all-ones with a diagnostic.
ParallelPlan planParallelization(const Program &p,
                                 const ParallelizeOptions &opts,
                                 DiagList *diags = nullptr);

// Stamps the plan's unroll factors onto the loops. Throws
// std::invalid_argument for unknown nodes or mismatched loop counts.
void applyPlan(Program &p, const ParallelPlan &plan);

ParallelPlan parallelize(Program &p, const ParallelizeOptions &opts,
                         DiagList *diags = nullptr);

// Sets per-dimension cyclic partitioning from the applied unroll factors:
// factor(dim) = max over accesses of unroll(indexing loop) x |stride|
// numerator, clamped to the extent with a warning.
void partitionArrays(Program &p, DiagList *diags = nullptr);

// Splits every loop whose trip count is divisible by (and larger than) the
// tile size into an outer trip/size loop and an inner size loop, rewriting
// accesses into two-term indices. Returns the number of loops split.
int tileLoops(Program &p, std::int64_t tileSize);

} // namespace hida
