//===- Interp.h - Reference interpreter -----------------------*- C++ -*-===//
//
// Executes a Program at either level with sequential semantics. Float32
// arrays round after every operation exactly like the emitted C++ (float
// arithmetic, same association), so transformed programs can be compared
// bit-for-bit or within a few ulp. Token receives check that the matching
// send already executed, turning schedule-order bugs into hard errors.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "hida/IR.h"

#include <cstdint>
#include <map>
#include <vector>

namespace hida {

struct InterpOptions {
  // Reading an array that was neither provided as input nor written yet:
  // zero-fill (default) or raise InterpError.
  bool zeroFillUninitialized = true;
};

struct InterpResult {
  // Final contents of arrays marked output, flattened row-major.
  std::map<std::string, std::vector<double>> outputs;
  // Final contents of every array, for debugging and golden tests.
  std::map<std::string, std::vector<double>> arrays;
};

// Throws InterpError on out-of-bounds accesses, integer division by zero,
// token-order violations, or uninitialized reads under the error policy.
InterpResult interpret(const Program &p,
                       const std::map<std::string, std::vector<double>> &inputs,
                       const InterpOptions &opts = {});

// Deterministic random inputs for every pure-input array (external, never
// written): floats uniform in [-1, 1), ints uniform in [-100, 100].
std::map<std::string, std::vector<double>> seededInputs(const Program &p,
                                                        std::uint64_t seed);

} // namespace hida
