//===- Corpus.h - Built-in kernel programs --------------------*- C++ -*-===//
//
// Small kernels exercising every pass: on/off-chip placement, reductions,
// strided and offset accesses, diamonds, and multi-producer patterns. The
// same sources are committed under kernels/ for CLI use; a test keeps the
// two in sync.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "hida/IR.h"

#include <string>
#include <vector>

namespace hida {

struct CorpusEntry {
  std::string name;
  std::string source;
};

const std::vector<CorpusEntry> &corpus();

// Parsed form of one corpus entry; throws std::out_of_range on unknown name.
Program corpusProgram(const std::string &name);

} // namespace hida
