//===- TestUtil.h - Shared helpers for the test binaries -------*- C++ -*-===//

#pragma once

#include "hida/Corpus.h"
#include "hida/FunctionalOpt.h"
#include "hida/IR.h"
#include "hida/Interp.h"
#include "hida/Lowering.h"
#include "hida/StructuralOpt.h"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>

namespace hida::test {

// Corpus program taken through construct / (optional) fuse / lower /
// eliminate, i.e. into single-producer structural form.
inline Program structuralOf(const std::string &name, bool fuse = false) {
  Program p = corpusProgram(name);
  constructDataflow(p);
  if (fuse) {
    fuseTasks(p);
    simplifyHierarchy(p);
  }
  lowerToStructural(p);
  eliminateMultiProducers(p);
  return p;
}

inline std::int64_t ulpDistance(float a, float b) {
  if (a == b)
    return 0;
  if (std::isnan(a) || std::isnan(b))
    return std::numeric_limits<std::int64_t>::max();
  std::int32_t ia, ib;
  std::memcpy(&ia, &a, 4);
  std::memcpy(&ib, &b, 4);
  // Map the sign-magnitude float order onto a monotonic integer line.
  if (ia < 0)
    ia = std::int32_t(0x80000000u) - ia;
  if (ib < 0)
    ib = std::int32_t(0x80000000u) - ib;
  return std::llabs(std::int64_t(ia) - std::int64_t(ib));
}

// Interpreter outputs agree: bit-exact for int arrays, <= tolUlp for float.
inline bool outputsAgree(const Program &p, const InterpResult &a,
                         const InterpResult &b, std::int64_t tolUlp = 4) {
  if (a.outputs.size() != b.outputs.size())
    return false;
  for (const auto &[name, va] : a.outputs) {
    auto it = b.outputs.find(name);
    if (it == b.outputs.end() || it->second.size() != va.size())
      return false;
    const BufferSpec *spec = p.findArray(name);
    bool isInt = spec && spec->elem == ElemType::Int32;
    for (std::size_t i = 0; i < va.size(); ++i) {
      if (isInt) {
        if (va[i] != it->second[i])
          return false;
      } else if (ulpDistance(float(va[i]), float(it->second[i])) > tolUlp) {
        return false;
      }
    }
  }
  return true;
}

inline std::int64_t totalBanks(const Program &p) {
  std::int64_t total = 0;
  for (const BufferSpec &a : p.arrays)
    total += a.banks();
  return total;
}

} // namespace hida::test
