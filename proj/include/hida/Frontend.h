//===- Frontend.h - Kernel language parser --------------------*- C++ -*-===//
//
// Parses the .hk kernel language into a functional-level Program:
//
//   array A[32][16] : float32 @ onchip;
//   for i in 0..32 { for k in 0..16 { A[i][k] = Ain[i][k] * 0.5; } }
//
// Loops are normalized on the way in (lower bound folded into access
// offsets), `+=` marks reductions, and subscripts must be affine in a single
// loop variable. See docs/lang.md for the full grammar.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "hida/IR.h"

#include <string>

namespace hida {

// Throws ParseError with line/column on malformed input.
Program parseKernel(const std::string &source, const std::string &name);

} // namespace hida
