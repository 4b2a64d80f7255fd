//===- Serialize.h - Textual IR dump and load -----------------*- C++ -*-===//
//
// dump() is deterministic: equal programs produce byte-identical text.
// load() accepts exactly what dump() emits (plus arbitrary whitespace and
// comments) and reports malformed input with line/column positions.
// load(dump(p)) is structurally equal to p.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "hida/IR.h"

#include <string>

namespace hida {

std::string dump(const Program &p);
Program load(const std::string &text); // throws ParseError

// Shared printers, also used by the C++ emitter and reports.
std::string toString(const Access &a);
std::string toString(const DimIndex &d);
std::string exprToString(const Compute &c);

} // namespace hida
