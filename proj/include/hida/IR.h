//===- IR.h - Two-level hierarchical dataflow IR --------------*- C++ -*-===//
//
// One op set covers both abstraction levels:
//
//  * Functional level: Task / Dispatch are transparent containers produced
//    from the parsed loop nests. They may reference any buffer in scope.
//  * Structural level: Node / Schedule are isolated. A node touches only the
//    buffers it declares as inputs plus buffers allocated in its own body,
//    and carries a validated effect (RO / WO / RW) per input.
//
// Loops are normalized at construction: lower bound 0, step 1. Original
// bounds are folded into access strides and offsets, so a dimension index is
// an affine form  sum_t(stride_t * iv_t) + offset  with rational strides
// stored as reduced fractions.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "hida/Diagnostics.h"
#include "hida/Rational.h"

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace hida {

enum class ElemType { Int32, Float32 };
enum class Placement { Onchip, External };
enum class PartitionKind { None, Cyclic, Block };
enum class Effect { RO, WO, RW };

const char *toString(ElemType t);
const char *toString(Placement p);
const char *toString(PartitionKind k);
const char *toString(Effect e);

struct DimPartition {
  PartitionKind kind = PartitionKind::None;
  std::int64_t factor = 1;

  friend bool operator==(const DimPartition &, const DimPartition &) = default;
};

// Storage record for one array. Parsed declarations start unpartitioned with
// depth 1; lowering raises depth to 2 for buffers crossing node boundaries,
// and path balancing in soft-FIFO mode turns a buffer into an external
// rotating store by setting depth to the slot count.
struct BufferSpec {
  std::string id;
  std::vector<std::int64_t> shape;
  ElemType elem = ElemType::Float32;
  Placement placement = Placement::Onchip;
  std::vector<DimPartition> partition; // one entry per shape dim
  std::int64_t depth = 1;
  bool output = false; // external and written by the program

  std::int64_t elementCount() const {
    std::int64_t n = 1;
    for (std::int64_t e : shape)
      n *= e;
    return n;
  }
  std::int64_t banks() const {
    std::int64_t n = 1;
    for (const DimPartition &p : partition)
      n *= p.factor;
    return n;
  }

  friend bool operator==(const BufferSpec &, const BufferSpec &) = default;
};

// Token channel connecting one producer to its gated consumers.
struct StreamSpec {
  std::string id;
  std::int64_t depth = 1;

  friend bool operator==(const StreamSpec &, const StreamSpec &) = default;
};

//===----------------------------------------------------------------------===//
// Accesses and expressions
//===----------------------------------------------------------------------===//

struct AccessTerm {
  std::string iv;
  Rational stride{1};

  friend bool operator==(const AccessTerm &, const AccessTerm &) = default;
};

struct DimIndex {
  std::vector<AccessTerm> terms; // empty = constant index
  std::int64_t offset = 0;

  friend bool operator==(const DimIndex &, const DimIndex &) = default;
};

struct Access {
  std::string array;
  std::vector<DimIndex> index;

  friend bool operator==(const Access &, const Access &) = default;
};

enum class ExprKind { Const, Read, Add, Sub, Mul, Div };

// Expression trees are kept in a flat arena inside each Compute so ops stay
// value types. `read` indexes Compute::reads, `lhs`/`rhs` index the arena.
// The root is the last node.
struct ExprNode {
  ExprKind kind = ExprKind::Const;
  double value = 0;
  int read = -1;
  int lhs = -1;
  int rhs = -1;

  friend bool operator==(const ExprNode &, const ExprNode &) = default;
};

struct Op;

struct Region {
  std::vector<Op> ops;

  friend bool operator==(const Region &, const Region &);
};

//===----------------------------------------------------------------------===//
// Ops
//===----------------------------------------------------------------------===//

struct Loop {
  std::string iv;
  std::int64_t trip = 0;
  std::int64_t unroll = 1;
  bool reduction = false; // iv absent from the write of an enclosed accumulate
  Region body;

  friend bool operator==(const Loop &, const Loop &) = default;
};

// One statement: target (=|+=) expr. Reads/opcount are derived views.
struct Compute {
  Access target;
  bool accumulate = false;
  std::vector<Access> reads;
  std::vector<ExprNode> expr;

  // Number of arithmetic operators in the rhs as written. The accumulation
  // add of `+=` is not an rhs operator and is not counted.
  int opcount() const {
    int n = 0;
    for (const ExprNode &e : expr)
      if (e.kind != ExprKind::Const && e.kind != ExprKind::Read)
        ++n;
    return n;
  }

  friend bool operator==(const Compute &, const Compute &) = default;
};

struct TaskOp {
  Region body;

  friend bool operator==(const TaskOp &, const TaskOp &) = default;
};

struct DispatchOp {
  Region body; // tasks only

  friend bool operator==(const DispatchOp &, const DispatchOp &) = default;
};

struct NodeInput {
  std::string buffer;
  Effect effect = Effect::RO;

  friend bool operator==(const NodeInput &, const NodeInput &) = default;
};

struct NodeOp {
  std::string id;
  std::vector<NodeInput> inputs;
  std::vector<double> params;
  Region body;

  friend bool operator==(const NodeOp &, const NodeOp &) = default;
};

struct ScheduleOp {
  Region body; // allocs and nodes only

  friend bool operator==(const ScheduleOp &, const ScheduleOp &) = default;
};

struct AllocOp {
  std::string buffer; // id into Program::arrays

  friend bool operator==(const AllocOp &, const AllocOp &) = default;
};

struct CopyOp {
  std::string src;
  std::string dst; // same shape and elem type

  friend bool operator==(const CopyOp &, const CopyOp &) = default;
};

struct TokenSendOp {
  std::string chan;

  friend bool operator==(const TokenSendOp &, const TokenSendOp &) = default;
};

struct TokenRecvOp {
  std::string chan;

  friend bool operator==(const TokenRecvOp &, const TokenRecvOp &) = default;
};

using OpVariant = std::variant<Loop, Compute, TaskOp, DispatchOp, NodeOp,
                               ScheduleOp, AllocOp, CopyOp, TokenSendOp,
                               TokenRecvOp>;

struct Op {
  OpVariant v;

  template <typename T> bool is() const {
    return std::holds_alternative<T>(v);
  }
  template <typename T> T &as() { return std::get<T>(v); }
  template <typename T> const T &as() const { return std::get<T>(v); }

  friend bool operator==(const Op &, const Op &);
};

inline bool operator==(const Region &a, const Region &b) {
  return a.ops == b.ops;
}
inline bool operator==(const Op &a, const Op &b) { return a.v == b.v; }

struct Program {
  std::string name;
  std::vector<BufferSpec> arrays;
  std::vector<StreamSpec> streams;
  Region top;

  BufferSpec *findArray(const std::string &id);
  const BufferSpec *findArray(const std::string &id) const;

  friend bool operator==(const Program &, const Program &) = default;
};

//===----------------------------------------------------------------------===//
// Traversal and analysis helpers
//===----------------------------------------------------------------------===//

// Regions owned by an op, if any.
std::vector<Region *> subRegions(Op &op);
std::vector<const Region *> subRegions(const Op &op);

// Walk every op in pre-order, calling fn(op, path). Path elements name the
// enclosing ops, for diagnostics.
void walk(const Region &r, const std::string &path,
          const std::function<void(const Op &, const std::string &)> &fn);
void walk(Region &r, const std::function<void(Op &)> &fn);

// All read / written accesses appearing under an op or region, in textual
// order. Copy ops contribute whole-buffer accesses; token ops contribute
// nothing.
struct AccessSummary {
  std::vector<Access> reads;
  std::vector<Access> writes;
};
AccessSummary collectAccesses(const Region &r);
AccessSummary collectAccesses(const Op &op);

// Buffer ids referenced (read or written) under a region, in first-use order.
std::vector<std::string> referencedBuffers(const Region &r);

// Effect over `buffer` implied by the accesses in `r`: RW if both read and
// written, WO if write-only, RO if read-only. Returns false if untouched.
bool computeEffect(const Region &r, const std::string &buffer, Effect &out);

// Sum over contained computes of opcount * product of enclosing trip counts
// (loops inside `op` only).
std::int64_t intensity(const Op &op);
std::int64_t intensity(const Region &r);

// Loops under `r` in pre-order; the canonical loop order for unroll vectors.
std::vector<Loop *> loopsInPreorder(Region &r);
std::vector<const Loop *> loopsInPreorder(const Region &r);

// Structural checks; empty list (or warnings only) means the program is
// well-formed. Checked between every pipeline stage.
DiagList verify(const Program &p);

} // namespace hida
