//===- IR.cpp - Traversal, effect analysis, and verification -------------===//

#include "hida/IR.h"

#include <algorithm>
#include <map>
#include <set>

namespace hida {

const char *toString(ElemType t) {
  return t == ElemType::Int32 ? "int32" : "float32";
}
const char *toString(Placement p) {
  return p == Placement::Onchip ? "onchip" : "external";
}
const char *toString(PartitionKind k) {
  switch (k) {
  case PartitionKind::None:
    return "none";
  case PartitionKind::Cyclic:
    return "cyclic";
  case PartitionKind::Block:
    return "block";
  }
  return "none";
}
const char *toString(Effect e) {
  switch (e) {
  case Effect::RO:
    return "RO";
  case Effect::WO:
    return "WO";
  case Effect::RW:
    return "RW";
  }
  return "RO";
}

BufferSpec *Program::findArray(const std::string &id) {
  for (BufferSpec &a : arrays)
    if (a.id == id)
      return &a;
  return nullptr;
}
const BufferSpec *Program::findArray(const std::string &id) const {
  for (const BufferSpec &a : arrays)
    if (a.id == id)
      return &a;
  return nullptr;
}

std::vector<Region *> subRegions(Op &op) {
  std::vector<Region *> rs;
  std::visit(
      [&](auto &o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Loop> || std::is_same_v<T, TaskOp> ||
                      std::is_same_v<T, DispatchOp> ||
                      std::is_same_v<T, NodeOp> ||
                      std::is_same_v<T, ScheduleOp>)
          rs.push_back(&o.body);
      },
      op.v);
  return rs;
}

std::vector<const Region *> subRegions(const Op &op) {
  std::vector<const Region *> rs;
  for (Region *r : subRegions(const_cast<Op &>(op)))
    rs.push_back(r);
  return rs;
}

static std::string opLabel(const Op &op) {
  return std::visit(
      [](const auto &o) -> std::string {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Loop>)
          return "loop[" + o.iv + "]";
        else if constexpr (std::is_same_v<T, Compute>)
          return "compute[" + o.target.array + "]";
        else if constexpr (std::is_same_v<T, TaskOp>)
          return "task";
        else if constexpr (std::is_same_v<T, DispatchOp>)
          return "dispatch";
        else if constexpr (std::is_same_v<T, NodeOp>)
          return "node[" + o.id + "]";
        else if constexpr (std::is_same_v<T, ScheduleOp>)
          return "schedule";
        else if constexpr (std::is_same_v<T, AllocOp>)
          return "alloc[" + o.buffer + "]";
        else if constexpr (std::is_same_v<T, CopyOp>)
          return "copy[" + o.src + "->" + o.dst + "]";
        else if constexpr (std::is_same_v<T, TokenSendOp>)
          return "send[" + o.chan + "]";
        else
          return "recv[" + o.chan + "]";
      },
      op.v);
}

void walk(const Region &r, const std::string &path,
          const std::function<void(const Op &, const std::string &)> &fn) {
  for (const Op &op : r.ops) {
    std::string p = path + "/" + opLabel(op);
    fn(op, p);
    for (const Region *sub : subRegions(op))
      walk(*sub, p, fn);
  }
}

void walk(Region &r, const std::function<void(Op &)> &fn) {
  for (Op &op : r.ops) {
    fn(op);
    for (Region *sub : subRegions(op))
      walk(*sub, fn);
  }
}

static Access wholeBuffer(const std::string &id) {
  // Placeholder whole-array access used for Copy ops; dims are left empty so
  // it never participates in affine analysis.
  return Access{id, {}};
}

static void collectInto(const Region &r, AccessSummary &out) {
  for (const Op &op : r.ops) {
    if (op.is<Compute>()) {
      const Compute &c = op.as<Compute>();
      if (c.accumulate)
        out.reads.push_back(c.target);
      for (const Access &a : c.reads)
        out.reads.push_back(a);
      out.writes.push_back(c.target);
    } else if (op.is<CopyOp>()) {
      const CopyOp &c = op.as<CopyOp>();
      out.reads.push_back(wholeBuffer(c.src));
      out.writes.push_back(wholeBuffer(c.dst));
    } else {
      for (const Region *sub : subRegions(op))
        collectInto(*sub, out);
    }
  }
}

AccessSummary collectAccesses(const Region &r) {
  AccessSummary s;
  collectInto(r, s);
  return s;
}

AccessSummary collectAccesses(const Op &op) {
  Region tmp;
  tmp.ops.push_back(op);
  return collectAccesses(tmp);
}

std::vector<std::string> referencedBuffers(const Region &r) {
  AccessSummary s = collectAccesses(r);
  std::vector<std::string> out;
  auto add = [&](const std::string &id) {
    if (std::find(out.begin(), out.end(), id) == out.end())
      out.push_back(id);
  };
  for (const Access &a : s.reads)
    add(a.array);
  for (const Access &a : s.writes)
    add(a.array);
  return out;
}

bool computeEffect(const Region &r, const std::string &buffer, Effect &out) {
  AccessSummary s = collectAccesses(r);
  bool reads = false, writes = false;
  for (const Access &a : s.reads)
    reads |= a.array == buffer;
  for (const Access &a : s.writes)
    writes |= a.array == buffer;
  if (!reads && !writes)
    return false;
  out = reads ? (writes ? Effect::RW : Effect::RO) : Effect::WO;
  return true;
}

static std::int64_t intensityInto(const Region &r, std::int64_t trips) {
  std::int64_t sum = 0;
  for (const Op &op : r.ops) {
    if (op.is<Compute>()) {
      sum += op.as<Compute>().opcount() * trips;
    } else if (op.is<Loop>()) {
      const Loop &l = op.as<Loop>();
      sum += intensityInto(l.body, trips * l.trip);
    } else {
      for (const Region *sub : subRegions(op))
        sum += intensityInto(*sub, trips);
    }
  }
  return sum;
}

std::int64_t intensity(const Region &r) { return intensityInto(r, 1); }

std::int64_t intensity(const Op &op) {
  if (op.is<Loop>())
    return intensityInto(op.as<Loop>().body, op.as<Loop>().trip);
  std::int64_t sum = 0;
  if (op.is<Compute>())
    return op.as<Compute>().opcount();
  for (const Region *sub : subRegions(op))
    sum += intensityInto(*sub, 1);
  return sum;
}

static void loopsInto(Region &r, std::vector<Loop *> &out) {
  for (Op &op : r.ops) {
    if (op.is<Loop>())
      out.push_back(&op.as<Loop>());
    for (Region *sub : subRegions(op))
      loopsInto(*sub, out);
  }
}

std::vector<Loop *> loopsInPreorder(Region &r) {
  std::vector<Loop *> out;
  loopsInto(r, out);
  return out;
}

std::vector<const Loop *> loopsInPreorder(const Region &r) {
  std::vector<const Loop *> out;
  for (Loop *l : loopsInPreorder(const_cast<Region &>(r)))
    out.push_back(l);
  return out;
}

//===----------------------------------------------------------------------===//
// Verifier
//===----------------------------------------------------------------------===//

namespace {

class Verifier {
public:
  explicit Verifier(const Program &p) : prog(p) {}

  DiagList run() {
    checkArrays();
    checkRegion(prog.top, "top", /*inNode=*/false, /*inSchedule=*/false,
                /*inDispatch=*/false);
    return std::move(diags);
  }

private:
  const Program &prog;
  DiagList diags;
  std::vector<std::string> loopStack; // enclosing ivs

  void error(const std::string &path, const std::string &msg) {
    diags.push_back({Severity::Error, path, msg});
  }
  void warning(const std::string &path, const std::string &msg) {
    diags.push_back({Severity::Warning, path, msg});
  }

  void checkArrays() {
    std::set<std::string> seen;
    for (const BufferSpec &a : prog.arrays) {
      if (!seen.insert(a.id).second)
        error("arrays", "array '" + a.id + "' declared more than once");
      if (a.shape.empty())
        error("arrays", "array '" + a.id + "' has empty shape");
      for (std::int64_t e : a.shape)
        if (e < 1)
          error("arrays", "array '" + a.id + "' has extent < 1");
      if (a.partition.size() != a.shape.size())
        error("arrays", "array '" + a.id +
                            "' partition rank does not match shape rank");
      for (size_t d = 0; d < a.partition.size(); ++d) {
        const DimPartition &p = a.partition[d];
        if (p.factor < 1)
          error("arrays", "array '" + a.id + "' dim " + std::to_string(d) +
                              " partition factor < 1");
        if (p.kind == PartitionKind::None && p.factor != 1)
          error("arrays", "array '" + a.id + "' dim " + std::to_string(d) +
                              " unpartitioned but factor != 1");
        if (d < a.shape.size() && p.factor > a.shape[d])
          error("arrays", "array '" + a.id + "' dim " + std::to_string(d) +
                              " partition factor exceeds extent");
      }
      if (a.depth < 1)
        error("arrays", "array '" + a.id + "' has depth < 1");
    }
    std::set<std::string> streamSeen;
    for (const StreamSpec &s : prog.streams)
      if (!streamSeen.insert(s.id).second)
        error("streams", "stream '" + s.id + "' declared more than once");
  }

  void checkAccess(const Access &a, const std::string &path) {
    const BufferSpec *buf = prog.findArray(a.array);
    if (!buf) {
      error(path, "access to undeclared array '" + a.array + "'");
      return;
    }
    if (a.index.size() != buf->shape.size()) {
      error(path, "access to '" + a.array + "' has rank " +
                      std::to_string(a.index.size()) + ", array has rank " +
                      std::to_string(buf->shape.size()));
      return;
    }
    for (const DimIndex &d : a.index) {
      for (const AccessTerm &t : d.terms) {
        if (std::find(loopStack.begin(), loopStack.end(), t.iv) ==
            loopStack.end())
          error(path, "access to '" + a.array + "' uses iv '" + t.iv +
                          "' with no enclosing loop");
        if (t.stride.isZero())
          error(path, "access to '" + a.array + "' has zero-stride term");
      }
    }
  }

  void checkCompute(const Compute &c, const std::string &path) {
    checkAccess(c.target, path);
    for (const Access &a : c.reads)
      checkAccess(a, path);
    if (c.expr.empty()) {
      error(path, "compute has empty expression");
      return;
    }
    for (const ExprNode &e : c.expr) {
      int n = int(c.expr.size());
      switch (e.kind) {
      case ExprKind::Const:
        break;
      case ExprKind::Read:
        if (e.read < 0 || e.read >= int(c.reads.size()))
          error(path, "expression read index out of range");
        break;
      default:
        if (e.lhs < 0 || e.lhs >= n || e.rhs < 0 || e.rhs >= n)
          error(path, "expression operand index out of range");
      }
    }
  }

  // Textual-order dominance: within one region, no onchip buffer is read by
  // an op earlier than its first writing op. External arrays are
  // host-initialized and exempt.
  void checkDominance(const Region &r, const std::string &path) {
    std::map<std::string, size_t> firstWrite;
    for (size_t i = 0; i < r.ops.size(); ++i) {
      AccessSummary s = collectAccesses(r.ops[i]);
      for (const Access &a : s.writes)
        if (!firstWrite.count(a.array))
          firstWrite[a.array] = i;
    }
    for (size_t i = 0; i < r.ops.size(); ++i) {
      AccessSummary s = collectAccesses(r.ops[i]);
      for (const Access &a : s.reads) {
        const BufferSpec *buf = prog.findArray(a.array);
        if (!buf || buf->placement != Placement::Onchip)
          continue;
        auto it = firstWrite.find(a.array);
        if (it != firstWrite.end() && i < it->second)
          error(path, "onchip buffer '" + a.array + "' read at op " +
                          std::to_string(i) + " before first writer at op " +
                          std::to_string(it->second));
      }
    }
  }

  void checkNode(const NodeOp &node, const std::string &path) {
    // Isolation: every referenced buffer is a declared input or allocated in
    // the node's own body (including nested sub-nodes' allocs for the
    // purposes of the parent's reference set).
    std::set<std::string> visible;
    for (const NodeInput &in : node.inputs)
      visible.insert(in.buffer);
    walk(node.body, "", [&](const Op &op, const std::string &) {
      if (op.is<AllocOp>())
        visible.insert(op.as<AllocOp>().buffer);
    });
    for (const std::string &buf : referencedBuffers(node.body))
      if (!visible.count(buf))
        error(path, "node references buffer '" + buf +
                        "' that is neither an input nor locally allocated");

    std::set<std::string> declared;
    for (const NodeInput &in : node.inputs) {
      if (!prog.findArray(in.buffer))
        error(path, "node input '" + in.buffer + "' is not a declared array");
      if (!declared.insert(in.buffer).second)
        error(path, "node declares input '" + in.buffer + "' twice");
      Effect actual;
      if (!computeEffect(node.body, in.buffer, actual)) {
        warning(path, "node input '" + in.buffer + "' is never accessed");
        continue;
      }
      if (actual != in.effect)
        error(path, "node input '" + in.buffer + "' declared " +
                        toString(in.effect) + " but body implies " +
                        toString(actual));
    }
  }

  void checkRegion(const Region &r, const std::string &path, bool inNode,
                   bool inSchedule, bool inDispatch) {
    if (inDispatch)
      for (const Op &op : r.ops)
        if (!op.is<TaskOp>())
          error(path, "dispatch region contains a non-task op");
    if (inSchedule)
      for (const Op &op : r.ops)
        if (!op.is<NodeOp>() && !op.is<AllocOp>())
          error(path, "schedule region contains an op that is neither a node "
                      "nor an alloc");

    checkDominance(r, path);

    for (const Op &op : r.ops) {
      std::string p = path + "/" + opLabel(op);
      if (op.is<Loop>()) {
        const Loop &l = op.as<Loop>();
        if (l.trip < 0)
          error(p, "negative trip count");
        if (l.unroll < 1)
          error(p, "unroll factor < 1");
        else if (l.trip > 0 && l.trip % l.unroll != 0)
          error(p, "unroll factor " + std::to_string(l.unroll) +
                       " does not divide trip count " + std::to_string(l.trip));
        if (std::find(loopStack.begin(), loopStack.end(), l.iv) !=
            loopStack.end())
          error(p, "iv '" + l.iv + "' shadows an enclosing loop");
        loopStack.push_back(l.iv);
        checkRegion(l.body, p, inNode, false, false);
        loopStack.pop_back();
      } else if (op.is<Compute>()) {
        checkCompute(op.as<Compute>(), p);
      } else if (op.is<TaskOp>()) {
        checkRegion(op.as<TaskOp>().body, p, inNode, false, false);
      } else if (op.is<DispatchOp>()) {
        checkRegion(op.as<DispatchOp>().body, p, inNode, false, true);
      } else if (op.is<NodeOp>()) {
        checkNode(op.as<NodeOp>(), p);
        checkRegion(op.as<NodeOp>().body, p, true, false, false);
      } else if (op.is<ScheduleOp>()) {
        checkRegion(op.as<ScheduleOp>().body, p, inNode, true, false);
      } else if (op.is<AllocOp>()) {
        if (!prog.findArray(op.as<AllocOp>().buffer))
          error(p, "alloc of undeclared array");
      } else if (op.is<CopyOp>()) {
        const CopyOp &c = op.as<CopyOp>();
        const BufferSpec *src = prog.findArray(c.src);
        const BufferSpec *dst = prog.findArray(c.dst);
        if (!src)
          error(p, "copy source '" + c.src + "' is not declared");
        if (!dst)
          error(p, "copy destination '" + c.dst + "' is not declared");
        if (src && dst &&
            (src->shape != dst->shape || src->elem != dst->elem))
          error(p, "copy between incompatible buffers");
      } else if (op.is<TokenSendOp>() || op.is<TokenRecvOp>()) {
        const std::string &chan = op.is<TokenSendOp>()
                                      ? op.as<TokenSendOp>().chan
                                      : op.as<TokenRecvOp>().chan;
        bool found = false;
        for (const StreamSpec &s : prog.streams)
          found |= s.id == chan;
        if (!found)
          error(p, "token op on undeclared stream '" + chan + "'");
      }
    }
  }
};

} // namespace

DiagList verify(const Program &p) { return Verifier(p).run(); }

} // namespace hida
