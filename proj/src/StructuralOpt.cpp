//===- StructuralOpt.cpp - Schedule-level graph passes ---------------------===//

#include "hida/StructuralOpt.h"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>

namespace hida {

namespace {

bool readsEffect(Effect e) { return e == Effect::RO || e == Effect::RW; }
bool writesEffect(Effect e) { return e == Effect::WO || e == Effect::RW; }

// Rewrites every access to `from` (computes, copies, allocs) under r.
void renameBuffer(Region &r, const std::string &from, const std::string &to) {
  walk(r, [&](Op &op) {
    if (auto *c = std::get_if<Compute>(&op.v)) {
      if (c->target.array == from)
        c->target.array = to;
      for (Access &a : c->reads)
        if (a.array == from)
          a.array = to;
    } else if (auto *cp = std::get_if<CopyOp>(&op.v)) {
      if (cp->src == from)
        cp->src = to;
      if (cp->dst == from)
        cp->dst = to;
    } else if (auto *al = std::get_if<AllocOp>(&op.v)) {
      if (al->buffer == from)
        al->buffer = to;
    }
  });
}

// Re-derives the declared inputs from the body; locally allocated buffers
// stay private.
void recomputeInputs(NodeOp &node) {
  std::set<std::string> local;
  walk(node.body, [&](Op &op) {
    if (auto *al = std::get_if<AllocOp>(&op.v))
      local.insert(al->buffer);
  });
  node.inputs.clear();
  for (const std::string &buf : referencedBuffers(node.body)) {
    if (local.count(buf))
      continue;
    Effect effect;
    if (computeEffect(node.body, buf, effect))
      node.inputs.push_back({buf, effect});
  }
}

std::vector<std::size_t> nodePositions(const ScheduleOp &schedule) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < schedule.body.ops.size(); ++i)
    if (schedule.body.ops[i].is<NodeOp>())
      pos.push_back(i);
  return pos;
}

const NodeInput *findInput(const NodeOp &node, const std::string &buf) {
  for (const NodeInput &in : node.inputs)
    if (in.buffer == buf)
      return &in;
  return nullptr;
}

bool nodesConflict(const NodeOp &a, const NodeOp &b) {
  for (const NodeInput &x : a.inputs)
    for (const NodeInput &y : b.inputs)
      if (x.buffer == y.buffer &&
          (writesEffect(x.effect) || writesEffect(y.effect)))
        return true;
  return false;
}

// Buffers in declared-input order across the schedule's nodes.
std::vector<std::string> scheduleBuffers(const ScheduleOp &schedule) {
  std::vector<std::string> order;
  std::set<std::string> seen;
  for (const Op &op : schedule.body.ops) {
    if (!op.is<NodeOp>())
      continue;
    for (const NodeInput &in : op.as<NodeOp>().inputs)
      if (seen.insert(in.buffer).second)
        order.push_back(in.buffer);
  }
  return order;
}

void insertAllocAfter(ScheduleOp &schedule, const std::string &refBuf,
                      const std::string &newBuf) {
  auto &ops = schedule.body.ops;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].is<AllocOp>() && ops[i].as<AllocOp>().buffer == refBuf) {
      ops.insert(ops.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                 Op{AllocOp{newBuf}});
      return;
    }
  }
  ops.insert(ops.begin(), Op{AllocOp{newBuf}});
}

// Registers a clone of `base` named `id`, placed right after it.
void cloneArray(Program &p, const std::string &base, const std::string &id) {
  for (std::size_t i = 0; i < p.arrays.size(); ++i) {
    if (p.arrays[i].id == base) {
      BufferSpec clone = p.arrays[i];
      clone.id = id;
      clone.output = false;
      p.arrays.insert(p.arrays.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                      std::move(clone));
      return;
    }
  }
}

std::string freshArrayId(const Program &p, const std::string &base,
                         const char *tag) {
  for (int n = 1;; ++n) {
    std::string id = base + tag + std::to_string(n);
    if (!p.findArray(id))
      return id;
  }
}

// Continues the nodeN numbering started by lowering.
std::string freshNodeId(const Program &p) {
  std::int64_t next = 0;
  walk(p.top, "", [&](const Op &op, const std::string &) {
    if (const auto *node = std::get_if<NodeOp>(&op.v)) {
      const std::string &id = node->id;
      if (id.rfind("node", 0) == 0) {
        char *end = nullptr;
        std::int64_t n = std::strtoll(id.c_str() + 4, &end, 10);
        if (end && *end == '\0')
          next = std::max(next, n + 1);
      }
    }
  });
  return "node" + std::to_string(next);
}

//===----------------------------------------------------------------------===//
// eliminateMultiProducers
//===----------------------------------------------------------------------===//

// Later producers of an on-chip buffer each get a clone: the producer (and
// everything it dominates) switches to the clone, seeded with a whole-buffer
// copy when the producer reads the previous values.
void cloneOnchipProducers(Program &p, ScheduleOp &schedule,
                          const std::string &buffer,
                          const std::vector<std::size_t> &producerPos) {
  std::string cur = buffer;
  for (std::size_t k = 1; k < producerPos.size(); ++k) {
    NodeOp &prod = schedule.body.ops[producerPos[k]].as<NodeOp>();
    bool readsPrev = findInput(prod, cur)->effect == Effect::RW;

    // Dominated users, computed before the copy below adds one more.
    std::vector<std::size_t> dominated;
    for (std::size_t i = producerPos[k]; i < schedule.body.ops.size(); ++i) {
      Op &op = schedule.body.ops[i];
      if (op.is<NodeOp>() && findInput(op.as<NodeOp>(), cur))
        dominated.push_back(i);
    }

    std::string clone = freshArrayId(p, buffer, "_mp");
    cloneArray(p, buffer, clone);
    insertAllocAfter(schedule, cur, clone);
    // Inserting the alloc shifted every node position by one.
    std::vector<std::size_t> shifted;
    for (std::size_t i : dominated)
      shifted.push_back(i + 1);

    for (std::size_t i : shifted) {
      NodeOp &user = schedule.body.ops[i].as<NodeOp>();
      renameBuffer(user.body, cur, clone);
    }
    NodeOp &prodShifted = schedule.body.ops[producerPos[k] + 1].as<NodeOp>();
    if (readsPrev)
      prodShifted.body.ops.insert(prodShifted.body.ops.begin(),
                                  Op{CopyOp{cur, clone}});
    for (std::size_t i : shifted)
      recomputeInputs(schedule.body.ops[i].as<NodeOp>());
    cur = clone;
  }
}

// External buffers are part of the memory interface and cannot be cloned;
// all their producers collapse into one node instead.
void fuseExternalProducers(ScheduleOp &schedule, const std::string &buffer,
                           const std::vector<std::size_t> &producerPos) {
  NodeOp &first = schedule.body.ops[producerPos.front()].as<NodeOp>();
  std::set<std::size_t> producers(producerPos.begin(), producerPos.end());
  for (std::size_t k = 1; k < producerPos.size(); ++k) {
    const NodeOp &prod = schedule.body.ops[producerPos[k]].as<NodeOp>();
    for (std::size_t i = producerPos.front() + 1; i < producerPos[k]; ++i) {
      const Op &mid = schedule.body.ops[i];
      if (!mid.is<NodeOp>() || producers.count(i))
        continue;
      if (nodesConflict(mid.as<NodeOp>(), prod))
        throw std::runtime_error(
            "cannot single-produce external buffer '" + buffer +
            "': fusing its producers would reorder dependent nodes");
    }
  }
  for (std::size_t k = 1; k < producerPos.size(); ++k) {
    NodeOp &prod = schedule.body.ops[producerPos[k]].as<NodeOp>();
    for (Op &op : prod.body.ops)
      first.body.ops.push_back(std::move(op));
  }
  recomputeInputs(first);
  for (std::size_t k = producerPos.size(); k-- > 1;)
    schedule.body.ops.erase(schedule.body.ops.begin() +
                            static_cast<std::ptrdiff_t>(producerPos[k]));
}

bool eliminateInSchedule(Program &p, ScheduleOp &schedule) {
  for (const std::string &buffer : scheduleBuffers(schedule)) {
    std::vector<std::size_t> producerPos;
    for (std::size_t i : nodePositions(schedule)) {
      const NodeInput *in = findInput(schedule.body.ops[i].as<NodeOp>(), buffer);
      if (in && writesEffect(in->effect))
        producerPos.push_back(i);
    }
    if (producerPos.size() < 2)
      continue;
    const BufferSpec *spec = p.findArray(buffer);
    if (spec && spec->placement == Placement::Onchip)
      cloneOnchipProducers(p, schedule, buffer, producerPos);
    else
      fuseExternalProducers(schedule, buffer, producerPos);
    return true;
  }
  return false;
}

//===----------------------------------------------------------------------===//
// balancePaths
//===----------------------------------------------------------------------===//

struct GapInfo {
  std::string buffer;
  std::size_t producerPos = 0;              // position in schedule body
  std::vector<std::pair<std::size_t, int>> consumers; // position, gap
  int maxGap = 0;
};

// First on-chip buffer consumed more than one level below its producer.
std::optional<GapInfo> findGap(const Program &p, const ScheduleOp &schedule) {
  NodeGraph g = buildNodeGraph(schedule);
  std::vector<std::size_t> pos = nodePositions(schedule);
  for (const std::string &buffer : scheduleBuffers(schedule)) {
    const BufferSpec *spec = p.findArray(buffer);
    if (!spec || spec->placement != Placement::Onchip)
      continue;
    GapInfo info;
    info.buffer = buffer;
    bool found = false;
    for (const NodeGraph::Edge &e : g.edges) {
      if (e.buffer != buffer)
        continue;
      int gap = g.levels[static_cast<std::size_t>(e.consumer)] -
                g.levels[static_cast<std::size_t>(e.producer)] - 1;
      info.producerPos = pos[static_cast<std::size_t>(e.producer)];
      info.consumers.push_back(
          {pos[static_cast<std::size_t>(e.consumer)], gap});
      info.maxGap = std::max(info.maxGap, gap);
      found = found || gap > 0;
    }
    if (found)
      return info;
  }
  return std::nullopt;
}

// Chain of duplicates bridging the gap: the consumer g levels below the
// producer reads the g-th duplicate, each fed by a copy node one level up.
void balanceOnchip(Program &p, ScheduleOp &schedule, const GapInfo &info) {
  std::vector<std::string> dups = {info.buffer};
  std::vector<Op> copyNodes;
  for (int g = 1; g <= info.maxGap; ++g) {
    std::string dup = freshArrayId(p, info.buffer, "_dup");
    cloneArray(p, info.buffer, dup);
    insertAllocAfter(schedule, dups.back(), dup);
    NodeOp copy;
    copy.id = freshNodeId(p);
    copy.body.ops.push_back(Op{CopyOp{dups.back(), dup}});
    recomputeInputs(copy);
    // The schedule grew by one alloc; account for it before inserting nodes.
    copyNodes.push_back(Op{std::move(copy)});
    dups.push_back(dup);
  }
  // The alloc block at the front grew by maxGap entries, shifting every
  // node position. Redirect consumers before splicing in the copy nodes.
  std::size_t allocShift = static_cast<std::size_t>(info.maxGap);
  for (const auto &[posBefore, gap] : info.consumers) {
    if (gap <= 0)
      continue;
    NodeOp &consumer =
        schedule.body.ops[posBefore + allocShift].as<NodeOp>();
    renameBuffer(consumer.body, info.buffer,
                 dups[static_cast<std::size_t>(gap)]);
    recomputeInputs(consumer);
  }
  std::size_t insertAt = info.producerPos + allocShift + 1;
  schedule.body.ops.insert(schedule.body.ops.begin() +
                               static_cast<std::ptrdiff_t>(insertAt),
                           std::make_move_iterator(copyNodes.begin()),
                           std::make_move_iterator(copyNodes.end()));
}

// Demote the buffer to external memory with enough frame slots for the
// deepest consumer, ordered by a broadcast token stream.
void balanceSoftFifo(Program &p, ScheduleOp &schedule, const GapInfo &info) {
  BufferSpec *spec = p.findArray(info.buffer);
  spec->placement = Placement::External;
  spec->depth = static_cast<std::int64_t>(info.maxGap) + 2;

  auto &ops = schedule.body.ops;
  std::size_t shift = 0; // erased allocs sit before every node position
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].is<AllocOp>() && ops[i].as<AllocOp>().buffer == info.buffer) {
      ops.erase(ops.begin() + static_cast<std::ptrdiff_t>(i));
      shift = 1;
      break;
    }
  }

  std::string chan = info.buffer + "_tok";
  p.streams.push_back({chan, static_cast<std::int64_t>(info.maxGap) + 2});
  NodeOp &producer = ops[info.producerPos - shift].as<NodeOp>();
  producer.body.ops.push_back(Op{TokenSendOp{chan}});
  for (const auto &[posBefore, gap] : info.consumers) {
    NodeOp &consumer = ops[posBefore - shift].as<NodeOp>();
    consumer.body.ops.insert(consumer.body.ops.begin(),
                             Op{TokenRecvOp{chan}});
  }
}

} // namespace

int NodeGraph::indexOf(const std::string &nodeId) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i]->id == nodeId)
      return static_cast<int>(i);
  return -1;
}

NodeGraph buildNodeGraph(const ScheduleOp &schedule) {
  NodeGraph g;
  for (const Op &op : schedule.body.ops)
    if (op.is<NodeOp>())
      g.nodes.push_back(&op.as<NodeOp>());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (const NodeInput &out : g.nodes[i]->inputs) {
      if (!writesEffect(out.effect))
        continue;
      for (std::size_t j = i + 1; j < g.nodes.size(); ++j) {
        const NodeInput *in = findInput(*g.nodes[j], out.buffer);
        if (in && readsEffect(in->effect))
          g.edges.push_back({static_cast<int>(i), static_cast<int>(j),
                             out.buffer});
      }
    }
  }
  g.levels.assign(g.nodes.size(), 0);
  for (const NodeGraph::Edge &e : g.edges) {
    auto c = static_cast<std::size_t>(e.consumer);
    auto p = static_cast<std::size_t>(e.producer);
    g.levels[c] = std::max(g.levels[c], g.levels[p] + 1);
  }
  return g;
}

void eliminateMultiProducers(Program &p) {
  walk(p.top, [&](Op &op) {
    if (!op.is<ScheduleOp>())
      return;
    ScheduleOp &schedule = op.as<ScheduleOp>();
    while (eliminateInSchedule(p, schedule))
      ;
  });
}

void balancePaths(Program &p, const BalanceOptions &opts) {
  walk(p.top, [&](Op &op) {
    if (!op.is<ScheduleOp>())
      return;
    ScheduleOp &schedule = op.as<ScheduleOp>();
    while (auto gap = findGap(p, schedule)) {
      if (opts.mode == BalanceMode::Onchip)
        balanceOnchip(p, schedule, *gap);
      else
        balanceSoftFifo(p, schedule, *gap);
    }
  });
}

} // namespace hida
