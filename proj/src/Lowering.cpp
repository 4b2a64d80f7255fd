//===- Lowering.cpp - Functional to structural conversion -----------------===//

#include "hida/Lowering.h"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace hida {

namespace {

struct LoweringCtx {
  Program &p;
  int nextNodeId = 0;

  std::string freshId() { return "node" + std::to_string(nextNodeId++); }
};

// Fused tasks nest; a node body wants the plain op sequence.
void flattenTasks(Region &r) {
  std::vector<Op> out;
  out.reserve(r.ops.size());
  for (Op &op : r.ops) {
    if (op.is<TaskOp>()) {
      Region &body = op.as<TaskOp>().body;
      flattenTasks(body);
      for (Op &inner : body.ops)
        out.push_back(std::move(inner));
    } else {
      out.push_back(std::move(op));
    }
  }
  r.ops = std::move(out);
}

void lowerRegion(LoweringCtx &ctx, Region &r);

Op nodeFromOps(LoweringCtx &ctx, std::vector<Op> ops) {
  NodeOp node;
  node.id = ctx.freshId();
  node.body.ops = std::move(ops);
  flattenTasks(node.body);
  lowerRegion(ctx, node.body);
  for (const std::string &buf : referencedBuffers(node.body)) {
    Effect effect;
    if (computeEffect(node.body, buf, effect))
      node.inputs.push_back({buf, effect});
  }
  return Op{std::move(node)};
}

Op scheduleFromDispatch(LoweringCtx &ctx, DispatchOp &dispatch) {
  ScheduleOp schedule;
  for (Op &op : dispatch.body.ops) {
    std::vector<Op> ops;
    if (op.is<TaskOp>())
      ops = std::move(op.as<TaskOp>().body.ops);
    else
      ops.push_back(std::move(op));
    schedule.body.ops.push_back(nodeFromOps(ctx, std::move(ops)));
  }
  return Op{std::move(schedule)};
}

// Rewrites dispatches under r into schedules, leaving other ops in place.
void lowerRegion(LoweringCtx &ctx, Region &r) {
  for (Op &op : r.ops) {
    if (op.is<DispatchOp>()) {
      op = scheduleFromDispatch(ctx, op.as<DispatchOp>());
      continue;
    }
    for (Region *sub : subRegions(op))
      lowerRegion(ctx, *sub);
  }
}

// Buffers referenced by exactly one node become private allocs of that node;
// buffers shared between nodes are allocated in front of the schedule and
// double-buffered. Outer schedules run first, so a buffer claimed there is
// skipped by any nested schedule.
void placeAllocs(Program &p, ScheduleOp &schedule,
                 std::set<std::string> &handled) {
  std::vector<std::string> order; // first-use order across nodes
  std::map<std::string, std::vector<NodeOp *>> users;
  for (Op &op : schedule.body.ops) {
    if (!op.is<NodeOp>())
      continue;
    NodeOp &node = op.as<NodeOp>();
    for (const NodeInput &in : node.inputs) {
      if (!users.count(in.buffer))
        order.push_back(in.buffer);
      users[in.buffer].push_back(&node);
    }
  }
  std::vector<Op> allocs;
  for (const std::string &buf : order) {
    BufferSpec *spec = p.findArray(buf);
    if (!spec || spec->placement != Placement::Onchip || handled.count(buf))
      continue;
    handled.insert(buf);
    std::vector<NodeOp *> &nodes = users[buf];
    if (nodes.size() == 1) {
      NodeOp &only = *nodes.front();
      only.body.ops.insert(only.body.ops.begin(), Op{AllocOp{buf}});
      auto isBuf = [&](const NodeInput &in) { return in.buffer == buf; };
      only.inputs.erase(
          std::remove_if(only.inputs.begin(), only.inputs.end(), isBuf),
          only.inputs.end());
    } else {
      allocs.push_back(Op{AllocOp{buf}});
      spec->depth = 2;
    }
  }
  schedule.body.ops.insert(schedule.body.ops.begin(),
                           std::make_move_iterator(allocs.begin()),
                           std::make_move_iterator(allocs.end()));
}

void dropUnreferencedArrays(Program &p) {
  std::set<std::string> live;
  walk(p.top, "", [&](const Op &op, const std::string &) {
    AccessSummary acc = collectAccesses(op);
    for (const Access &a : acc.reads)
      live.insert(a.array);
    for (const Access &a : acc.writes)
      live.insert(a.array);
    if (const auto *alloc = std::get_if<AllocOp>(&op.v))
      live.insert(alloc->buffer);
  });
  auto dead = [&](const BufferSpec &b) { return !live.count(b.id); };
  p.arrays.erase(std::remove_if(p.arrays.begin(), p.arrays.end(), dead),
                 p.arrays.end());
}

} // namespace

void lowerToStructural(Program &p) {
  LoweringCtx ctx{p};

  bool allDispatches = !p.top.ops.empty();
  for (const Op &op : p.top.ops)
    allDispatches &= op.is<DispatchOp>();

  if (allDispatches) {
    lowerRegion(ctx, p.top);
  } else {
    ScheduleOp schedule;
    for (Op &op : p.top.ops) {
      std::vector<Op> ops;
      if (op.is<TaskOp>())
        ops = std::move(op.as<TaskOp>().body.ops);
      else
        ops.push_back(std::move(op));
      schedule.body.ops.push_back(nodeFromOps(ctx, std::move(ops)));
    }
    p.top.ops.clear();
    p.top.ops.push_back(Op{std::move(schedule)});
  }

  std::set<std::string> handled;
  walk(p.top, [&](Op &op) {
    if (op.is<ScheduleOp>())
      placeAllocs(p, op.as<ScheduleOp>(), handled);
  });
  dropUnreferencedArrays(p);
}

} // namespace hida
