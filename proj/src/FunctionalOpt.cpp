//===- FunctionalOpt.cpp - Task formation and fusion ----------------------===//

#include "hida/FunctionalOpt.h"

#include <algorithm>
#include <cassert>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>

namespace hida {

namespace {

//===----------------------------------------------------------------------===//
// constructDataflow
//===----------------------------------------------------------------------===//

bool isLoop(const Op &op) { return op.is<Loop>(); }

void constructInRegion(Region &r, bool ownedByIterative) {
  for (Op &op : r.ops)
    for (Region *sub : subRegions(op))
      constructInRegion(*sub, op.is<Loop>());
  if (!ownedByIterative)
    return;
  auto loops = std::count_if(r.ops.begin(), r.ops.end(), isLoop);
  if (loops < 2)
    return;
  DispatchOp dispatch;
  for (Op &op : r.ops) {
    TaskOp task;
    task.body.ops.push_back(std::move(op));
    dispatch.body.ops.push_back(Op{std::move(task)});
  }
  r.ops.clear();
  r.ops.push_back(Op{std::move(dispatch)});
}

//===----------------------------------------------------------------------===//
// fuseTasks
//===----------------------------------------------------------------------===//

struct TaskSummary {
  std::set<std::string> reads;
  std::set<std::string> writes;
  std::int64_t intensity = 0;
};

TaskSummary summarize(const Op &task) {
  TaskSummary s;
  AccessSummary acc = collectAccesses(task);
  for (const Access &a : acc.reads)
    s.reads.insert(a.array);
  for (const Access &a : acc.writes)
    s.writes.insert(a.array);
  s.intensity = intensity(task);
  return s;
}

bool intersects(const std::set<std::string> &a, const std::set<std::string> &b) {
  for (const std::string &x : a)
    if (b.count(x))
      return true;
  return false;
}

bool conflicts(const TaskSummary &a, const TaskSummary &b) {
  return intersects(a.writes, b.writes) || intersects(a.writes, b.reads) ||
         intersects(a.reads, b.writes);
}

// Producer at i feeds consumer at j, and j's ops can be pulled up next to
// i's without crossing a task they depend on either way.
bool fusible(const std::vector<TaskSummary> &sums, std::size_t i,
             std::size_t j) {
  if (!intersects(sums[i].writes, sums[j].reads))
    return false;
  for (std::size_t k = i + 1; k < j; ++k)
    if (conflicts(sums[k], sums[j]))
      return false;
  return true;
}

// Single perfect loop nest with a compute-only innermost body.
struct NestView {
  std::vector<const Loop *> loops;
  bool valid = false;
};

NestView nestOf(const Op &task) {
  NestView v;
  const Region *r = &task.as<TaskOp>().body;
  while (r->ops.size() == 1 && r->ops[0].is<Loop>()) {
    const Loop &l = r->ops[0].as<Loop>();
    v.loops.push_back(&l);
    r = &l.body;
  }
  if (v.loops.empty() || r->ops.empty())
    return v;
  for (const Op &op : r->ops)
    if (!op.is<Compute>())
      return v;
  v.valid = true;
  return v;
}

bool sameTripVector(const NestView &a, const NestView &b) {
  if (a.loops.size() != b.loops.size())
    return false;
  for (std::size_t d = 0; d < a.loops.size(); ++d)
    if (a.loops[d]->trip != b.loops[d]->trip)
      return false;
  return true;
}

// Every access touches full nest rank, one unit-stride term per dim bound to
// the loop at the same depth, zero offset.
bool pointwise(const Op &task, const NestView &v) {
  AccessSummary acc = collectAccesses(task);
  auto ok = [&](const Access &a) {
    if (a.index.size() != v.loops.size())
      return false;
    for (std::size_t d = 0; d < a.index.size(); ++d) {
      const DimIndex &di = a.index[d];
      if (di.offset != 0 || di.terms.size() != 1)
        return false;
      if (di.terms[0].iv != v.loops[d]->iv ||
          !(di.terms[0].stride == Rational(1)))
        return false;
    }
    return true;
  };
  for (const Access &a : acc.reads)
    if (!ok(a))
      return false;
  for (const Access &a : acc.writes)
    if (!ok(a))
      return false;
  return true;
}

// Dim indices equal up to renaming ivs by nest depth.
bool sameShapeIndex(const Access &wa, const NestView &va, const Access &ra,
                    const NestView &vb) {
  auto depthOf = [](const NestView &v, const std::string &iv) {
    for (std::size_t d = 0; d < v.loops.size(); ++d)
      if (v.loops[d]->iv == iv)
        return static_cast<int>(d);
    return -1;
  };
  if (wa.index.size() != ra.index.size())
    return false;
  for (std::size_t d = 0; d < wa.index.size(); ++d) {
    const DimIndex &x = wa.index[d];
    const DimIndex &y = ra.index[d];
    if (x.offset != y.offset || x.terms.size() != y.terms.size())
      return false;
    for (std::size_t t = 0; t < x.terms.size(); ++t) {
      if (depthOf(va, x.terms[t].iv) != depthOf(vb, y.terms[t].iv))
        return false;
      if (!(x.terms[t].stride == y.terms[t].stride))
        return false;
    }
  }
  return true;
}

// Producer and consumer run the same iteration space and the consumer reads
// the produced buffer exactly where the producer wrote it.
bool alignedProducerConsumer(const Op &producer, const Op &consumer) {
  NestView vp = nestOf(producer);
  NestView vc = nestOf(consumer);
  if (!vp.valid || !vc.valid || !sameTripVector(vp, vc))
    return false;
  AccessSummary pAcc = collectAccesses(producer);
  AccessSummary cAcc = collectAccesses(consumer);
  for (const Access &w : pAcc.writes)
    for (const Access &r : cAcc.reads)
      if (w.array == r.array && sameShapeIndex(w, vp, r, vc))
        return true;
  return false;
}

bool elementwiseChain(const Op &producer, const Op &consumer) {
  NestView vp = nestOf(producer);
  NestView vc = nestOf(consumer);
  if (!vp.valid || !vc.valid || !sameTripVector(vp, vc))
    return false;
  return pointwise(producer, vp) && pointwise(consumer, vc);
}

bool matchesPattern(const std::string &name, const Op &producer,
                    const Op &consumer) {
  if (name == "elementwise-chain")
    return elementwiseChain(producer, consumer);
  if (name == "producer-consumer-aligned")
    return alignedProducerConsumer(producer, consumer);
  throw std::invalid_argument("unknown fusion pattern '" + name + "'");
}

// Merge tasks i and j (i < j) into one task holding both, at position i.
void fusePair(Region &dispatchBody, std::size_t i, std::size_t j) {
  TaskOp merged;
  merged.body.ops.push_back(std::move(dispatchBody.ops[i]));
  merged.body.ops.push_back(std::move(dispatchBody.ops[j]));
  dispatchBody.ops[i] = Op{std::move(merged)};
  dispatchBody.ops.erase(dispatchBody.ops.begin() +
                         static_cast<std::ptrdiff_t>(j));
}

void fuseInDispatch(DispatchOp &dispatch, const FusionOptions &opts) {
  Region &body = dispatch.body;
  auto allSummaries = [&] {
    std::vector<TaskSummary> sums;
    sums.reserve(body.ops.size());
    for (const Op &op : body.ops)
      sums.push_back(summarize(op));
    return sums;
  };

  // Stage one: drain the pattern worklist. Fusing creates a nested task that
  // no longer matches single-nest patterns, so a plain rescan converges.
  if (!opts.patterns.empty()) {
    bool changed = true;
    while (changed) {
      changed = false;
      std::vector<TaskSummary> sums = allSummaries();
      for (std::size_t i = 0; i < body.ops.size() && !changed; ++i) {
        for (std::size_t j = i + 1; j < body.ops.size() && !changed; ++j) {
          if (!fusible(sums, i, j))
            continue;
          for (const std::string &name : opts.patterns) {
            if (matchesPattern(name, body.ops[i], body.ops[j])) {
              fusePair(body, i, j);
              changed = true;
              break;
            }
          }
        }
      }
    }
  }

  // Stage two: keep folding the cheapest connected pair into one kernel for
  // as long as the result would not become the new intensity bottleneck.
  if (!opts.pairing)
    return;
  while (body.ops.size() > 1) {
    std::vector<TaskSummary> sums = allSummaries();
    std::int64_t maxIntensity = 0;
    for (const TaskSummary &s : sums)
      maxIntensity = std::max(maxIntensity, s.intensity);
    std::optional<std::pair<std::size_t, std::size_t>> best;
    std::int64_t bestCombined = 0;
    for (std::size_t i = 0; i < body.ops.size(); ++i) {
      for (std::size_t j = i + 1; j < body.ops.size(); ++j) {
        if (!fusible(sums, i, j))
          continue;
        std::int64_t combined = sums[i].intensity + sums[j].intensity;
        if (!best || combined < bestCombined) {
          best = {i, j};
          bestCombined = combined;
        }
      }
    }
    if (!best)
      return;
    bool profitable = opts.profitable ? opts.profitable(bestCombined,
                                                        maxIntensity)
                                      : bestCombined <= maxIntensity;
    if (!profitable)
      return;
    fusePair(body, best->first, best->second);
  }
}

void fuseInRegion(Region &r, const FusionOptions &opts) {
  for (Op &op : r.ops) {
    if (op.is<DispatchOp>())
      fuseInDispatch(op.as<DispatchOp>(), opts);
    for (Region *sub : subRegions(op))
      fuseInRegion(*sub, opts);
  }
}

//===----------------------------------------------------------------------===//
// simplifyHierarchy
//===----------------------------------------------------------------------===//

bool simplifyRegion(Region &r) {
  bool changed = false;
  for (Op &op : r.ops)
    for (Region *sub : subRegions(op))
      changed |= simplifyRegion(*sub);

  std::vector<Op> out;
  out.reserve(r.ops.size());
  for (Op &op : r.ops) {
    if (auto *task = std::get_if<TaskOp>(&op.v)) {
      if (task->body.ops.empty()) {
        changed = true;
        continue;
      }
      if (task->body.ops.size() == 1 && task->body.ops[0].is<TaskOp>()) {
        out.push_back(std::move(task->body.ops[0]));
        changed = true;
        continue;
      }
    }
    if (auto *dispatch = std::get_if<DispatchOp>(&op.v)) {
      if (dispatch->body.ops.empty()) {
        changed = true;
        continue;
      }
      if (dispatch->body.ops.size() == 1 &&
          dispatch->body.ops[0].is<TaskOp>()) {
        out.push_back(std::move(dispatch->body.ops[0]));
        changed = true;
        continue;
      }
    }
    out.push_back(std::move(op));
  }
  r.ops = std::move(out);
  return changed;
}

} // namespace

std::vector<std::string> defaultFusionPatterns() {
  return {"elementwise-chain", "producer-consumer-aligned"};
}

void constructDataflow(Program &p) { constructInRegion(p.top, true); }

void fuseTasks(Program &p, const FusionOptions &opts) {
  fuseInRegion(p.top, opts);
}

void simplifyHierarchy(Program &p) {
  while (simplifyRegion(p.top))
    ;
}

} // namespace hida
