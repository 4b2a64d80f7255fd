//===- Parallelize.cpp - Connection analysis and unroll DSE ----------------===//

#include "hida/Parallelize.h"

#include "hida/StructuralOpt.h"

#include <algorithm>
#include <cassert>
#include <limits>
#include <set>
#include <stdexcept>

namespace hida {

namespace {

//===----------------------------------------------------------------------===//
// Connection analysis
//===----------------------------------------------------------------------===//

struct DimBinding {
  std::size_t loop = 0;
  Rational stride{1};

  friend bool operator==(const DimBinding &, const DimBinding &) = default;
};

// Per array dimension, the loop and |stride| every relevant access agrees
// on; nullopt marks a constant dimension. Returns false when accesses
// disagree or an index mixes several loops (non-affine for map purposes).
bool sideBindings(const NodeOp &node, const std::string &buffer,
                  std::size_t rank, bool writes,
                  std::vector<std::optional<DimBinding>> &out) {
  std::map<std::string, std::size_t> loopIndex;
  std::vector<const Loop *> loops = loopsInPreorder(node.body);
  for (std::size_t i = 0; i < loops.size(); ++i)
    loopIndex[loops[i]->iv] = i;

  out.assign(rank, std::nullopt);
  AccessSummary acc = collectAccesses(node.body);
  const std::vector<Access> &list = writes ? acc.writes : acc.reads;
  bool first = true;
  for (const Access &a : list) {
    if (a.array != buffer || a.index.empty())
      continue; // whole-buffer copies impose nothing
    if (a.index.size() != rank)
      return false;
    std::vector<std::optional<DimBinding>> cur(rank);
    for (std::size_t d = 0; d < a.index.size(); ++d) {
      const DimIndex &di = a.index[d];
      if (di.terms.empty())
        continue;
      if (di.terms.size() > 1)
        return false;
      auto it = loopIndex.find(di.terms[0].iv);
      if (it == loopIndex.end())
        return false;
      cur[d] = DimBinding{it->second, di.terms[0].stride.abs()};
    }
    if (first) {
      out = cur;
      first = false;
    } else if (out != cur) {
      return false;
    }
  }
  return true;
}

Connection makeConnection(const Program &p, const NodeOp &source,
                          const NodeOp &target, const std::string &buffer,
                          DiagList *diags) {
  Connection c;
  c.source = source.id;
  c.target = target.id;
  c.buffer = buffer;

  const BufferSpec *spec = p.findArray(buffer);
  std::size_t rank = spec ? spec->shape.size() : 0;
  std::vector<std::optional<DimBinding>> src, tgt;
  bool ok = sideBindings(source, buffer, rank, /*writes=*/true, src) &&
            sideBindings(target, buffer, rank, /*writes=*/false, tgt);
  std::size_t nSrc = loopsInPreorder(source.body).size();
  std::size_t nTgt = loopsInPreorder(target.body).size();
  if (ok) {
    c.permS2T.assign(nTgt, std::nullopt);
    c.permT2S.assign(nSrc, std::nullopt);
    c.scaleS2T.assign(nSrc, std::nullopt);
    c.scaleT2S.assign(nTgt, std::nullopt);
    for (std::size_t d = 0; d < src.size() && ok; ++d) {
      if (!src[d] || !tgt[d])
        continue;
      std::size_t s = src[d]->loop;
      std::size_t t = tgt[d]->loop;
      if ((c.permT2S[s] && *c.permT2S[s] != t) ||
          (c.permS2T[t] && *c.permS2T[t] != s)) {
        ok = false; // one loop would need two distinct counterparts
        break;
      }
      c.permT2S[s] = t;
      c.permS2T[t] = s;
      c.scaleS2T[s] = src[d]->stride / tgt[d]->stride;
      c.scaleT2S[t] = tgt[d]->stride / src[d]->stride;
    }
  }
  if (!ok) {
    c.affine = false;
    c.permS2T.clear();
    c.permT2S.clear();
    c.scaleS2T.clear();
    c.scaleT2S.clear();
    if (diags)
      diags->push_back({Severity::Warning, c.source + "->" + c.target,
                        "connection through '" + buffer +
                            "' is not affine-alignable; it imposes no "
                            "parallelization constraints"});
  }
  return c;
}

std::vector<const NodeOp *> allNodes(const Program &p) {
  std::vector<const NodeOp *> nodes;
  walk(p.top, "", [&](const Op &op, const std::string &) {
    if (op.is<NodeOp>())
      nodes.push_back(&op.as<NodeOp>());
  });
  return nodes;
}

//===----------------------------------------------------------------------===//
// Factor generation
//===----------------------------------------------------------------------===//

std::vector<std::int64_t> divisorsOf(std::int64_t n) {
  std::vector<std::int64_t> ds;
  for (std::int64_t d = 1; d <= n; ++d)
    if (n % d == 0)
      ds.push_back(d);
  return ds;
}

// Products of per-loop trip divisors, reduction loops pinned to 1.
std::set<std::int64_t> feasibleFactors(const NodeOp &node,
                                       bool unrollReductions,
                                       std::int64_t cap) {
  std::set<std::int64_t> result = {1};
  for (const Loop *l : loopsInPreorder(node.body)) {
    if (l->reduction && !unrollReductions)
      continue;
    std::set<std::int64_t> next;
    for (std::int64_t base : result)
      for (std::int64_t d : divisorsOf(l->trip))
        if (base * d <= cap)
          next.insert(base * d);
    result = std::move(next);
  }
  return result;
}

std::int64_t largestFeasibleAtMost(const std::set<std::int64_t> &feasible,
                                   Rational target) {
  std::int64_t best = 1;
  for (std::int64_t f : feasible)
    if (f * target.den <= target.num)
      best = std::max(best, f);
  return best;
}

//===----------------------------------------------------------------------===//
// Bank demand
//===----------------------------------------------------------------------===//

using BankDemand = std::map<std::string, std::vector<std::int64_t>>;

void demandScan(const Program &p, const Region &r,
                std::map<std::string, std::int64_t> &ufScope,
                BankDemand &out) {
  auto record = [&](const Access &a) {
    const BufferSpec *spec = p.findArray(a.array);
    if (!spec)
      return;
    std::vector<std::int64_t> &dims = out[a.array];
    if (dims.empty())
      dims.assign(spec->shape.size(), 1);
    for (std::size_t d = 0; d < a.index.size() && d < dims.size(); ++d) {
      for (const AccessTerm &t : a.index[d].terms) {
        auto it = ufScope.find(t.iv);
        std::int64_t uf = it == ufScope.end() ? 1 : it->second;
        std::int64_t banks = (Rational(uf) * t.stride.abs()).ceil();
        dims[d] = std::max(dims[d], std::max<std::int64_t>(banks, 1));
      }
    }
  };
  for (const Op &op : r.ops) {
    if (op.is<Loop>()) {
      const Loop &l = op.as<Loop>();
      ufScope[l.iv] = l.unroll;
      demandScan(p, l.body, ufScope, out);
      ufScope.erase(l.iv);
    } else {
      AccessSummary acc = collectAccesses(op);
      for (const Access &a : acc.reads)
        record(a);
      for (const Access &a : acc.writes)
        record(a);
      if (!op.is<Compute>() && !op.is<CopyOp>())
        for (const Region *sub : subRegions(op))
          demandScan(p, *sub, ufScope, out);
    }
  }
}

BankDemand bankDemand(const Program &p, const Region &r) {
  std::map<std::string, std::int64_t> scope;
  BankDemand out;
  demandScan(p, r, scope, out);
  return out;
}

void mergeDemand(BankDemand &into, const BankDemand &from) {
  for (const auto &[array, dims] : from) {
    std::vector<std::int64_t> &dst = into[array];
    if (dst.size() < dims.size())
      dst.resize(dims.size(), 1);
    for (std::size_t d = 0; d < dims.size(); ++d)
      dst[d] = std::max(dst[d], dims[d]);
  }
}

std::int64_t totalBanks(const BankDemand &demand) {
  std::int64_t total = 0;
  for (const auto &[array, dims] : demand) {
    std::int64_t banks = 1;
    for (std::int64_t d : dims)
      banks *= d;
    total += banks;
  }
  return total;
}

//===----------------------------------------------------------------------===//
// Per-node DSE
//===----------------------------------------------------------------------===//

struct Choice {
  std::vector<std::int64_t> uf;
  std::int64_t latency = 0;
  std::int64_t dsp = 0;
  std::int64_t banks = 0;
  std::int64_t spreadMax = 1; // max and min of uf*trip over loops
  std::int64_t spreadMin = 1;
  BankDemand demand;
};

// Objective chain: latency, DSP, banks, loop-load spread, then the
// lexicographically greatest vector (spreads parallelism toward outer loops
// on exact ties).
bool betterChoice(const Choice &a, const Choice &b) {
  if (a.latency != b.latency)
    return a.latency < b.latency;
  if (a.dsp != b.dsp)
    return a.dsp < b.dsp;
  if (a.banks != b.banks)
    return a.banks < b.banks;
  std::int64_t lhs = a.spreadMax * b.spreadMin;
  std::int64_t rhs = b.spreadMax * a.spreadMin;
  if (lhs != rhs)
    return lhs < rhs;
  return a.uf > b.uf;
}

bool mutuallyDivisible(std::int64_t uf, std::int64_t constraint) {
  return uf % constraint == 0 || constraint % uf == 0;
}

void enumerate(const std::vector<const Loop *> &loops,
               const std::vector<std::vector<std::int64_t>> &constraints,
               bool unrollReductions, std::int64_t factor, std::size_t depth,
               std::int64_t product, std::vector<std::int64_t> &cur,
               const std::function<void(const std::vector<std::int64_t> &)>
                   &yield) {
  if (depth == loops.size()) {
    yield(cur);
    return;
  }
  const Loop &l = *loops[depth];
  std::vector<std::int64_t> options =
      l.reduction && !unrollReductions ? std::vector<std::int64_t>{1}
                                       : divisorsOf(l.trip);
  for (std::int64_t uf : options) {
    if (product * uf > factor)
      continue;
    bool valid = true;
    for (std::int64_t c : constraints[depth])
      valid = valid && mutuallyDivisible(uf, c);
    if (!valid)
      continue;
    cur.push_back(uf);
    enumerate(loops, constraints, unrollReductions, factor, depth + 1,
              product * uf, cur, yield);
    cur.pop_back();
  }
}

Choice evaluate(const Program &p, const NodeOp &node,
                const std::vector<std::int64_t> &uf, const CostModel &cm,
                const BankDemand *globalState) {
  NodeOp scratch = node;
  std::vector<Loop *> loops = loopsInPreorder(scratch.body);
  assert(loops.size() == uf.size());
  for (std::size_t i = 0; i < loops.size(); ++i)
    loops[i]->unroll = uf[i];

  Choice c;
  c.uf = uf;
  NodeEstimate est = estimateNode(p, scratch, cm);
  c.latency = est.latency;
  c.dsp = est.dsp;
  c.demand = bankDemand(p, scratch.body);
  BankDemand merged = globalState ? *globalState : BankDemand{};
  mergeDemand(merged, c.demand);
  c.banks = totalBanks(merged);
  if (!uf.empty()) {
    c.spreadMax = 0;
    c.spreadMin = std::numeric_limits<std::int64_t>::max();
    for (std::size_t i = 0; i < uf.size(); ++i) {
      std::int64_t load = uf[i] * loops[i]->trip;
      c.spreadMax = std::max(c.spreadMax, load);
      c.spreadMin = std::min(c.spreadMin, load);
    }
  }
  return c;
}

} // namespace

ConnectionAnalysis analyzeConnections(const Program &p, DiagList *diags) {
  ConnectionAnalysis a;
  for (const NodeOp *node : allNodes(p))
    a.intensities[node->id] = intensity(node->body);
  walk(p.top, "", [&](const Op &op, const std::string &) {
    if (!op.is<ScheduleOp>())
      return;
    NodeGraph g = buildNodeGraph(op.as<ScheduleOp>());
    for (const NodeGraph::Edge &e : g.edges) {
      const NodeOp &src = *g.nodes[static_cast<std::size_t>(e.producer)];
      const NodeOp &tgt = *g.nodes[static_cast<std::size_t>(e.consumer)];
      a.connections.push_back(makeConnection(p, src, tgt, e.buffer, diags));
    }
  });
  for (const auto &[id, intensity] : a.intensities)
    a.connectionCount[id] = 0;
  for (const Connection &c : a.connections) {
    ++a.connectionCount[c.source];
    ++a.connectionCount[c.target];
  }
  return a;
}

std::vector<std::string> sortNodes(const Program &p,
                                   const ConnectionAnalysis &analysis) {
  std::vector<std::string> order;
  for (const NodeOp *node : allNodes(p))
    order.push_back(node->id);
  auto count = [&](const std::string &id) {
    auto it = analysis.connectionCount.find(id);
    return it == analysis.connectionCount.end() ? 0 : it->second;
  };
  auto intensityOf = [&](const std::string &id) {
    auto it = analysis.intensities.find(id);
    return it == analysis.intensities.end() ? std::int64_t(0) : it->second;
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string &x, const std::string &y) {
                     if (count(x) != count(y))
                       return count(x) > count(y);
                     return intensityOf(x) > intensityOf(y);
                   });
  return order;
}

std::map<std::string, std::int64_t>
generateParallelFactors(const Program &p, const ConnectionAnalysis &analysis,
                        std::int64_t maxFactor, bool intensityAware) {
  std::int64_t maxIntensity = 0;
  for (const auto &[id, value] : analysis.intensities)
    maxIntensity = std::max(maxIntensity, value);

  std::map<std::string, std::int64_t> factors;
  for (const NodeOp *node : allNodes(p)) {
    std::set<std::int64_t> feasible =
        feasibleFactors(*node, /*unrollReductions=*/false, maxFactor);
    Rational target{maxFactor};
    if (intensityAware && maxIntensity > 0)
      target = Rational(maxFactor * analysis.intensities.at(node->id),
                        maxIntensity);
    factors[node->id] = largestFeasibleAtMost(feasible, target);
  }
  return factors;
}

ParallelPlan planParallelization(const Program &p,
                                 const ParallelizeOptions &opts,
                                 DiagList *diags) {
  ConnectionAnalysis analysis = analyzeConnections(p, diags);
  ParallelPlan plan;
  plan.order = sortNodes(p, analysis);
  std::map<std::string, std::int64_t> factors = generateParallelFactors(
      p, analysis, opts.maxFactor, opts.intensityAware);

  std::map<std::string, const NodeOp *> byId;
  for (const NodeOp *node : allNodes(p))
    byId[node->id] = node;

  BankDemand globalState;
  std::map<std::string, std::vector<std::int64_t>> planned;

  for (const std::string &id : plan.order) {
    const NodeOp &node = *byId.at(id);
    std::vector<const Loop *> loops = loopsInPreorder(node.body);

    NodePlan np;
    np.factor = factors.at(id);
    np.constraints.assign(loops.size(), {});
    if (opts.connectionAware) {
      for (const Connection &c : analysis.connections) {
        if (!c.affine)
          continue;
        if (c.target == id && planned.count(c.source)) {
          const std::vector<std::int64_t> &uf = planned.at(c.source);
          for (std::size_t t = 0; t < loops.size(); ++t) {
            if (!c.permS2T[t] || !c.scaleS2T[*c.permS2T[t]])
              continue;
            Rational v = Rational(uf[*c.permS2T[t]]) * *c.scaleS2T[*c.permS2T[t]];
            np.constraints[t].push_back(std::max<std::int64_t>(v.ceil(), 1));
          }
        } else if (c.source == id && planned.count(c.target)) {
          const std::vector<std::int64_t> &uf = planned.at(c.target);
          for (std::size_t s = 0; s < loops.size(); ++s) {
            if (!c.permT2S[s] || !c.scaleT2S[*c.permT2S[s]])
              continue;
            Rational v = Rational(uf[*c.permT2S[s]]) * *c.scaleT2S[*c.permT2S[s]];
            np.constraints[s].push_back(std::max<std::int64_t>(v.ceil(), 1));
          }
        }
      }
    }

    std::optional<Choice> best;
    std::vector<std::int64_t> cur;
    enumerate(loops, np.constraints, opts.unrollReductions, np.factor, 0, 1,
              cur, [&](const std::vector<std::int64_t> &uf) {
                Choice c = evaluate(p, node, uf, opts.costModel,
                                    opts.connectionAware ? &globalState
                                                         : nullptr);
                if (!best || betterChoice(c, *best))
                  best = std::move(c);
              });
    if (!best) {
      if (diags)
        diags->push_back({Severity::Warning, id,
                          "constraints admit no unroll vector; falling back "
                          "to all-ones"});
      best = evaluate(p, node, std::vector<std::int64_t>(loops.size(), 1),
                      opts.costModel,
                      opts.connectionAware ? &globalState : nullptr);
    }
    np.unroll = best->uf;
    planned[id] = best->uf;
    if (opts.connectionAware)
      mergeDemand(globalState, best->demand);
    plan.nodes[id] = std::move(np);
  }
  return plan;
}

void applyPlan(Program &p, const ParallelPlan &plan) {
  std::set<std::string> seen;
  walk(p.top, [&](Op &op) {
    if (!op.is<NodeOp>())
      return;
    NodeOp &node = op.as<NodeOp>();
    auto it = plan.nodes.find(node.id);
    if (it == plan.nodes.end())
      return;
    seen.insert(node.id);
    std::vector<Loop *> loops = loopsInPreorder(node.body);
    if (loops.size() != it->second.unroll.size())
      throw std::invalid_argument("plan for node '" + node.id + "' has " +
                                  std::to_string(it->second.unroll.size()) +
                                  " factors for " +
                                  std::to_string(loops.size()) + " loops");
    for (std::size_t i = 0; i < loops.size(); ++i) {
      std::int64_t uf = it->second.unroll[i];
      if (uf < 1 || loops[i]->trip % uf != 0)
        throw std::invalid_argument("unroll factor " + std::to_string(uf) +
                                    " does not divide trip count of loop '" +
                                    loops[i]->iv + "' in node '" + node.id +
                                    "'");
      loops[i]->unroll = uf;
    }
  });
  for (const auto &[id, np] : plan.nodes)
    if (!seen.count(id))
      throw std::invalid_argument("plan names unknown node '" + id + "'");
}

ParallelPlan parallelize(Program &p, const ParallelizeOptions &opts,
                         DiagList *diags) {
  ParallelPlan plan = planParallelization(p, opts, diags);
  applyPlan(p, plan);
  return plan;
}

void partitionArrays(Program &p, DiagList *diags) {
  BankDemand demand = bankDemand(p, p.top);
  for (BufferSpec &spec : p.arrays) {
    spec.partition.assign(spec.shape.size(), DimPartition{});
    auto it = demand.find(spec.id);
    if (it == demand.end())
      continue;
    for (std::size_t d = 0; d < spec.shape.size(); ++d) {
      std::int64_t factor = it->second[d];
      if (factor > spec.shape[d]) {
        if (diags)
          diags->push_back(
              {Severity::Warning, spec.id,
               "partition factor " + std::to_string(factor) + " on dim " +
                   std::to_string(d) + " clamped to extent " +
                   std::to_string(spec.shape[d])});
        factor = spec.shape[d];
      }
      spec.partition[d] =
          factor > 1 ? DimPartition{PartitionKind::Cyclic, factor}
                     : DimPartition{};
    }
  }
}

namespace {

void collectIvs(const Region &r, std::set<std::string> &ivs) {
  walk(r, "", [&](const Op &op, const std::string &) {
    if (const auto *l = std::get_if<Loop>(&op.v))
      ivs.insert(l->iv);
  });
}

// Prefix every use of `iv` in a dim index with the outer tile counter.
void retargetAccesses(Region &r, const std::string &iv,
                      const std::string &outerIv, std::int64_t tile) {
  walk(r, [&](Op &op) {
    auto rewrite = [&](Access &a) {
      for (DimIndex &di : a.index) {
        std::vector<AccessTerm> terms;
        for (const AccessTerm &t : di.terms) {
          if (t.iv == iv)
            terms.push_back({outerIv, t.stride * Rational(tile)});
          terms.push_back(t);
        }
        di.terms = std::move(terms);
      }
    };
    if (auto *c = std::get_if<Compute>(&op.v)) {
      rewrite(c->target);
      for (Access &a : c->reads)
        rewrite(a);
    }
  });
}

int tileInRegion(Region &r, std::int64_t tileSize,
                 std::set<std::string> &ivs) {
  int count = 0;
  for (Op &op : r.ops) {
    if (!op.is<Loop>()) {
      for (Region *sub : subRegions(op))
        count += tileInRegion(*sub, tileSize, ivs);
      continue;
    }
    Loop &l = op.as<Loop>();
    if (l.trip > tileSize && l.trip % tileSize == 0 && l.unroll == 1) {
      std::string outerIv = l.iv + "o";
      while (ivs.count(outerIv))
        outerIv += "o";
      ivs.insert(outerIv);

      retargetAccesses(l.body, l.iv, outerIv, tileSize);
      Loop inner;
      inner.iv = l.iv;
      inner.trip = tileSize;
      inner.reduction = l.reduction;
      inner.body = std::move(l.body);

      Loop outer;
      outer.iv = outerIv;
      outer.trip = l.trip / tileSize;
      outer.reduction = l.reduction;
      outer.body.ops.push_back(Op{std::move(inner)});
      op = Op{std::move(outer)};
      ++count;
    }
    // Visit the (possibly re-rooted) subtree for further candidates.
    count += tileInRegion(op.as<Loop>().body, tileSize, ivs);
  }
  return count;
}

} // namespace

int tileLoops(Program &p, std::int64_t tileSize) {
  if (tileSize <= 1)
    return 0;
  std::set<std::string> ivs;
  collectIvs(p.top, ivs);
  return tileInRegion(p.top, tileSize, ivs);
}

} // namespace hida
