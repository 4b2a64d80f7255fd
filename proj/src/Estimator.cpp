//===- Estimator.cpp - Analytic quality-of-results model -------------------===//

#include "hida/Estimator.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hida {

namespace {

std::int64_t ceilDiv(std::int64_t a, std::int64_t b) {
  return (a + b - 1) / b;
}

struct NestStats {
  std::int64_t iters = 1;
  std::int64_t unroll = 1;
  bool unrolledReduction = false;
  std::int64_t accumII = 1; // II of the accumulation op, if any
};

void scanNest(const Loop &l, const Program &p, const CostModel &cm,
              NestStats &s) {
  s.iters *= l.trip;
  s.unroll *= l.unroll;
  if (l.reduction && l.unroll > 1)
    s.unrolledReduction = true;
  for (const Op &op : l.body.ops) {
    if (op.is<Loop>()) {
      scanNest(op.as<Loop>(), p, cm, s);
    } else if (op.is<Compute>()) {
      const Compute &c = op.as<Compute>();
      if (!c.accumulate)
        continue;
      const BufferSpec *spec = p.findArray(c.target.array);
      std::int64_t ii = spec && spec->elem == ElemType::Float32
                            ? cm.latFloatAdd
                            : cm.latIntOp;
      s.accumII = std::max(s.accumII, ii);
    }
  }
}

// Pipelined perfect-nest model: one iteration enters per cycle unless an
// unrolled reduction serializes on the accumulation latency.
std::int64_t nestLatency(const Loop &l, const Program &p, const CostModel &cm) {
  NestStats s;
  scanNest(l, p, cm, s);
  std::int64_t ii = s.unrolledReduction ? s.accumII : 1;
  return ceilDiv(s.iters, s.unroll) * ii;
}

std::int64_t opWeight(ExprKind kind, bool isFloat, const CostModel &cm) {
  switch (kind) {
  case ExprKind::Add:
  case ExprKind::Sub:
    return isFloat ? cm.dspFloatAdd : cm.dspIntOp;
  case ExprKind::Mul:
  case ExprKind::Div:
    return isFloat ? cm.dspFloatMul : cm.dspIntOp;
  default:
    return 0;
  }
}

struct DspScan {
  const Program &p;
  const CostModel &cm;
  std::int64_t total = 0;

  void run(const Region &r, std::int64_t unrollProduct) {
    for (const Op &op : r.ops) {
      if (op.is<Loop>()) {
        const Loop &l = op.as<Loop>();
        run(l.body, unrollProduct * l.unroll);
      } else if (op.is<Compute>()) {
        const Compute &c = op.as<Compute>();
        const BufferSpec *spec = p.findArray(c.target.array);
        bool isFloat = spec && spec->elem == ElemType::Float32;
        std::int64_t perIter = 0;
        for (const ExprNode &e : c.expr)
          perIter += opWeight(e.kind, isFloat, cm);
        if (c.accumulate)
          perIter += isFloat ? cm.dspFloatAdd : cm.dspIntOp;
        total += perIter * unrollProduct;
      } else {
        for (const Region *sub : subRegions(op))
          run(*sub, unrollProduct);
      }
    }
  }
};

std::int64_t bramOf(const Program &p, const std::set<std::string> &buffers) {
  std::int64_t total = 0;
  for (const std::string &id : buffers) {
    const BufferSpec *spec = p.findArray(id);
    if (spec && spec->placement == Placement::Onchip)
      total += spec->banks() * spec->depth;
  }
  return total;
}

} // namespace

CostModel parseCostModel(const std::string &text) {
  CostModel cm;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    auto hash = line.find('#');
    if (hash != std::string::npos)
      line = line.substr(0, hash);
    auto notSpace = [](unsigned char c) { return !std::isspace(c); };
    auto begin = std::find_if(line.begin(), line.end(), notSpace);
    if (begin == line.end())
      continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("cost model line " + std::to_string(lineNo) +
                                  ": expected key = value");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t");
      auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto asInt = [&] { return std::stoll(value); };
    if (key == "clock_mhz")
      cm.clockMHz = std::stod(value);
    else if (key == "pipeline_depth")
      cm.pipelineDepth = asInt();
    else if (key == "lat_int_op")
      cm.latIntOp = asInt();
    else if (key == "lat_float_add")
      cm.latFloatAdd = asInt();
    else if (key == "lat_float_mul")
      cm.latFloatMul = asInt();
    else if (key == "dsp_int_op")
      cm.dspIntOp = asInt();
    else if (key == "dsp_float_add")
      cm.dspFloatAdd = asInt();
    else if (key == "dsp_float_mul")
      cm.dspFloatMul = asInt();
    else if (key == "lut_control")
      cm.lutControlPerNode = asInt();
    else if (key == "lut_per_loop")
      cm.lutPerLoop = asInt();
    else if (key == "lut_addr_scale")
      cm.lutAddrScale = asInt();
    else if (key == "external_memory")
      cm.externalMemory = value == "true" || value == "1";
    else
      throw std::invalid_argument("cost model line " + std::to_string(lineNo) +
                                  ": unknown key '" + key + "'");
  }
  return cm;
}

NodeEstimate estimateNode(const Program &p, const NodeOp &node,
                          const CostModel &cm) {
  NodeEstimate e;
  for (const Op &op : node.body.ops) {
    if (op.is<Loop>()) {
      e.latency += nestLatency(op.as<Loop>(), p, cm);
    } else if (op.is<CopyOp>()) {
      const BufferSpec *spec = p.findArray(op.as<CopyOp>().src);
      e.latency += spec ? spec->elementCount() : 0;
    } else if (op.is<Compute>()) {
      e.latency += 1;
    }
  }
  e.latency += cm.pipelineDepth;

  DspScan dsp{p, cm};
  dsp.run(node.body, 1);
  e.dsp = dsp.total;

  std::set<std::string> buffers;
  for (const std::string &id : referencedBuffers(node.body))
    buffers.insert(id);
  walk(node.body, "", [&](const Op &op, const std::string &) {
    if (const auto *alloc = std::get_if<AllocOp>(&op.v))
      buffers.insert(alloc->buffer);
  });
  e.bram = bramOf(p, buffers);

  e.lut = cm.lutControlPerNode;
  for (const Loop *l : loopsInPreorder(node.body))
    e.lut += cm.lutPerLoop + ceilDiv(cm.lutAddrScale, l->trip);

  e.ops = intensity(node.body);
  return e;
}

QoR estimateProgram(const Program &p, const CostModel &cm) {
  QoR q;
  walk(p.top, "", [&](const Op &op, const std::string &) {
    if (!op.is<NodeOp>())
      return;
    const NodeOp &node = op.as<NodeOp>();
    NodeEstimate e = estimateNode(p, node, cm);
    q.nodes.push_back({node.id, e});
    q.interval = std::max(q.interval, e.latency);
    q.dsp += e.dsp;
    q.lut += e.lut;
    q.ops += e.ops;
  });
  std::set<std::string> all;
  for (const BufferSpec &b : p.arrays)
    all.insert(b.id);
  q.bram = bramOf(p, all);
  if (q.interval > 0)
    q.throughput = cm.clockHz() / static_cast<double>(q.interval);
  q.dspEfficiency =
      q.dsp > 0 ? reportEfficiency(q.throughput, static_cast<double>(q.ops),
                                   static_cast<double>(q.dsp), cm.clockHz())
                : 0.0;
  return q;
}

double reportEfficiency(double throughputPerSec, double opsPerSample,
                        double dsp, double freqHz) {
  if (dsp <= 0)
    throw std::invalid_argument("DSP efficiency undefined for zero DSPs");
  if (freqHz <= 0)
    throw std::invalid_argument("DSP efficiency undefined for zero frequency");
  return throughputPerSec * opsPerSample / (dsp * freqHz);
}

} // namespace hida
