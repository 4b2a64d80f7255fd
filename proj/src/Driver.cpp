//===- Driver.cpp - Pipeline orchestration ----------------------------------===//

#include "hida/Driver.h"

#include "hida/Lowering.h"
#include "hida/Serialize.h"

#include <algorithm>
#include <cstdio>

namespace hida {

namespace {

std::string formatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string formatVector(const std::vector<std::int64_t> &v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i)
      s += ", ";
    s += std::to_string(v[i]);
  }
  return s + "]";
}

} // namespace

const std::vector<std::string> &pipelineStages() {
  static const std::vector<std::string> stages = {
      "parse",     "construct",   "fuse",      "lower",    "eliminate",
      "balance",   "tile",        "parallelize", "partition"};
  return stages;
}

PipelineError::PipelineError(const std::string &stage, DiagList diags)
    : std::runtime_error("verification failed after stage '" + stage + "'" +
                         (diags.empty() ? "" : ": " + toString(diags.front()))),
      stage(stage), diags(std::move(diags)) {}

CompileResult runPipeline(const Program &input, const PipelineOptions &opts) {
  CompileResult result;
  result.program = input;
  Program &p = result.program;

  bool dumpAll = std::find(opts.dumpAfter.begin(), opts.dumpAfter.end(),
                           "all") != opts.dumpAfter.end();
  auto afterStage = [&](const std::string &stage) {
    DiagList diags = verify(p);
    for (const Diag &d : diags)
      if (d.severity == Severity::Warning)
        result.warnings.push_back(d);
    if (hasErrors(diags))
      throw PipelineError(stage, std::move(diags));
    if (dumpAll || std::find(opts.dumpAfter.begin(), opts.dumpAfter.end(),
                             stage) != opts.dumpAfter.end())
      result.dumps.push_back({stage, dump(p)});
  };

  afterStage("parse");

  constructDataflow(p);
  afterStage("construct");

  if (opts.fuse) {
    FusionOptions fo;
    fo.patterns = opts.fusionPatterns;
    fuseTasks(p, fo);
    simplifyHierarchy(p);
  }
  afterStage("fuse");

  lowerToStructural(p);
  afterStage("lower");

  eliminateMultiProducers(p);
  afterStage("eliminate");

  if (opts.balance) {
    if (*opts.balance == BalanceMode::SoftFifo &&
        !opts.costModel.externalMemory)
      throw PipelineError(
          "balance", {{Severity::Error, "",
                       "soft-FIFO balancing needs external memory, which the "
                       "cost model declares unavailable"}});
    BalanceOptions bo;
    bo.mode = *opts.balance;
    balancePaths(p, bo);
  }
  afterStage("balance");

  if (opts.tileSize > 1)
    tileLoops(p, opts.tileSize);
  afterStage("tile");

  ParallelizeOptions po;
  po.maxFactor = opts.maxParallelFactor;
  po.intensityAware = opts.intensityAware;
  po.connectionAware = opts.connectionAware;
  po.unrollReductions = opts.unrollReductions;
  po.costModel = opts.costModel;
  result.plan = parallelize(p, po, &result.warnings);
  afterStage("parallelize");

  partitionArrays(p, &result.warnings);
  afterStage("partition");

  result.qor = estimateProgram(p, opts.costModel);

  EmitOptions eo;
  eo.plain = opts.plain;
  result.emitted = emitCpp(p, eo);
  return result;
}

std::string qorReport(const std::string &name, const CompileResult &result,
                      const CostModel &cm) {
  const QoR &q = result.qor;
  std::string s;
  s += "name = \"" + name + "\"\n";
  s += "clock_mhz = " + formatDouble(cm.clockMHz) + "\n";
  s += "interval = " + std::to_string(q.interval) + "\n";
  s += "throughput = " + formatDouble(q.throughput) + "\n";
  s += "ops = " + std::to_string(q.ops) + "\n";
  s += "dsp = " + std::to_string(q.dsp) + "\n";
  s += "bram = " + std::to_string(q.bram) + "\n";
  s += "lut = " + std::to_string(q.lut) + "\n";
  s += "dsp_efficiency = " + formatDouble(q.dspEfficiency) + "\n";
  for (const std::string &id : result.plan.order) {
    const NodePlan &np = result.plan.nodes.at(id);
    s += "plan." + id + ".factor = " + std::to_string(np.factor) + "\n";
    s += "plan." + id + ".unroll = " + formatVector(np.unroll) + "\n";
  }
  for (const auto &[id, est] : q.nodes) {
    s += "nodes." + id + ".latency = " + std::to_string(est.latency) + "\n";
    s += "nodes." + id + ".dsp = " + std::to_string(est.dsp) + "\n";
    s += "nodes." + id + ".bram = " + std::to_string(est.bram) + "\n";
    s += "nodes." + id + ".lut = " + std::to_string(est.lut) + "\n";
  }
  for (const BufferSpec &a : result.program.arrays) {
    if (a.partition.empty())
      continue;
    bool partitioned = false;
    for (const DimPartition &dp : a.partition)
      partitioned = partitioned || dp.factor > 1;
    if (!partitioned)
      continue;
    std::vector<std::int64_t> factors;
    for (const DimPartition &dp : a.partition)
      factors.push_back(dp.factor);
    s += "partition." + a.id + " = " + formatVector(factors) + "\n";
    s += "banks." + a.id + " = " + std::to_string(a.banks()) + "\n";
  }
  return s;
}

std::string ablate(const Program &input, const AblateOptions &opts) {
  std::string csv = "factor,tile,mode,throughput,dsp,bram\n";
  struct Mode {
    const char *name;
    bool ia;
    bool ca;
  };
  const Mode modes[] = {{"ia+ca", true, true},
                        {"ia", true, false},
                        {"ca", false, true},
                        {"naive", false, false}};
  for (std::int64_t factor : opts.factors) {
    for (std::int64_t tile : opts.tiles) {
      for (const Mode &m : modes) {
        PipelineOptions po = opts.base;
        po.maxParallelFactor = factor;
        po.tileSize = tile;
        po.intensityAware = m.ia;
        po.connectionAware = m.ca;
        po.dumpAfter.clear();
        CompileResult r = runPipeline(input, po);
        csv += std::to_string(factor) + "," + std::to_string(tile) + "," +
               m.name + "," + formatDouble(r.qor.throughput) + "," +
               std::to_string(r.qor.dsp) + "," + std::to_string(r.qor.bram) +
               "\n";
      }
    }
  }
  return csv;
}

} // namespace hida
