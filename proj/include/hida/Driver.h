//===- Driver.h - Pipeline orchestration -----------------------*- C++ -*-===//
//
// Runs the full stage chain over a parsed program:
//
//   construct -> fuse -> lower -> eliminate -> balance -> tile ->
//   parallelize -> partition -> estimate -> emit
//
// verify() runs after every stage; the first stage that leaves errors
// aborts the pipeline with a PipelineError naming it. Warnings accumulate
// into the result. Per-stage IR dumps can be requested by stage name.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "hida/Diagnostics.h"
#include "hida/Emit.h"
#include "hida/Estimator.h"
#include "hida/FunctionalOpt.h"
#include "hida/IR.h"
#include "hida/Parallelize.h"
#include "hida/StructuralOpt.h"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hida {

// Stage names in pipeline order, as accepted by --dump-after.
const std::vector<std::string> &pipelineStages();

struct PipelineOptions {
  std::int64_t maxParallelFactor = 1;
  std::int64_t tileSize = 1; // <= 1 leaves loops untouched
  bool intensityAware = true;
  bool connectionAware = true;
  bool unrollReductions = false;
  std::optional<BalanceMode> balance = BalanceMode::Onchip; // nullopt = off
  bool fuse = true;
  std::vector<std::string> fusionPatterns = defaultFusionPatterns();
  CostModel costModel;
  bool plain = false;
  std::vector<std::string> dumpAfter; // stage names, or the single entry "all"
};

struct StageDump {
  std::string stage;
  std::string text;
};

struct CompileResult {
  Program program; // final IR
  ParallelPlan plan;
  QoR qor;
  EmitResult emitted;
  DiagList warnings;
  std::vector<StageDump> dumps;
};

class PipelineError : public std::runtime_error {
public:
  PipelineError(const std::string &stage, DiagList diags);

  std::string stage;
  DiagList diags;
};

CompileResult runPipeline(const Program &input, const PipelineOptions &opts);

// TOML-style key/value QoR report: program totals, DSP efficiency,
// per-node plan factors and estimates. Deterministic.
std::string qorReport(const std::string &name, const CompileResult &result,
                      const CostModel &cm);

struct AblateOptions {
  std::vector<std::int64_t> factors;
  std::vector<std::int64_t> tiles; // tile size 1 = untiled
  PipelineOptions base;            // ia/ca fields are overridden per mode
};

// CSV grid over factor x tile x {ia+ca, ia, ca, naive} with estimated
// throughput, DSP and BRAM per cell. Empty factor or tile lists produce a
// header-only CSV.
std::string ablate(const Program &input, const AblateOptions &opts);

} // namespace hida
