//===- Estimator.h - Analytic quality-of-results model --------*- C++ -*-===//
//
// Latency, DSP, BRAM and LUT estimates for structural programs, plus the
// schedule-level throughput/efficiency report the DSE and the CLI consume.
// All constants live in CostModel and can be overridden from a config file.
//
//===----------------------------------------------------------------------===//

#pragma once

#include "hida/IR.h"

#include <cstdint>
#include <string>
#include <vector>

namespace hida {

struct CostModel {
  double clockMHz = 200.0;
  std::int64_t pipelineDepth = 4; // charged once per node
  // Initiation intervals of the accumulation op when a reduction loop is
  // unrolled; pipelined nests otherwise run at II = 1.
  std::int64_t latIntOp = 1;
  std::int64_t latFloatAdd = 4;
  std::int64_t latFloatMul = 3;
  // DSP equivalents per operator instance.
  std::int64_t dspIntOp = 1;
  std::int64_t dspFloatAdd = 2;
  std::int64_t dspFloatMul = 3;
  // LUT model: fixed control per node plus per-loop address generation that
  // grows as trip counts (tiles) shrink.
  std::int64_t lutControlPerNode = 200;
  std::int64_t lutPerLoop = 16;
  std::int64_t lutAddrScale = 256;
  // Whether the target platform exposes external memory (soft FIFOs need it).
  bool externalMemory = true;

  double clockHz() const { return clockMHz * 1e6; }
};

// Parses `key = value` lines (# comments allowed). Unknown keys are errors;
// missing keys keep their defaults.
CostModel parseCostModel(const std::string &text);

struct NodeEstimate {
  std::int64_t latency = 0; // cycles
  std::int64_t dsp = 0;
  std::int64_t bram = 0; // on-chip banks x depth over referenced buffers
  std::int64_t lut = 0;
  std::int64_t ops = 0; // intensity
};

struct QoR {
  std::vector<std::pair<std::string, NodeEstimate>> nodes;
  std::int64_t interval = 0; // max node latency
  std::int64_t dsp = 0;
  std::int64_t bram = 0; // program-wide, counted once per buffer
  std::int64_t lut = 0;
  std::int64_t ops = 0;      // per dataflow frame
  double throughput = 0;     // frames per second = clock / interval
  double dspEfficiency = 0;  // throughput x ops / (dsp x clock); 0 if no DSPs
};

NodeEstimate estimateNode(const Program &p, const NodeOp &node,
                          const CostModel &cm);

QoR estimateProgram(const Program &p, const CostModel &cm);

// throughput x ops / (dsp x freq). Throws std::invalid_argument when dsp or
// freq is not positive.
double reportEfficiency(double throughputPerSec, double opsPerSample,
                        double dsp, double freqHz);

} // namespace hida
