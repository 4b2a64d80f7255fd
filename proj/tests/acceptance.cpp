//===- acceptance.cpp - End-to-end behavior gate ----------------------------//
//
// One self-contained check per shipped guarantee, each printing a single
// PASS/FAIL line. The process exits nonzero if any check fails. Tolerances
// are pinned inline next to the checks that use them.
//
//===----------------------------------------------------------------------===//

#include "TestUtil.h"

#include "hida/Corpus.h"
#include "hida/Driver.h"
#include "hida/Estimator.h"
#include "hida/IR.h"
#include "hida/Interp.h"
#include "hida/Parallelize.h"
#include "hida/Serialize.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace hida;
using hida::test::outputsAgree;
using hida::test::structuralOf;
using hida::test::totalBanks;

namespace fs = std::filesystem;

namespace {

class Gate {
public:
  void criterion(const std::string &label,
                 const std::function<void(Gate &)> &body) {
    failure_.clear();
    try {
      body(*this);
    } catch (const std::exception &e) {
      if (failure_.empty())
        failure_ = std::string("exception: ") + e.what();
    }
    if (failure_.empty()) {
      std::cout << "PASS: " << label << "\n";
    } else {
      std::cout << "FAIL: " << label << " (" << failure_ << ")\n";
      failed_ = true;
    }
  }

  void expect(bool ok, const std::string &detail) {
    if (!ok && failure_.empty())
      failure_ = detail;
  }

  int finish() const { return failed_ ? 1 : 0; }

private:
  std::string failure_;
  bool failed_ = false;
};

std::string show(const std::vector<std::int64_t> &v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + std::to_string(v[i]);
  return s + "]";
}

ParallelizeOptions modeOptions(std::int64_t maxFactor, bool ia, bool ca) {
  ParallelizeOptions opts;
  opts.maxFactor = maxFactor;
  opts.intensityAware = ia;
  opts.connectionAware = ca;
  return opts;
}

const Connection *connectionFor(const ConnectionAnalysis &a,
                                const std::string &buffer) {
  for (const Connection &c : a.connections)
    if (c.buffer == buffer)
      return &c;
  return nullptr;
}

std::string optIdxStr(const std::vector<std::optional<std::size_t>> &v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + (v[i] ? std::to_string(*v[i]) : std::string("-"));
  return s + "]";
}

// Producer counts per buffer across every schedule of the program.
std::map<std::string, int> producerCounts(const Program &p) {
  std::map<std::string, int> writers;
  walk(p.top, "", [&](const Op &op, const std::string &) {
    if (!op.is<NodeOp>())
      return;
    for (const NodeInput &in : op.as<NodeOp>().inputs)
      if (in.effect != Effect::RO)
        ++writers[in.buffer];
  });
  return writers;
}

struct HostRun {
  bool ok = false;
  std::string detail;
};

// Compiles the plain-C++ pair for `name`, runs it on `seeds`, and compares
// the printed outputs with the interpreter. Pinned tolerance: int arrays
// exact, float arrays within 4 ulp.
HostRun runHostComparison(const std::string &name,
                          const std::vector<std::uint64_t> &seeds,
                          const fs::path &dir) {
  HostRun res;
  Program base = corpusProgram(name);

  PipelineOptions opts;
  opts.maxParallelFactor = 8;
  opts.plain = true;
  CompileResult compiled = runPipeline(base, opts);

  fs::create_directories(dir);
  std::ofstream(dir / compiled.emitted.headerName) << compiled.emitted.header;
  std::ofstream(dir / compiled.emitted.sourceName) << compiled.emitted.source;

  // Pure inputs stream in on stdin; outputs print one array per line in
  // declaration order.
  const Program &final = compiled.program;
  std::ostringstream main;
  main << "#include \"" << compiled.emitted.headerName << "\"\n"
       << "#include <cstdio>\n\n"
       << "int main() {\n";
  std::vector<const BufferSpec *> params, outputs;
  for (const BufferSpec &b : final.arrays) {
    if (b.placement != Placement::External)
      continue;
    params.push_back(&b);
    if (b.output)
      outputs.push_back(&b);
  }
  for (const BufferSpec *b : params) {
    const char *elem = b->elem == ElemType::Int32 ? "int" : "float";
    main << "  static " << elem << " " << b->id;
    for (std::int64_t d : b->shape)
      main << "[" << d << "]";
    main << " = {};\n";
    if (!b->output) {
      main << "  for (int i = 0; i < " << b->elementCount() << "; ++i) {\n"
           << "    double v; std::scanf(\"%lf\", &v);\n"
           << "    ((" << elem << " *)" << b->id << ")[i] = (" << elem
           << ")v;\n  }\n";
    }
  }
  main << "  " << compiled.emitted.topSymbol << "(";
  for (std::size_t i = 0; i < params.size(); ++i)
    main << (i ? ", " : "") << params[i]->id;
  main << ");\n";
  for (const BufferSpec *b : outputs) {
    main << "  for (int i = 0; i < " << b->elementCount() << "; ++i)\n"
         << "    std::printf(\"%.17g\\n\", (double)((const "
         << (b->elem == ElemType::Int32 ? "int" : "float") << " *)" << b->id
         << ")[i]);\n";
  }
  main << "  return 0;\n}\n";
  std::ofstream(dir / "main.cpp") << main.str();

  fs::path exe = dir / "host";
  // Contraction stays off so host arithmetic matches the interpreter's
  // per-operation float rounding.
  std::string cmd = std::string(HIDA_HOST_CXX) +
                    " -std=c++20 -O2 -ffp-contract=off -o " + exe.string() +
                    " " + (dir / "main.cpp").string() + " " +
                    (dir / compiled.emitted.sourceName).string() + " 2>" +
                    (dir / "cc.log").string();
  if (std::system(cmd.c_str()) != 0) {
    res.detail = name + ": host compile failed, see " +
                 (dir / "cc.log").string();
    return res;
  }

  for (std::uint64_t seed : seeds) {
    auto inputs = seededInputs(base, seed);
    InterpResult expect = interpret(base, inputs);

    fs::path stdinFile = dir / "stdin.txt";
    {
      std::ofstream in(stdinFile);
      for (const BufferSpec *b : params) {
        if (b->output)
          continue;
        char buf[32];
        for (double v : inputs.at(b->id)) {
          std::snprintf(buf, sizeof(buf), "%.17g\n", v);
          in << buf;
        }
      }
    }
    fs::path outFile = dir / "stdout.txt";
    std::string runCmd = exe.string() + " < " + stdinFile.string() + " > " +
                         outFile.string();
    if (std::system(runCmd.c_str()) != 0) {
      res.detail = name + ": host binary failed on seed " +
                   std::to_string(seed);
      return res;
    }

    std::ifstream out(outFile);
    for (const BufferSpec *b : outputs) {
      const std::vector<double> &want = expect.outputs.at(b->id);
      for (std::size_t i = 0; i < want.size(); ++i) {
        double got;
        if (!(out >> got)) {
          res.detail = name + ": host printed too few values";
          return res;
        }
        bool close =
            b->elem == ElemType::Int32
                ? got == want[i]
                : hida::test::ulpDistance(float(got), float(want[i])) <= 4;
        if (!close) {
          res.detail = name + " seed " + std::to_string(seed) + " " + b->id +
                       "[" + std::to_string(i) + "]: host " +
                       std::to_string(got) + " vs interp " +
                       std::to_string(want[i]);
          return res;
        }
      }
    }
  }
  res.ok = true;
  return res;
}

} // namespace

int main() {
  Gate gate;

  gate.criterion(
      "connection analysis derives both producer feed maps of the strided "
      "matmul exactly, in under a second",
      [](Gate &g) {
        auto start = std::chrono::steady_clock::now();
        Program p = structuralOf("listing1");
        ConnectionAnalysis a = analyzeConnections(p);

        using OptIdx = std::vector<std::optional<std::size_t>>;
        using OptScale = std::vector<std::optional<Rational>>;
        const Connection *ca = connectionFor(a, "A");
        g.expect(ca != nullptr, "no connection through A");
        if (ca) {
          g.expect(ca->source == "node0" && ca->target == "node2",
                   "A flows " + ca->source + " -> " + ca->target);
          g.expect(ca->permS2T == OptIdx{0, std::nullopt, 1},
                   "A permS2T = " + optIdxStr(ca->permS2T));
          g.expect(ca->permT2S == OptIdx{0, 2},
                   "A permT2S = " + optIdxStr(ca->permT2S));
          g.expect(ca->scaleS2T == OptScale{Rational(1, 2), Rational(1)},
                   "A scaleS2T mismatch");
          g.expect(ca->scaleT2S ==
                       OptScale{Rational(2), std::nullopt, Rational(1)},
                   "A scaleT2S mismatch");
        }
        const Connection *cb = connectionFor(a, "B");
        g.expect(cb != nullptr, "no connection through B");
        if (cb) {
          g.expect(cb->source == "node1" && cb->target == "node2",
                   "B flows " + cb->source + " -> " + cb->target);
          g.expect(cb->permS2T == OptIdx{std::nullopt, 1, 0},
                   "B permS2T = " + optIdxStr(cb->permS2T));
          g.expect(cb->permT2S == OptIdx{2, 1},
                   "B permT2S = " + optIdxStr(cb->permT2S));
          g.expect(cb->scaleS2T == OptScale{Rational(1), Rational(1)},
                   "B scaleS2T mismatch");
          g.expect(cb->scaleT2S ==
                       OptScale{std::nullopt, Rational(1), Rational(1)},
                   "B scaleT2S mismatch");
        }
        double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        g.expect(secs < 1.0, "analysis took " + std::to_string(secs) + "s");
      });

  gate.criterion(
      "intensity scaling, planned unrolls and neighbor constraints land on "
      "the expected vectors",
      [](Gate &g) {
        Program p = structuralOf("listing1");
        ConnectionAnalysis a = analyzeConnections(p);
        g.expect(a.intensities.at("node0") == 512 &&
                     a.intensities.at("node1") == 256 &&
                     a.intensities.at("node2") == 4096,
                 "intensities " + std::to_string(a.intensities.at("node0")) +
                     "/" + std::to_string(a.intensities.at("node1")) + "/" +
                     std::to_string(a.intensities.at("node2")));

        auto aware = generateParallelFactors(p, a, 32, true);
        g.expect(aware.at("node0") == 4 && aware.at("node1") == 2 &&
                     aware.at("node2") == 32,
                 "intensity-aware factors " +
                     std::to_string(aware.at("node0")) + "/" +
                     std::to_string(aware.at("node1")) + "/" +
                     std::to_string(aware.at("node2")));
        auto flat = generateParallelFactors(p, a, 32, false);
        g.expect(flat.at("node0") == 32 && flat.at("node1") == 32 &&
                     flat.at("node2") == 32,
                 "flat factors should all be 32");

        ParallelPlan plan =
            planParallelization(p, modeOptions(32, true, true));
        g.expect(plan.nodes.at("node0").unroll ==
                     std::vector<std::int64_t>{4, 1},
                 "node0 unroll " + show(plan.nodes.at("node0").unroll));
        g.expect(plan.nodes.at("node1").unroll ==
                     std::vector<std::int64_t>{1, 2},
                 "node1 unroll " + show(plan.nodes.at("node1").unroll));
        g.expect(plan.nodes.at("node2").unroll ==
                     std::vector<std::int64_t>{4, 8, 1},
                 "node2 unroll " + show(plan.nodes.at("node2").unroll));

        g.expect(plan.nodes.at("node0").constraints ==
                     std::vector<std::vector<std::int64_t>>{{8}, {1}},
                 "node0 constraints mismatch");
        g.expect(plan.nodes.at("node1").constraints ==
                     std::vector<std::vector<std::int64_t>>{{1}, {8}},
                 "node1 constraints mismatch");
      });

  gate.criterion(
      "partitioning yields the connection-aware factors and the naive bank "
      "blowup",
      [](Gate &g) {
        auto banksFor = [](bool ia, bool ca) {
          Program p = structuralOf("listing1");
          parallelize(p, modeOptions(32, ia, ca));
          partitionArrays(p);
          return p;
        };

        Program aware = banksFor(true, true);
        auto dims = [](const Program &p, const char *id) {
          std::vector<std::int64_t> out;
          for (const DimPartition &d : p.findArray(id)->partition)
            out.push_back(d.factor);
          return out;
        };
        g.expect(dims(aware, "A") == std::vector<std::int64_t>{8, 1},
                 "A partition " + show(dims(aware, "A")));
        g.expect(dims(aware, "B") == std::vector<std::int64_t>{1, 8},
                 "B partition " + show(dims(aware, "B")));
        g.expect(dims(aware, "C") == std::vector<std::int64_t>{4, 8},
                 "C partition " + show(dims(aware, "C")));
        g.expect(aware.findArray("A")->banks() == 8 &&
                     aware.findArray("B")->banks() == 8 &&
                     aware.findArray("C")->banks() == 32,
                 "aware banks " +
                     std::to_string(aware.findArray("A")->banks()) + "/" +
                     std::to_string(aware.findArray("B")->banks()) + "/" +
                     std::to_string(aware.findArray("C")->banks()));

        Program naive = banksFor(false, false);
        g.expect(naive.findArray("A")->banks() == 64 &&
                     naive.findArray("B")->banks() == 64 &&
                     naive.findArray("C")->banks() == 32,
                 "naive banks " +
                     std::to_string(naive.findArray("A")->banks()) + "/" +
                     std::to_string(naive.findArray("B")->banks()) + "/" +
                     std::to_string(naive.findArray("C")->banks()));
      });

  gate.criterion("planning visits the consumer first, then the heavier feed",
                 [](Gate &g) {
                   Program p = structuralOf("listing1");
                   ConnectionAnalysis a = analyzeConnections(p);
                   std::vector<std::string> order = sortNodes(p, a);
                   g.expect(order == std::vector<std::string>{"node2",
                                                              "node0",
                                                              "node1"},
                            "order " + (order.empty() ? "<empty>"
                                                      : order[0] + "," +
                                                            order[1] + "," +
                                                            order[2]));
                 });

  gate.criterion(
      "every pipeline stage preserves interpreter results on 100 seeds per "
      "corpus program, in under a minute",
      [](Gate &g) {
        auto start = std::chrono::steady_clock::now();
        PipelineOptions opts;
        opts.maxParallelFactor = 8;
        opts.tileSize = 2;
        opts.dumpAfter = {"all"};

        for (const CorpusEntry &entry : corpus()) {
          Program base = corpusProgram(entry.name);
          CompileResult r = runPipeline(base, opts);

          std::vector<Program> stagePrograms;
          for (const StageDump &d : r.dumps)
            stagePrograms.push_back(load(d.text));
          if (stagePrograms.size() != 9) {
            g.expect(false, entry.name + ": expected 9 stage dumps, got " +
                                std::to_string(stagePrograms.size()));
            return;
          }

          for (std::uint64_t seed = 0; seed < 100; ++seed) {
            auto inputs = seededInputs(stagePrograms.front(), seed);
            InterpResult prev = interpret(stagePrograms.front(), inputs);
            for (std::size_t i = 1; i < stagePrograms.size(); ++i) {
              InterpResult cur = interpret(stagePrograms[i], inputs);
              // Pinned tolerance: int arrays exact, float within 4 ulp.
              if (!outputsAgree(stagePrograms[i], prev, cur, 4)) {
                g.expect(false, entry.name + " seed " +
                                    std::to_string(seed) +
                                    " diverges after stage " +
                                    r.dumps[i].stage);
                return;
              }
              prev = cur;
            }
          }
        }
        double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        g.expect(secs < 60.0, "suite took " + std::to_string(secs) + "s");
      });

  gate.criterion(
      "after producer elimination every buffer has exactly one writer, and "
      "external multi-writers collapse into one fused node",
      [](Gate &g) {
        for (const CorpusEntry &entry : corpus()) {
          for (bool fuse : {false, true}) {
            Program p = structuralOf(entry.name, fuse);
            for (const auto &[buf, n] : producerCounts(p))
              if (n > 1) {
                g.expect(false, entry.name + (fuse ? " (fused)" : "") +
                                    ": buffer " + buf + " has " +
                                    std::to_string(n) + " writers");
                return;
              }
          }
        }
        Program ext = structuralOf("multiproducer-external");
        int xeWriters = producerCounts(ext)["Xe"];
        g.expect(xeWriters == 1, "Xe writers = " + std::to_string(xeWriters));
        int nodes = 0;
        walk(ext.top, "", [&](const Op &op, const std::string &) {
          nodes += op.is<NodeOp>();
        });
        g.expect(nodes == 2,
                 "expected the two producers fused into one node plus the "
                 "consumer, got " +
                     std::to_string(nodes) + " nodes");
      });

  gate.criterion(
      "balanced diamonds feed every node from one level up; soft FIFOs send "
      "once per producer and receive once per consumer",
      [](Gate &g) {
        Program p = structuralOf("diamond");
        balancePaths(p);
        const ScheduleOp &sched = p.top.ops[0].as<ScheduleOp>();
        NodeGraph graph = buildNodeGraph(sched);
        for (std::size_t n = 0; n < graph.nodes.size(); ++n) {
          std::set<int> producerLevels;
          for (const NodeGraph::Edge &e : graph.edges)
            if (e.consumer == int(n))
              producerLevels.insert(graph.levels[e.producer]);
          g.expect(producerLevels.size() <= 1,
                   graph.nodes[n]->id +
                       " receives from unequal topological distances");
          for (const NodeGraph::Edge &e : graph.edges)
            if (e.consumer == int(n))
              g.expect(graph.levels[n] - graph.levels[e.producer] == 1,
                       graph.nodes[n]->id + " reads " + e.buffer +
                           " across more than one level");
        }

        Program sf = structuralOf("diamond");
        BalanceOptions opts;
        opts.mode = BalanceMode::SoftFifo;
        balancePaths(sf, opts);
        int sends = 0, recvs = 0;
        walk(sf.top, "", [&](const Op &op, const std::string &) {
          sends += op.is<TokenSendOp>();
          recvs += op.is<TokenRecvOp>();
        });
        // One producer of X, two consumers.
        g.expect(sends == 1, "token sends = " + std::to_string(sends));
        g.expect(recvs == 2, "token receives = " + std::to_string(recvs));
      });

  gate.criterion(
      "throughput and DSP grow monotonically with the factor budget, and "
      "connection-aware banks never exceed naive banks",
      [](Gate &g) {
        for (const char *name : {"listing1", "2mm-small"}) {
          double prevThroughput = -1.0;
          std::int64_t prevDsp = -1;
          for (std::int64_t factor : {1, 2, 4, 8, 16, 32, 64}) {
            PipelineOptions aware;
            aware.maxParallelFactor = factor;
            CompileResult a = runPipeline(corpusProgram(name), aware);

            PipelineOptions naive = aware;
            naive.intensityAware = false;
            naive.connectionAware = false;
            CompileResult n = runPipeline(corpusProgram(name), naive);

            g.expect(a.qor.throughput >= prevThroughput,
                     std::string(name) + ": throughput drops at factor " +
                         std::to_string(factor));
            g.expect(a.qor.dsp >= prevDsp,
                     std::string(name) + ": DSP count drops at factor " +
                         std::to_string(factor));
            g.expect(totalBanks(a.program) <= totalBanks(n.program),
                     std::string(name) + ": aware banks " +
                         std::to_string(totalBanks(a.program)) +
                         " exceed naive " +
                         std::to_string(totalBanks(n.program)) +
                         " at factor " + std::to_string(factor));
            prevThroughput = a.qor.throughput;
            prevDsp = a.qor.dsp;
          }
        }
      });

  gate.criterion(
      "the efficiency formula reproduces the published reference point and "
      "holds as an identity on every report",
      [](Gate &g) {
        // 48.3 samples/s, 4.727e9 ops/sample, 1118 DSPs, 200 MHz -> 1.021,
        // pinned within +/-0.5%.
        double eff = reportEfficiency(48.3, 4.727e9, 1118.0, 200e6);
        g.expect(std::abs(eff - 1.021) <= 0.005,
                 "reference efficiency " + std::to_string(eff));

        for (const CorpusEntry &entry : corpus()) {
          PipelineOptions opts;
          opts.maxParallelFactor = 8;
          CompileResult r = runPipeline(corpusProgram(entry.name), opts);
          const QoR &q = r.qor;
          if (q.dsp == 0) {
            g.expect(q.dspEfficiency == 0.0,
                     entry.name + ": nonzero efficiency with zero DSPs");
            continue;
          }
          double identity = q.throughput * double(q.ops) /
                            (double(q.dsp) * opts.costModel.clockHz());
          double rel = std::abs(q.dspEfficiency - identity) /
                       std::max(identity, 1e-300);
          // Pinned: identity holds to 1e-12 relative.
          g.expect(rel <= 1e-12, entry.name + ": identity off by rel " +
                                     std::to_string(rel));
        }
      });

  gate.criterion(
      "plain emitted C++ compiles and matches the interpreter on ten seeds",
      [](Gate &g) {
        fs::path dir = fs::temp_directory_path() / "hida-acceptance-host";
        fs::remove_all(dir);
        std::vector<std::uint64_t> seeds;
        for (std::uint64_t s = 0; s < 10; ++s)
          seeds.push_back(s);
        for (const char *name : {"listing1", "2mm-small"}) {
          HostRun r = runHostComparison(name, seeds, dir / name);
          g.expect(r.ok, r.detail);
        }
      });

  return gate.finish();
}
