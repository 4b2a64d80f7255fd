//===- hida-main.cpp - Command line driver ----------------------------------===//
//
// Subcommands:
//   compile  run the full pipeline, write emitted C++, print a QoR report
//   interp   execute a program on concrete or seeded inputs
//   verify   structural checks only
//   ablate   estimator grid over parallel factor, tile size and plan modes
//
// Exit codes: 0 success, 1 diagnostics, 2 usage errors.
//
//===----------------------------------------------------------------------===//

#include "hida/Driver.h"
#include "hida/Frontend.h"
#include "hida/Interp.h"
#include "hida/Serialize.h"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string readFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

hida::Program loadProgram(const std::string &path) {
  std::string text = readFile(path);
  std::filesystem::path fp(path);
  if (fp.extension() == ".hk")
    return hida::parseKernel(text, fp.stem().string());
  return hida::load(text);
}

std::vector<std::string> splitList(const std::string &s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty())
        parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty())
    parts.push_back(cur);
  return parts;
}

std::vector<std::int64_t> splitInts(const std::string &s) {
  std::vector<std::int64_t> out;
  for (const std::string &part : splitList(s))
    out.push_back(std::stoll(part));
  return out;
}

void printDiags(const hida::DiagList &diags) {
  for (const hida::Diag &d : diags)
    std::cerr << toString(d) << "\n";
}

// Shared pipeline knobs of the compile and ablate subcommands.
struct PipelineFlags {
  std::int64_t maxFactor = 1;
  std::int64_t tileSize = 1;
  bool noIa = false;
  bool noCa = false;
  bool unrollReductions = false;
  bool plain = false;
  std::string balance = "onchip";
  std::string fusionPatterns = "default";
  std::string costModelFile;
  std::string dumpAfter;

  void attach(CLI::App *cmd, bool withDumps) {
    cmd->add_option("--max-parallel-factor", maxFactor,
                    "Upper bound on per-node unroll products");
    cmd->add_option("--tile-size", tileSize,
                    "Split loops divisible by this size before parallelizing");
    cmd->add_flag("--no-ia", noIa, "Disable intensity-aware factor scaling");
    cmd->add_flag("--no-ca", noCa, "Disable connection-aware constraints");
    cmd->add_flag("--unroll-reductions", unrollReductions,
                  "Let the planner unroll reduction loops");
    cmd->add_option("--balance", balance,
                    "Path balancing: onchip, softfifo, or off")
        ->check(CLI::IsMember({"onchip", "softfifo", "off"}));
    cmd->add_option("--fusion-patterns", fusionPatterns,
                    "Comma list of fusion patterns, 'default', or 'none'");
    cmd->add_option("--cost-model", costModelFile,
                    "Cost model overrides, key = value per line");
    if (withDumps) {
      cmd->add_flag("--plain", plain, "Emit pragma-free portable C++");
      cmd->add_option("--dump-after", dumpAfter,
                      "Comma list of stages to dump IR after, or 'all'");
    }
  }

  hida::PipelineOptions toOptions() const {
    hida::PipelineOptions opts;
    opts.maxParallelFactor = maxFactor;
    opts.tileSize = tileSize;
    opts.intensityAware = !noIa;
    opts.connectionAware = !noCa;
    opts.unrollReductions = unrollReductions;
    opts.plain = plain;
    if (balance == "off")
      opts.balance.reset();
    else
      opts.balance = balance == "softfifo" ? hida::BalanceMode::SoftFifo
                                           : hida::BalanceMode::Onchip;
    if (fusionPatterns == "none") {
      opts.fuse = false;
    } else if (fusionPatterns != "default") {
      opts.fusionPatterns = splitList(fusionPatterns);
    }
    if (!costModelFile.empty())
      opts.costModel = hida::parseCostModel(readFile(costModelFile));
    for (const std::string &stage : splitList(dumpAfter)) {
      if (stage != "all" &&
          std::find(hida::pipelineStages().begin(),
                    hida::pipelineStages().end(),
                    stage) == hida::pipelineStages().end())
        throw CLI::ValidationError("--dump-after",
                                   "unknown stage '" + stage + "'");
      opts.dumpAfter.push_back(stage);
    }
    return opts;
  }
};

int runCompile(const std::string &file, const PipelineFlags &flags,
               const std::string &outDir) {
  hida::Program p = loadProgram(file);
  hida::CompileResult result = runPipeline(p, flags.toOptions());
  printDiags(result.warnings);

  std::filesystem::create_directories(outDir);
  std::filesystem::path dir(outDir);
  writeFile((dir / result.emitted.headerName).string(),
            result.emitted.header);
  writeFile((dir / result.emitted.sourceName).string(),
            result.emitted.source);
  for (std::size_t i = 0; i < result.dumps.size(); ++i) {
    std::string dumpName = p.name + "." + std::to_string(i) + "-" +
                           result.dumps[i].stage + ".ir";
    writeFile((dir / dumpName).string(), result.dumps[i].text);
  }
  std::cout << qorReport(p.name, result, flags.toOptions().costModel);
  return 0;
}

int runVerify(const std::string &file) {
  hida::Program p = loadProgram(file);
  hida::DiagList diags = hida::verify(p);
  printDiags(diags);
  if (hida::hasErrors(diags))
    return 1;
  std::cout << "ok\n";
  return 0;
}

std::map<std::string, std::vector<double>>
parseInputs(const std::vector<std::string> &specs) {
  std::map<std::string, std::vector<double>> inputs;
  for (const std::string &spec : specs) {
    std::size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("input '" + spec +
                               "' is not of the form name=... ");
    std::string name = spec.substr(0, eq);
    std::string value = spec.substr(eq + 1);
    std::vector<double> vals;
    if (!value.empty() && value[0] == '@') {
      std::istringstream ss(readFile(value.substr(1)));
      double v = 0;
      while (ss >> v)
        vals.push_back(v);
    } else {
      for (const std::string &part : splitList(value))
        vals.push_back(std::stod(part));
    }
    inputs[name] = std::move(vals);
  }
  return inputs;
}

int runInterp(const std::string &file, const std::vector<std::string> &specs,
              std::uint64_t seed, bool dumpOutputs) {
  hida::Program p = loadProgram(file);
  std::map<std::string, std::vector<double>> inputs =
      hida::seededInputs(p, seed);
  for (auto &[name, vals] : parseInputs(specs))
    inputs[name] = std::move(vals);
  hida::InterpResult result = hida::interpret(p, inputs);
  if (dumpOutputs) {
    for (const auto &[name, vals] : result.outputs) {
      std::cout << name << " =";
      for (double v : vals) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), " %.17g", v);
        std::cout << buf;
      }
      std::cout << "\n";
    }
  }
  return 0;
}

int runAblate(const std::string &file, const PipelineFlags &flags,
              const std::string &factors, const std::string &tiles,
              const std::string &outFile) {
  hida::Program p = loadProgram(file);
  hida::AblateOptions opts;
  opts.factors = splitInts(factors);
  opts.tiles = splitInts(tiles);
  opts.base = flags.toOptions();
  std::string csv = ablate(p, opts);
  if (outFile.empty())
    std::cout << csv;
  else
    writeFile(outFile, csv);
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"hida - hierarchical dataflow HLS compiler"};
  app.require_subcommand(1);

  std::string file, outDir = ".", outFile, factors = "1,2,4,8,16,32,64",
                    tiles = "1";
  std::vector<std::string> inputSpecs;
  std::uint64_t seed = 0;
  bool dumpOutputs = false;
  PipelineFlags compileFlags, ablateFlags;

  CLI::App *compile =
      app.add_subcommand("compile", "Run the pipeline and emit HLS C++");
  compile->add_option("file", file, "Kernel (.hk) or IR file")->required();
  compileFlags.attach(compile, /*withDumps=*/true);
  compile->add_option("-o,--out-dir", outDir, "Output directory");
  compile->add_option("--seed", seed, "Seed for randomized tooling");

  CLI::App *interp =
      app.add_subcommand("interp", "Execute a program sequentially");
  interp->add_option("file", file, "Kernel (.hk) or IR file")->required();
  interp->add_option("--input", inputSpecs,
                     "Array values: name=v1,v2,... or name=@file");
  interp->add_option("--seed", seed, "Seed for arrays not given via --input");
  interp->add_flag("--dump-outputs", dumpOutputs,
                   "Print final output array contents");

  CLI::App *verify =
      app.add_subcommand("verify", "Check structural invariants");
  verify->add_option("file", file, "Kernel (.hk) or IR file")->required();

  CLI::App *ablate =
      app.add_subcommand("ablate", "Estimator grid over factors and tiles");
  ablate->add_option("file", file, "Kernel (.hk) or IR file")->required();
  ablate->add_option("--factors", factors, "Comma list of parallel factors");
  ablate->add_option("--tiles", tiles, "Comma list of tile sizes");
  ablateFlags.attach(ablate, /*withDumps=*/false);
  ablate->add_option("-o,--out", outFile, "Write the CSV here, not stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (compile->parsed())
      return runCompile(file, compileFlags, outDir);
    if (interp->parsed())
      return runInterp(file, inputSpecs, seed, dumpOutputs);
    if (verify->parsed())
      return runVerify(file);
    if (ablate->parsed())
      return runAblate(file, ablateFlags, factors, tiles, outFile);
  } catch (const CLI::ValidationError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hida::PipelineError &e) {
    std::cerr << "error: " << e.what() << "\n";
    printDiags(e.diags);
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
