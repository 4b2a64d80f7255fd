#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hida/Corpus.h"
#include "hida/FunctionalOpt.h"
#include "hida/IR.h"
#include "hida/Interp.h"
#include "hida/Serialize.h"

#include <algorithm>
#include <stdexcept>

using namespace hida;

namespace {

// Top-level tasks of the single dispatch (or of the program once the
// dispatch collapsed).
int topTasks(const Program &p) {
  const Region *r = &p.top;
  if (r->ops.size() == 1 && r->ops[0].is<DispatchOp>())
    r = &r->ops[0].as<DispatchOp>().body;
  int n = 0;
  for (const Op &op : r->ops)
    n += op.is<TaskOp>();
  return n;
}

Program fused(const std::string &name, const FusionOptions &opts = {}) {
  Program p = corpusProgram(name);
  constructDataflow(p);
  fuseTasks(p, opts);
  simplifyHierarchy(p);
  return p;
}

} // namespace

TEST_CASE("constructDataflow wraps each nest in a task under one dispatch") {
  Program p = corpusProgram("listing1");
  constructDataflow(p);
  REQUIRE(p.top.ops.size() == 1);
  REQUIRE(p.top.ops[0].is<DispatchOp>());
  const Region &body = p.top.ops[0].as<DispatchOp>().body;
  REQUIRE(body.ops.size() == 3);
  for (const Op &op : body.ops) {
    REQUIRE(op.is<TaskOp>());
    CHECK(op.as<TaskOp>().body.ops.size() == 1);
  }
}

TEST_CASE("constructDataflow is idempotent") {
  Program p = corpusProgram("listing1");
  constructDataflow(p);
  std::string once = dump(p);
  constructDataflow(p);
  CHECK(dump(p) == once);
}

TEST_CASE("a single nest is left alone") {
  Program p = corpusProgram("single-loop");
  std::string before = dump(p);
  constructDataflow(p);
  CHECK(dump(p) == before);
}

TEST_CASE("default fusion keeps the scaled matmul at three tasks") {
  // Both feeds connect to the consumer, but merging either would push the
  // fused task past the heaviest task in the dispatch, so pairing declines
  // and no pattern applies to a reduction consumer.
  CHECK(topTasks(fused("listing1")) == 3);
}

TEST_CASE("elementwise chains fuse producer into consumer") {
  Program p = fused("diamond");
  CHECK(topTasks(p) == 2);
  // The fused task holds both elementwise nests in program order: X's
  // producer first, then Y's.
  const Region &body = p.top.ops[0].as<DispatchOp>().body;
  const TaskOp &first = body.ops[0].as<TaskOp>();
  REQUIRE(first.body.ops.size() == 2);
  std::vector<std::string> bufs = referencedBuffers(first.body);
  CHECK(std::find(bufs.begin(), bufs.end(), "X") != bufs.end());
  CHECK(std::find(bufs.begin(), bufs.end(), "Y") != bufs.end());
}

TEST_CASE("aligned stencil sweeps fuse into a single task") {
  Program p = fused("jacobi2d-small");
  REQUIRE(p.top.ops.size() == 1);
  CHECK(p.top.ops[0].is<TaskOp>());
}

TEST_CASE("unknown fusion pattern names are rejected") {
  Program p = corpusProgram("diamond");
  constructDataflow(p);
  FusionOptions opts;
  opts.patterns = {"bogus"};
  CHECK_THROWS_AS(fuseTasks(p, opts), std::invalid_argument);
}

TEST_CASE("fusion with no patterns and no pairing is a no-op") {
  Program p = corpusProgram("diamond");
  constructDataflow(p);
  std::string before = dump(p);
  FusionOptions opts;
  opts.patterns.clear();
  opts.pairing = false;
  fuseTasks(p, opts);
  CHECK(dump(p) == before);
}

TEST_CASE("a permissive profitability rule fuses everything connected") {
  FusionOptions opts;
  opts.profitable = [](std::int64_t, std::int64_t) { return true; };
  Program p = fused("listing1", opts);
  REQUIRE(p.top.ops.size() == 1);
  CHECK(p.top.ops[0].is<TaskOp>());
}

TEST_CASE("simplifyHierarchy collapses trivial wrappers") {
  Program p;
  p.name = "wrap";

  Loop l;
  l.iv = "i";
  l.trip = 4;

  TaskOp inner;
  inner.body.ops.push_back(Op{l});
  TaskOp outer;
  outer.body.ops.push_back(Op{inner});
  DispatchOp d;
  d.body.ops.push_back(Op{outer});
  p.top.ops.push_back(Op{d});
  p.top.ops.push_back(Op{TaskOp{}});

  simplifyHierarchy(p);
  // dispatch{task{task{loop}}} flattens to task{loop}; the empty task
  // disappears.
  REQUIRE(p.top.ops.size() == 1);
  REQUIRE(p.top.ops[0].is<TaskOp>());
  const TaskOp &t = p.top.ops[0].as<TaskOp>();
  REQUIRE(t.body.ops.size() == 1);
  CHECK(t.body.ops[0].is<Loop>());
}

TEST_CASE("fusion preserves interpreter results bit for bit") {
  for (const char *name : {"listing1", "diamond", "jacobi2d-small"}) {
    CAPTURE(name);
    Program base = corpusProgram(name);
    Program opt = fused(name);
    for (std::uint64_t seed : {1, 2, 3}) {
      auto inputs = seededInputs(base, seed);
      CHECK((interpret(base, inputs).outputs ==
             interpret(opt, inputs).outputs));
    }
  }
}
