#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hida/Frontend.h"
#include "hida/IR.h"

#include <string>
#include <vector>

using namespace hida;

namespace {

const Loop &onlyLoop(const Region &r) {
  REQUIRE(r.ops.size() == 1);
  REQUIRE(r.ops[0].is<Loop>());
  return r.ops[0].as<Loop>();
}

const Compute &onlyCompute(const Region &r) {
  REQUIRE(r.ops.size() == 1);
  REQUIRE(r.ops[0].is<Compute>());
  return r.ops[0].as<Compute>();
}

} // namespace

TEST_CASE("array declarations carry shape, element type and placement") {
  Program p = parseKernel("array A[4][8] : float32 @ onchip;\n"
                          "array B[4] : int32 @ external;\n"
                          "for i in 0..4 { B[i] = 1; }\n",
                          "decls");
  CHECK(p.name == "decls");
  REQUIRE(p.arrays.size() == 2);
  CHECK(p.arrays[0].id == "A");
  CHECK((p.arrays[0].shape == std::vector<std::int64_t>{4, 8}));
  CHECK((p.arrays[0].elem == ElemType::Float32));
  CHECK((p.arrays[0].placement == Placement::Onchip));
  CHECK(p.arrays[1].id == "B");
  CHECK((p.arrays[1].elem == ElemType::Int32));
  CHECK((p.arrays[1].placement == Placement::External));
}

TEST_CASE("nonzero lower bounds fold into access offsets") {
  Program p = parseKernel("array A[16] : float32 @ external;\n"
                          "array B[16] : float32 @ external;\n"
                          "for i in 1..9 { A[i] = B[i - 1]; }\n",
                          "lowbound");
  const Loop &l = onlyLoop(p.top);
  CHECK(l.iv == "i");
  CHECK(l.trip == 8);
  const Compute &c = onlyCompute(l.body);
  // A[i] with i running from 1 becomes offset +1 over the normalized iv.
  REQUIRE(c.target.index.size() == 1);
  CHECK(c.target.index[0].offset == 1);
  REQUIRE(c.target.index[0].terms.size() == 1);
  CHECK(c.target.index[0].terms[0].iv == "i");
  CHECK((c.target.index[0].terms[0].stride == Rational(1)));
  // B[i - 1] folds to offset 0.
  REQUIRE(c.reads.size() == 1);
  CHECK(c.reads[0].index[0].offset == 0);
}

TEST_CASE("scaled subscripts keep the coefficient as the stride") {
  Program p = parseKernel("array A[32] : float32 @ external;\n"
                          "array B[16] : float32 @ external;\n"
                          "for i in 2..10 { A[i * 2 + 1] = B[i]; }\n",
                          "scaled");
  const Compute &c = onlyCompute(onlyLoop(p.top).body);
  // i*2 with lower bound 2 folds 2*2 into the offset: 2*iv + 5.
  CHECK((c.target.index[0].terms[0].stride == Rational(2)));
  CHECK(c.target.index[0].offset == 5);
}

TEST_CASE("constant subscripts have no terms") {
  Program p = parseKernel("array A[8] : float32 @ external;\n"
                          "array B[8] : float32 @ external;\n"
                          "for i in 0..8 { A[3] = B[i]; }\n",
                          "const-sub");
  const Compute &c = onlyCompute(onlyLoop(p.top).body);
  CHECK(c.target.index[0].terms.empty());
  CHECK(c.target.index[0].offset == 3);
}

TEST_CASE("accumulate marks enclosing loops absent from the target") {
  Program p = parseKernel("array A[8][4] : float32 @ external;\n"
                          "array S[8] : float32 @ external;\n"
                          "for i in 0..8 {\n"
                          "  for k in 0..4 {\n"
                          "    S[i] += A[i][k];\n"
                          "  }\n"
                          "}\n",
                          "reduce");
  const Loop &li = onlyLoop(p.top);
  CHECK_FALSE(li.reduction);
  const Loop &lk = onlyLoop(li.body);
  CHECK(lk.reduction);
  CHECK(onlyCompute(lk.body).accumulate);
}

TEST_CASE("accumulate over an iv used in the target is not a reduction") {
  Program p = parseKernel("array A[8] : float32 @ external;\n"
                          "array B[8] : float32 @ external;\n"
                          "for i in 0..8 { A[i] += B[i]; }\n",
                          "acc-elem");
  const Loop &l = onlyLoop(p.top);
  CHECK_FALSE(l.reduction);
  CHECK(onlyCompute(l.body).accumulate);
}

TEST_CASE("parse errors carry line and column") {
  bool threw = false;
  try {
    parseKernel("array A[8] : float32 @ external;\n"
                "for i in 0..8 { A[i] = Bogus[i]; }\n",
                "bad");
  } catch (const ParseError &e) {
    threw = true;
    CHECK(e.line == 2);
    CHECK(e.col > 0);
    CHECK(std::string(e.what()).find("Bogus") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("malformed input is rejected with a parse error") {
  const char *decls = "array A[8] : float32 @ external;\n"
                      "array B[8][2] : float32 @ external;\n";
  auto bad = [&](const std::string &body) {
    CHECK_THROWS_AS(parseKernel(decls + body, "bad"), ParseError);
  };
  // Rank mismatch.
  bad("for i in 0..8 { A[i][i] = 0.0; }\n");
  // Undeclared array.
  bad("for i in 0..8 { Z[i] = 0.0; }\n");
  // Two loop variables in one subscript.
  bad("for i in 0..8 { for j in 0..2 { B[i + j][j] = 0.0; } }\n");
  // Quadratic subscript.
  bad("for i in 0..8 { for j in 0..2 { B[i * j][j] = 0.0; } }\n");
  // Shadowed loop variable.
  bad("for i in 0..8 { for i in 0..2 { A[i] = 0.0; } }\n");
  // Descending bounds.
  bad("for i in 8..0 { A[i] = 0.0; }\n");
  // Unknown element type.
  CHECK_THROWS_AS(parseKernel("array X[2] : float64 @ external;\n", "bad"),
                  ParseError);
  // Unknown placement.
  CHECK_THROWS_AS(parseKernel("array X[2] : float32 @ cache;\n", "bad"),
                  ParseError);
  // Duplicate declaration.
  CHECK_THROWS_AS(parseKernel("array A[2] : float32 @ external;\n"
                              "array A[2] : float32 @ external;\n",
                              "bad"),
                  ParseError);
  // Zero extent.
  CHECK_THROWS_AS(parseKernel("array X[0] : float32 @ external;\n", "bad"),
                  ParseError);
}

TEST_CASE("parsed programs pass verification") {
  Program p = parseKernel("array In[16] : float32 @ external;\n"
                          "array Out[16] : float32 @ external;\n"
                          "for i in 0..16 { Out[i] = In[i] + 2.0; }\n",
                          "clean");
  DiagList diags = verify(p);
  CHECK_FALSE(hasErrors(diags));
}
