//===- Frontend.cpp - Kernel language parser ------------------------------===//

#include "hida/Frontend.h"

#include "hida/Lexer.h"

#include <algorithm>
#include <map>

namespace hida {

namespace {

// Affine form of one subscript while it is being folded: coeff * iv + offset.
struct LinForm {
  std::map<std::string, std::int64_t> coeffs;
  std::int64_t offset = 0;

  static LinForm constant(std::int64_t c) {
    LinForm f;
    f.offset = c;
    return f;
  }
  bool isConstant() const { return coeffs.empty(); }

  LinForm operator+(const LinForm &o) const {
    LinForm r = *this;
    r.offset += o.offset;
    for (auto &[iv, c] : o.coeffs)
      r.coeffs[iv] += c;
    r.prune();
    return r;
  }
  LinForm operator-(const LinForm &o) const {
    LinForm r = *this;
    r.offset -= o.offset;
    for (auto &[iv, c] : o.coeffs)
      r.coeffs[iv] -= c;
    r.prune();
    return r;
  }
  LinForm scale(std::int64_t k) const {
    LinForm r;
    r.offset = offset * k;
    for (auto &[iv, c] : coeffs)
      r.coeffs[iv] = c * k;
    r.prune();
    return r;
  }
  void prune() {
    for (auto it = coeffs.begin(); it != coeffs.end();)
      it = it->second == 0 ? coeffs.erase(it) : std::next(it);
  }
};

struct LoopCtx {
  std::string iv;
  std::int64_t lower;
  bool reduction = false;
};

class KernelParser {
public:
  KernelParser(const std::string &src, const std::string &name)
      : lex(src), name(name) {}

  Program run() {
    prog.name = name;
    while (lex.isIdent("array"))
      parseDecl();
    while (lex.peek().kind != Tok::Eof)
      prog.top.ops.push_back(parseStmt());
    for (BufferSpec &a : prog.arrays)
      a.output = a.placement == Placement::External && written.count(a.id);
    return std::move(prog);
  }

private:
  Lexer lex;
  std::string name;
  Program prog;
  std::vector<LoopCtx> loops;
  std::map<std::string, bool> written;

  [[noreturn]] void fail(const Token &t, const std::string &msg) {
    throw ParseError(t.line, t.col, msg);
  }

  void parseDecl() {
    lex.expectKeyword("array");
    Token nameTok = lex.expectIdent("array name");
    BufferSpec a;
    a.id = nameTok.text;
    if (prog.findArray(a.id))
      fail(nameTok, "array '" + a.id + "' already declared");
    while (lex.isPunct('[')) {
      lex.next();
      Token e = lex.peek();
      std::int64_t extent = lex.expectInt();
      if (extent < 1)
        fail(e, "array extent must be at least 1");
      a.shape.push_back(extent);
      lex.expectPunct(']');
    }
    if (a.shape.empty())
      fail(nameTok, "array '" + a.id + "' needs at least one dimension");
    lex.expectPunct(':');
    Token ty = lex.expectIdent("element type");
    if (ty.text == "int32")
      a.elem = ElemType::Int32;
    else if (ty.text == "float32")
      a.elem = ElemType::Float32;
    else
      fail(ty, "unknown element type '" + ty.text + "'");
    lex.expectPunct('@');
    Token pl = lex.expectIdent("placement");
    if (pl.text == "onchip")
      a.placement = Placement::Onchip;
    else if (pl.text == "external")
      a.placement = Placement::External;
    else
      fail(pl, "unknown placement '" + pl.text + "'");
    lex.expectPunct(';');
    a.partition.assign(a.shape.size(), DimPartition{});
    prog.arrays.push_back(std::move(a));
  }

  Op parseStmt() {
    if (lex.isIdent("for"))
      return parseLoop();
    return parseAssign();
  }

  Op parseLoop() {
    lex.expectKeyword("for");
    Token ivTok = lex.expectIdent("loop variable");
    for (const LoopCtx &c : loops)
      if (c.iv == ivTok.text)
        fail(ivTok, "loop variable '" + ivTok.text +
                        "' shadows an enclosing loop");
    lex.expectKeyword("in");
    Token loTok = lex.peek();
    std::int64_t lo = lex.expectInt();
    if (lex.peek().kind != Tok::DotDot)
      lex.fail("expected '..'");
    lex.next();
    Token hiTok = lex.peek();
    std::int64_t hi = lex.expectInt();
    if (hi < lo)
      fail(hiTok, "loop upper bound is below lower bound");
    (void)loTok;
    Loop l;
    l.iv = ivTok.text;
    l.trip = hi - lo;
    loops.push_back({l.iv, lo});
    lex.expectPunct('{');
    while (!lex.isPunct('}'))
      l.body.ops.push_back(parseStmt());
    lex.expectPunct('}');
    l.reduction = loops.back().reduction;
    loops.pop_back();
    return Op{std::move(l)};
  }

  Op parseAssign() {
    Token name = lex.expectIdent("statement");
    Compute c;
    c.target = parseAccess(name);
    bool accumulate = false;
    if (lex.peek().kind == Tok::PlusEq) {
      lex.next();
      accumulate = true;
    } else if (lex.isPunct('=')) {
      lex.next();
    } else {
      lex.fail("expected '=' or '+='");
    }
    c.accumulate = accumulate;
    parseExpr(c);
    lex.expectPunct(';');
    written[c.target.array] = true;
    if (accumulate)
      markReductions(c.target);
    return Op{std::move(c)};
  }

  // Loops enclosing an accumulate whose iv does not appear in the write are
  // reduction dimensions; the parallelizer keeps their unroll factor at 1.
  void markReductions(const Access &target) {
    for (LoopCtx &ctx : loops) {
      bool used = false;
      for (const DimIndex &d : target.index)
        for (const AccessTerm &t : d.terms)
          used |= t.iv == ctx.iv;
      if (!used)
        ctx.reduction = true;
    }
  }

  Access parseAccess(const Token &name) {
    const BufferSpec *buf = prog.findArray(name.text);
    if (!buf)
      fail(name, "use of undeclared array '" + name.text + "'");
    Access a;
    a.array = name.text;
    while (lex.isPunct('[')) {
      Token open = lex.next();
      LinForm f = parseIndexExpr();
      lex.expectPunct(']');
      a.index.push_back(toDimIndex(f, open));
    }
    if (a.index.size() != buf->shape.size())
      fail(name, "array '" + name.text + "' has rank " +
                     std::to_string(buf->shape.size()) + ", subscript has " +
                     std::to_string(a.index.size()));
    return a;
  }

  // Lower a folded subscript to a DimIndex, normalizing away loop lower
  // bounds: iv_source = iv_norm + lower, so c*iv folds c*lower into the
  // offset. Subscripts must be affine in a single loop variable.
  DimIndex toDimIndex(const LinForm &f, const Token &pos) {
    if (f.coeffs.size() > 1)
      fail(pos, "subscript uses more than one loop variable");
    DimIndex d;
    d.offset = f.offset;
    for (auto &[iv, c] : f.coeffs) {
      const LoopCtx *ctx = nullptr;
      for (const LoopCtx &l : loops)
        if (l.iv == iv)
          ctx = &l;
      if (!ctx)
        fail(pos, "subscript uses '" + iv + "' with no enclosing loop");
      d.offset += c * ctx->lower;
      d.terms.push_back({iv, Rational(c)});
    }
    return d;
  }

  // Subscript grammar: sums/differences of products of an iv and integer
  // constants. Anything quadratic (i*j, i*i) is rejected.
  LinForm parseIndexExpr() {
    LinForm lhs = parseIndexTerm();
    while (lex.isPunct('+') || lex.isPunct('-')) {
      bool add = lex.isPunct('+');
      lex.next();
      LinForm rhs = parseIndexTerm();
      lhs = add ? lhs + rhs : lhs - rhs;
    }
    return lhs;
  }

  LinForm parseIndexTerm() {
    LinForm lhs = parseIndexFactor();
    while (lex.isPunct('*')) {
      Token star = lex.next();
      LinForm rhs = parseIndexFactor();
      if (!lhs.isConstant() && !rhs.isConstant())
        fail(star, "non-affine subscript: product of two loop variables");
      lhs = lhs.isConstant() ? rhs.scale(lhs.offset) : lhs.scale(rhs.offset);
    }
    return lhs;
  }

  LinForm parseIndexFactor() {
    if (lex.isPunct('-')) {
      lex.next();
      return LinForm::constant(0) - parseIndexFactor();
    }
    if (lex.isPunct('(')) {
      lex.next();
      LinForm f = parseIndexExpr();
      lex.expectPunct(')');
      return f;
    }
    Token t = lex.peek();
    if (t.kind == Tok::Int) {
      lex.next();
      return LinForm::constant(t.intValue);
    }
    if (t.kind == Tok::Ident) {
      lex.next();
      LinForm f;
      f.coeffs[t.text] = 1;
      return f;
    }
    lex.fail("expected a subscript term");
  }

  // Value expressions reuse the IR expression grammar; reads resolve against
  // declarations and get the same subscript folding as write targets.
  void parseExpr(Compute &c) {
    int root = parseAddExpr(c);
    if (root != int(c.expr.size()) - 1)
      c.expr.push_back(c.expr[root]);
  }

  int parseAddExpr(Compute &c) {
    int lhs = parseMulExpr(c);
    while (lex.isPunct('+') || lex.isPunct('-')) {
      bool add = lex.isPunct('+');
      lex.next();
      int rhs = parseMulExpr(c);
      ExprNode e;
      e.kind = add ? ExprKind::Add : ExprKind::Sub;
      e.lhs = lhs;
      e.rhs = rhs;
      c.expr.push_back(e);
      lhs = int(c.expr.size()) - 1;
    }
    return lhs;
  }

  int parseMulExpr(Compute &c) {
    int lhs = parseValueFactor(c);
    while (lex.isPunct('*') || lex.isPunct('/')) {
      bool mul = lex.isPunct('*');
      lex.next();
      int rhs = parseValueFactor(c);
      ExprNode e;
      e.kind = mul ? ExprKind::Mul : ExprKind::Div;
      e.lhs = lhs;
      e.rhs = rhs;
      c.expr.push_back(e);
      lhs = int(c.expr.size()) - 1;
    }
    return lhs;
  }

  int parseValueFactor(Compute &c) {
    if (lex.isPunct('-')) {
      lex.next();
      Token t = lex.peek();
      if (t.kind != Tok::Int && t.kind != Tok::Float)
        lex.fail("expected a number after unary '-'");
      lex.next();
      ExprNode e;
      e.kind = ExprKind::Const;
      e.value = -t.floatValue;
      c.expr.push_back(e);
      return int(c.expr.size()) - 1;
    }
    Token t = lex.peek();
    if (t.kind == Tok::Int || t.kind == Tok::Float) {
      lex.next();
      ExprNode e;
      e.kind = ExprKind::Const;
      e.value = t.floatValue;
      c.expr.push_back(e);
      return int(c.expr.size()) - 1;
    }
    if (t.kind == Tok::Ident) {
      lex.next();
      c.reads.push_back(parseAccess(t));
      ExprNode e;
      e.kind = ExprKind::Read;
      e.read = int(c.reads.size()) - 1;
      c.expr.push_back(e);
      return int(c.expr.size()) - 1;
    }
    if (lex.isPunct('(')) {
      lex.next();
      int idx = parseAddExpr(c);
      lex.expectPunct(')');
      return idx;
    }
    lex.fail("expected a value expression");
  }
};

} // namespace

Program parseKernel(const std::string &source, const std::string &name) {
  return KernelParser(source, name).run();
}

} // namespace hida
