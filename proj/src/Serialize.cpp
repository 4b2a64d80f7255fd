//===- Serialize.cpp - Textual IR dump and load ---------------------------===//

#include "hida/Serialize.h"

#include "hida/Lexer.h"

#include <cinttypes>
#include <cstdio>
#include <sstream>

namespace hida {

//===----------------------------------------------------------------------===//
// Printing
//===----------------------------------------------------------------------===//

static std::string numToString(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string toString(const DimIndex &d) {
  std::string s;
  for (size_t i = 0; i < d.terms.size(); ++i) {
    const AccessTerm &t = d.terms[i];
    Rational mag = t.stride.abs();
    if (t.stride.num < 0)
      s += "-";
    else if (i)
      s += "+";
    if (mag == Rational(1))
      s += t.iv;
    else if (mag.isInteger())
      s += std::to_string(mag.num) + "*" + t.iv;
    else
      s += "(" + toString(mag) + ")*" + t.iv;
  }
  if (d.terms.empty())
    return std::to_string(d.offset);
  if (d.offset > 0)
    s += "+" + std::to_string(d.offset);
  else if (d.offset < 0)
    s += std::to_string(d.offset);
  return s;
}

std::string toString(const Access &a) {
  std::string s = a.array;
  for (const DimIndex &d : a.index)
    s += "[" + toString(d) + "]";
  return s;
}

static std::string exprNodeToString(const Compute &c, int i) {
  const ExprNode &e = c.expr[i];
  switch (e.kind) {
  case ExprKind::Const:
    return numToString(e.value);
  case ExprKind::Read:
    return toString(c.reads[e.read]);
  case ExprKind::Add:
    return "(" + exprNodeToString(c, e.lhs) + " + " +
           exprNodeToString(c, e.rhs) + ")";
  case ExprKind::Sub:
    return "(" + exprNodeToString(c, e.lhs) + " - " +
           exprNodeToString(c, e.rhs) + ")";
  case ExprKind::Mul:
    return "(" + exprNodeToString(c, e.lhs) + " * " +
           exprNodeToString(c, e.rhs) + ")";
  case ExprKind::Div:
    return "(" + exprNodeToString(c, e.lhs) + " / " +
           exprNodeToString(c, e.rhs) + ")";
  }
  return "";
}

std::string exprToString(const Compute &c) {
  return exprNodeToString(c, int(c.expr.size()) - 1);
}

namespace {

class Printer {
public:
  explicit Printer(const Program &p) : prog(p) {}

  std::string run() {
    out << "program " << prog.name << "\n";
    for (const BufferSpec &a : prog.arrays)
      printArray(a);
    for (const StreamSpec &s : prog.streams)
      out << "stream " << s.id << " depth=" << s.depth << "\n";
    printRegion(prog.top, 0);
    return out.str();
  }

private:
  void indent(int depth) {
    for (int i = 0; i < depth; ++i)
      out << "  ";
  }

  void printArray(const BufferSpec &a) {
    out << "array " << a.id << " shape=[";
    for (size_t i = 0; i < a.shape.size(); ++i)
      out << (i ? "," : "") << a.shape[i];
    out << "] elem=" << toString(a.elem) << " place=" << toString(a.placement);
    bool partitioned = false;
    for (const DimPartition &p : a.partition)
      partitioned |= p.kind != PartitionKind::None || p.factor != 1;
    if (partitioned) {
      out << " partition=[";
      for (size_t i = 0; i < a.partition.size(); ++i)
        out << (i ? "," : "") << toString(a.partition[i].kind) << ":"
            << a.partition[i].factor;
      out << "]";
    }
    if (a.depth != 1)
      out << " depth=" << a.depth;
    if (a.output)
      out << " output";
    out << "\n";
  }

  void printRegion(const Region &r, int depth) {
    for (const Op &op : r.ops)
      printOp(op, depth);
  }

  void printOp(const Op &op, int depth) {
    indent(depth);
    if (op.is<Loop>()) {
      const Loop &l = op.as<Loop>();
      out << "loop " << l.iv << " " << l.trip;
      if (l.unroll != 1)
        out << " unroll=" << l.unroll;
      if (l.reduction)
        out << " reduction";
      printBody(l.body, depth);
    } else if (op.is<Compute>()) {
      const Compute &c = op.as<Compute>();
      out << "compute " << toString(c.target) << (c.accumulate ? " += " : " = ")
          << exprToString(c) << "\n";
    } else if (op.is<TaskOp>()) {
      out << "task";
      printBody(op.as<TaskOp>().body, depth);
    } else if (op.is<DispatchOp>()) {
      out << "dispatch";
      printBody(op.as<DispatchOp>().body, depth);
    } else if (op.is<NodeOp>()) {
      const NodeOp &n = op.as<NodeOp>();
      out << "node " << n.id << " inputs=[";
      for (size_t i = 0; i < n.inputs.size(); ++i)
        out << (i ? "," : "") << n.inputs[i].buffer << ":"
            << toString(n.inputs[i].effect);
      out << "]";
      if (!n.params.empty()) {
        out << " params=[";
        for (size_t i = 0; i < n.params.size(); ++i)
          out << (i ? "," : "") << numToString(n.params[i]);
        out << "]";
      }
      printBody(n.body, depth);
    } else if (op.is<ScheduleOp>()) {
      out << "schedule";
      printBody(op.as<ScheduleOp>().body, depth);
    } else if (op.is<AllocOp>()) {
      out << "alloc " << op.as<AllocOp>().buffer << "\n";
    } else if (op.is<CopyOp>()) {
      out << "copy " << op.as<CopyOp>().src << " -> " << op.as<CopyOp>().dst
          << "\n";
    } else if (op.is<TokenSendOp>()) {
      out << "send " << op.as<TokenSendOp>().chan << "\n";
    } else if (op.is<TokenRecvOp>()) {
      out << "recv " << op.as<TokenRecvOp>().chan << "\n";
    }
  }

  void printBody(const Region &r, int depth) {
    out << " {\n";
    printRegion(r, depth + 1);
    indent(depth);
    out << "}\n";
  }

  const Program &prog;
  std::ostringstream out;
};

//===----------------------------------------------------------------------===//
// Loading
//===----------------------------------------------------------------------===//

class Loader {
public:
  explicit Loader(const std::string &text) : lex(text) {}

  Program run() {
    Program p;
    int headerLine = lex.peek().line;
    lex.expectKeyword("program");
    // Program names come from kernel filenames and may contain dashes or
    // leading digits, so the name is everything left on the header line.
    while (lex.peek().kind != Tok::Eof && lex.peek().line == headerLine)
      p.name += lex.next().text;
    if (p.name.empty())
      lex.fail("expected program name");
    while (lex.isIdent("array"))
      p.arrays.push_back(parseArray());
    while (lex.isIdent("stream")) {
      lex.next();
      StreamSpec s;
      s.id = lex.expectIdent("stream id").text;
      expectAttr("depth");
      s.depth = lex.expectInt();
      p.streams.push_back(s);
    }
    p.top = parseRegionUntilEof();
    return p;
  }

private:
  Lexer lex;

  void expectAttr(const char *name) {
    lex.expectKeyword(name);
    lex.expectPunct('=');
  }

  ElemType parseElemType() {
    Token t = lex.expectIdent("element type");
    if (t.text == "int32")
      return ElemType::Int32;
    if (t.text == "float32")
      return ElemType::Float32;
    throw ParseError(t.line, t.col, "unknown element type '" + t.text + "'");
  }

  Placement parsePlacement() {
    Token t = lex.expectIdent("placement");
    if (t.text == "onchip")
      return Placement::Onchip;
    if (t.text == "external")
      return Placement::External;
    throw ParseError(t.line, t.col, "unknown placement '" + t.text + "'");
  }

  BufferSpec parseArray() {
    lex.expectKeyword("array");
    BufferSpec a;
    a.id = lex.expectIdent("array name").text;
    expectAttr("shape");
    lex.expectPunct('[');
    while (!lex.isPunct(']')) {
      a.shape.push_back(lex.expectInt());
      if (lex.isPunct(','))
        lex.next();
    }
    lex.expectPunct(']');
    expectAttr("elem");
    a.elem = parseElemType();
    expectAttr("place");
    a.placement = parsePlacement();
    a.partition.assign(a.shape.size(), DimPartition{});
    while (lex.peek().kind == Tok::Ident) {
      if (lex.isIdent("partition")) {
        expectAttr("partition");
        lex.expectPunct('[');
        a.partition.clear();
        while (!lex.isPunct(']')) {
          DimPartition dp;
          Token k = lex.expectIdent("partition kind");
          if (k.text == "none")
            dp.kind = PartitionKind::None;
          else if (k.text == "cyclic")
            dp.kind = PartitionKind::Cyclic;
          else if (k.text == "block")
            dp.kind = PartitionKind::Block;
          else
            throw ParseError(k.line, k.col,
                             "unknown partition kind '" + k.text + "'");
          lex.expectPunct(':');
          dp.factor = lex.expectInt();
          a.partition.push_back(dp);
          if (lex.isPunct(','))
            lex.next();
        }
        lex.expectPunct(']');
      } else if (lex.isIdent("depth")) {
        expectAttr("depth");
        a.depth = lex.expectInt();
      } else if (lex.isIdent("output")) {
        lex.next();
        a.output = true;
      } else {
        break; // next declaration or op
      }
    }
    return a;
  }

  Region parseRegionUntilEof() {
    Region r;
    while (lex.peek().kind != Tok::Eof)
      r.ops.push_back(parseOp());
    return r;
  }

  Region parseBracedRegion() {
    lex.expectPunct('{');
    Region r;
    while (!lex.isPunct('}'))
      r.ops.push_back(parseOp());
    lex.expectPunct('}');
    return r;
  }

  Op parseOp() {
    Token t = lex.peek();
    if (t.kind != Tok::Ident)
      lex.fail("expected an op keyword");
    if (t.text == "loop")
      return parseLoop();
    if (t.text == "compute")
      return parseCompute();
    if (t.text == "task") {
      lex.next();
      return Op{TaskOp{parseBracedRegion()}};
    }
    if (t.text == "dispatch") {
      lex.next();
      return Op{DispatchOp{parseBracedRegion()}};
    }
    if (t.text == "node")
      return parseNode();
    if (t.text == "schedule") {
      lex.next();
      return Op{ScheduleOp{parseBracedRegion()}};
    }
    if (t.text == "alloc") {
      lex.next();
      return Op{AllocOp{lex.expectIdent("buffer").text}};
    }
    if (t.text == "copy") {
      lex.next();
      CopyOp c;
      c.src = lex.expectIdent("copy source").text;
      if (lex.peek().kind != Tok::Arrow)
        lex.fail("expected '->'");
      lex.next();
      c.dst = lex.expectIdent("copy destination").text;
      return Op{c};
    }
    if (t.text == "send") {
      lex.next();
      return Op{TokenSendOp{lex.expectIdent("stream").text}};
    }
    if (t.text == "recv") {
      lex.next();
      return Op{TokenRecvOp{lex.expectIdent("stream").text}};
    }
    lex.fail("unknown op '" + t.text + "'");
  }

  Op parseLoop() {
    lex.expectKeyword("loop");
    Loop l;
    l.iv = lex.expectIdent("loop iv").text;
    l.trip = lex.expectInt();
    while (lex.peek().kind == Tok::Ident) {
      if (lex.isIdent("unroll")) {
        expectAttr("unroll");
        l.unroll = lex.expectInt();
      } else if (lex.isIdent("reduction")) {
        lex.next();
        l.reduction = true;
      } else {
        lex.fail("unknown loop attribute");
      }
    }
    l.body = parseBracedRegion();
    return Op{std::move(l)};
  }

  Op parseNode() {
    lex.expectKeyword("node");
    NodeOp n;
    n.id = lex.expectIdent("node id").text;
    expectAttr("inputs");
    lex.expectPunct('[');
    while (!lex.isPunct(']')) {
      NodeInput in;
      in.buffer = lex.expectIdent("input buffer").text;
      lex.expectPunct(':');
      Token e = lex.expectIdent("effect");
      if (e.text == "RO")
        in.effect = Effect::RO;
      else if (e.text == "WO")
        in.effect = Effect::WO;
      else if (e.text == "RW")
        in.effect = Effect::RW;
      else
        throw ParseError(e.line, e.col, "unknown effect '" + e.text + "'");
      n.inputs.push_back(in);
      if (lex.isPunct(','))
        lex.next();
    }
    lex.expectPunct(']');
    if (lex.isIdent("params")) {
      expectAttr("params");
      lex.expectPunct('[');
      while (!lex.isPunct(']')) {
        n.params.push_back(parseNumber());
        if (lex.isPunct(','))
          lex.next();
      }
      lex.expectPunct(']');
    }
    n.body = parseBracedRegion();
    return Op{std::move(n)};
  }

  double parseNumber() {
    bool neg = false;
    if (lex.isPunct('-')) {
      lex.next();
      neg = true;
    }
    Token t = lex.peek();
    if (t.kind != Tok::Int && t.kind != Tok::Float)
      lex.fail("expected a number");
    lex.next();
    return neg ? -t.floatValue : t.floatValue;
  }

  // One affine dim index: terms c*iv joined by '+', plus an integer offset.
  DimIndex parseDimIndex() {
    DimIndex d;
    bool first = true;
    for (;;) {
      bool neg = false;
      if (!first && lex.isPunct('+'))
        lex.next();
      else if (lex.isPunct('-')) {
        lex.next();
        neg = true;
      } else if (!first)
        break;
      if (lex.peek().kind == Tok::Ident) {
        AccessTerm t;
        t.iv = lex.next().text;
        if (lex.isPunct('*')) { // iv * c  form
          lex.next();
          t.stride = Rational(lex.expectInt());
        }
        if (neg)
          t.stride = Rational(-t.stride.num, t.stride.den);
        d.terms.push_back(t);
      } else if (lex.peek().kind == Tok::Int) {
        std::int64_t c = lex.next().intValue;
        if (lex.isPunct('*')) { // c * iv  form
          lex.next();
          AccessTerm t;
          t.iv = lex.expectIdent("iv").text;
          t.stride = Rational(neg ? -c : c);
          d.terms.push_back(t);
        } else {
          d.offset += neg ? -c : c;
        }
      } else if (lex.isPunct('(')) { // (n/d) * iv  form
        lex.next();
        std::int64_t num = lex.expectInt();
        lex.expectPunct('/');
        std::int64_t den = lex.expectInt();
        lex.expectPunct(')');
        lex.expectPunct('*');
        AccessTerm t;
        t.iv = lex.expectIdent("iv").text;
        t.stride = Rational(neg ? -num : num, den);
        d.terms.push_back(t);
      } else {
        lex.fail("expected an index term");
      }
      first = false;
      if (!lex.isPunct('+') && !lex.isPunct('-'))
        break;
    }
    return d;
  }

  Access parseAccess(const std::string &name) {
    Access a;
    a.array = name;
    while (lex.isPunct('[')) {
      lex.next();
      a.index.push_back(parseDimIndex());
      lex.expectPunct(']');
    }
    return a;
  }

  // Expression grammar shared with the kernel language:
  //   expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)*
  //   factor := ['-'] (number | access | '(' expr ')')
  int parseExpr(Compute &c) {
    int lhs = parseTerm(c);
    while (lex.isPunct('+') || lex.isPunct('-')) {
      bool add = lex.isPunct('+');
      lex.next();
      int rhs = parseTerm(c);
      ExprNode e;
      e.kind = add ? ExprKind::Add : ExprKind::Sub;
      e.lhs = lhs;
      e.rhs = rhs;
      c.expr.push_back(e);
      lhs = int(c.expr.size()) - 1;
    }
    return lhs;
  }

  int parseTerm(Compute &c) {
    int lhs = parseFactor(c);
    while (lex.isPunct('*') || lex.isPunct('/')) {
      bool mul = lex.isPunct('*');
      lex.next();
      int rhs = parseFactor(c);
      ExprNode e;
      e.kind = mul ? ExprKind::Mul : ExprKind::Div;
      e.lhs = lhs;
      e.rhs = rhs;
      c.expr.push_back(e);
      lhs = int(c.expr.size()) - 1;
    }
    return lhs;
  }

  int parseFactor(Compute &c) {
    if (lex.isPunct('-')) {
      lex.next();
      Token t = lex.peek();
      if (t.kind == Tok::Int || t.kind == Tok::Float) {
        lex.next();
        ExprNode e;
        e.kind = ExprKind::Const;
        e.value = -t.floatValue;
        c.expr.push_back(e);
        return int(c.expr.size()) - 1;
      }
      lex.fail("expected a number after unary '-'");
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
      Access a = parseAccess(t.text);
      c.reads.push_back(a);
      ExprNode e;
      e.kind = ExprKind::Read;
      e.read = int(c.reads.size()) - 1;
      c.expr.push_back(e);
      return int(c.expr.size()) - 1;
    }
    if (lex.isPunct('(')) {
      lex.next();
      int idx = parseExpr(c);
      lex.expectPunct(')');
      return idx;
    }
    lex.fail("expected a number, array read, or parenthesized expression");
  }

  Op parseCompute() {
    lex.expectKeyword("compute");
    Compute c;
    Token name = lex.expectIdent("array");
    c.target = parseAccess(name.text);
    if (lex.peek().kind == Tok::PlusEq) {
      lex.next();
      c.accumulate = true;
    } else {
      lex.expectPunct('=');
    }
    int root = parseExpr(c);
    // Canonical arena layout: the root must be the last node. The parser
    // builds bottom-up, so this holds unless the expression is a bare
    // parenthesized sub-expression; normalize defensively.
    if (root != int(c.expr.size()) - 1)
      c.expr.push_back(c.expr[root]);
    return Op{std::move(c)};
  }
};

} // namespace

std::string dump(const Program &p) { return Printer(p).run(); }

Program load(const std::string &text) { return Loader(text).run(); }

} // namespace hida
