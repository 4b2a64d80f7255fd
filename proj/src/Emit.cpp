//===- Emit.cpp - HLS-style C++ emission -----------------------------------===//

#include "hida/Emit.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <stdexcept>

namespace hida {

namespace {

std::string sanitize(const std::string &s) {
  std::string out;
  for (char ch : s)
    out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_') ? ch
                                                                       : '_';
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0])))
    out = "k" + out;
  return out;
}

const char *elemName(ElemType t) {
  return t == ElemType::Int32 ? "std::int32_t" : "float";
}

// Shortest decimal that round-trips the float the interpreter would use.
std::string floatLit(double v) {
  float f = static_cast<float>(v);
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), f);
  std::string s(buf, p);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s + "f";
}

std::string intLit(double v) {
  return std::to_string(static_cast<std::int32_t>(v));
}

class Emitter {
public:
  Emitter(const Program &p, const EmitOptions &opts) : p(p), opts(opts) {}

  EmitResult run() {
    walk(p.top, "", [](const Op &op, const std::string &) {
      if (op.is<TaskOp>() || op.is<DispatchOp>())
        throw std::invalid_argument(
            std::string("cannot emit functional op '") +
            (op.is<TaskOp>() ? "task" : "dispatch") +
            "'; lower the program first");
    });

    EmitResult res;
    res.headerName = p.name + ".h";
    res.sourceName = p.name + "_top.cpp";
    res.topSymbol = sanitize(p.name) + "_top";

    res.header = emitHeader(res.topSymbol);
    res.source = emitSource(res);
    return res;
  }

private:
  const Program &p;
  EmitOptions opts;
  std::string out;
  int indent = 0;

  //===--------------------------------------------------------------------===//
  // Text helpers
  //===--------------------------------------------------------------------===//

  void line(const std::string &s) {
    if (!s.empty())
      out.append(static_cast<std::size_t>(indent) * 2, ' ');
    out += s;
    out += '\n';
  }

  // Pragmas sit in column zero, as the HLS tools print them.
  void pragma(const std::string &s) {
    if (!opts.plain)
      out += "#pragma HLS " + s + "\n";
  }

  std::string arrayParam(const BufferSpec &spec, bool readOnly) const {
    std::string s = readOnly ? "const " : "";
    s += elemName(spec.elem);
    s += " " + sanitize(spec.id);
    for (std::int64_t e : spec.shape)
      s += "[" + std::to_string(e) + "]";
    return s;
  }

  std::string arrayDecl(const BufferSpec &spec) const {
    std::string s = elemName(spec.elem);
    s += " " + sanitize(spec.id);
    for (std::int64_t e : spec.shape)
      s += "[" + std::to_string(e) + "]";
    s += " = {};";
    return s;
  }

  void partitionPragmas(const BufferSpec &spec) {
    for (std::size_t d = 0; d < spec.partition.size(); ++d) {
      const DimPartition &dp = spec.partition[d];
      if (dp.kind == PartitionKind::None || dp.factor <= 1)
        continue;
      pragma("array_partition variable=" + sanitize(spec.id) +
             (dp.kind == PartitionKind::Cyclic ? " cyclic" : " block") +
             " factor=" + std::to_string(dp.factor) + " dim=" +
             std::to_string(d + 1));
    }
  }

  //===--------------------------------------------------------------------===//
  // Expressions
  //===--------------------------------------------------------------------===//

  std::string indexStr(const DimIndex &di) const {
    std::string s;
    for (const AccessTerm &t : di.terms) {
      if (!s.empty())
        s += " + ";
      std::string term = sanitize(t.iv);
      if (t.stride.num != 1 || t.stride.den != 1)
        term += " * " + std::to_string(t.stride.num);
      if (t.stride.den != 1)
        term += " / " + std::to_string(t.stride.den);
      s += term;
    }
    if (di.offset != 0 || s.empty()) {
      if (!s.empty())
        s += " + ";
      s += std::to_string(di.offset);
    }
    return s;
  }

  std::string accessStr(const Access &a) const {
    std::string s = sanitize(a.array);
    for (const DimIndex &di : a.index)
      s += "[" + indexStr(di) + "]";
    return s;
  }

  ElemType elemOf(const std::string &array) const {
    const BufferSpec *spec = p.findArray(array);
    return spec ? spec->elem : ElemType::Float32;
  }

  std::string readStr(const Access &a, ElemType want) const {
    std::string s = accessStr(a);
    ElemType have = elemOf(a.array);
    if (have == want)
      return s;
    return want == ElemType::Float32 ? "(float)" + s
                                     : "(std::int32_t)" + s;
  }

  static const char *opToken(ExprKind k) {
    switch (k) {
    case ExprKind::Add:
      return " + ";
    case ExprKind::Sub:
      return " - ";
    case ExprKind::Mul:
      return " * ";
    case ExprKind::Div:
      return " / ";
    default:
      return "";
    }
  }

  std::string exprF(const Compute &c, int idx) const {
    const ExprNode &e = c.expr[static_cast<std::size_t>(idx)];
    switch (e.kind) {
    case ExprKind::Const:
      return floatLit(e.value);
    case ExprKind::Read:
      return readStr(c.reads[static_cast<std::size_t>(e.read)],
                     ElemType::Float32);
    default:
      return "(" + exprF(c, e.lhs) + opToken(e.kind) + exprF(c, e.rhs) + ")";
    }
  }

  // Integer ops widen to 64 bits and truncate back per operator, matching
  // the interpreter and dodging signed-overflow UB.
  std::string exprI(const Compute &c, int idx) const {
    const ExprNode &e = c.expr[static_cast<std::size_t>(idx)];
    switch (e.kind) {
    case ExprKind::Const:
      return intLit(e.value);
    case ExprKind::Read:
      return readStr(c.reads[static_cast<std::size_t>(e.read)],
                     ElemType::Int32);
    default:
      return "hida_i32((std::int64_t)" + exprI(c, e.lhs) + opToken(e.kind) +
             "(std::int64_t)" + exprI(c, e.rhs) + ")";
    }
  }

  void emitCompute(const Compute &c) {
    ElemType elem = elemOf(c.target.array);
    std::string target = accessStr(c.target);
    int root = static_cast<int>(c.expr.size()) - 1;
    if (elem == ElemType::Float32) {
      if (c.accumulate)
        line(target + " += " + exprF(c, root) + ";");
      else
        line(target + " = " + exprF(c, root) + ";");
    } else {
      if (c.accumulate)
        line(target + " = hida_i32((std::int64_t)" + target +
             " + (std::int64_t)" + exprI(c, root) + ");");
      else
        line(target + " = " + exprI(c, root) + ";");
    }
  }

  //===--------------------------------------------------------------------===//
  // Ops
  //===--------------------------------------------------------------------===//

  static bool hasLoop(const Region &r) {
    for (const Op &op : r.ops) {
      if (op.is<Loop>())
        return true;
      for (const Region *sub : subRegions(op))
        if (hasLoop(*sub))
          return true;
    }
    return false;
  }

  std::string copyIv(std::size_t d) const {
    std::string iv = "c" + std::to_string(d);
    while (p.findArray(iv))
      iv += "_";
    return iv;
  }

  void emitCopy(const CopyOp &c) {
    const BufferSpec *spec = p.findArray(c.src);
    if (!spec)
      throw std::invalid_argument("copy from undeclared array '" + c.src +
                                  "'");
    std::string src = sanitize(c.src), dst = sanitize(c.dst);
    std::string idx;
    for (std::size_t d = 0; d < spec->shape.size(); ++d) {
      std::string iv = copyIv(d);
      line("for (int " + iv + " = 0; " + iv + " < " +
           std::to_string(spec->shape[d]) + "; ++" + iv + ") {");
      ++indent;
      if (d + 1 == spec->shape.size())
        pragma("pipeline II=1");
      idx += "[" + iv + "]";
    }
    line(dst + idx + " = " + src + idx + ";");
    for (std::size_t d = 0; d < spec->shape.size(); ++d) {
      --indent;
      line("}");
    }
  }

  void emitLoop(const Loop &l) {
    std::string iv = sanitize(l.iv);
    line("for (int " + iv + " = 0; " + iv + " < " + std::to_string(l.trip) +
         "; ++" + iv + ") {");
    ++indent;
    if (l.unroll > 1)
      pragma("unroll factor=" + std::to_string(l.unroll));
    if (!hasLoop(l.body))
      pragma("pipeline II=1");
    emitRegion(l.body);
    --indent;
    line("}");
  }

  void emitRegion(const Region &r) {
    for (const Op &op : r.ops)
      emitOp(op);
  }

  void emitOp(const Op &op) {
    if (op.is<Loop>()) {
      emitLoop(op.as<Loop>());
    } else if (op.is<Compute>()) {
      emitCompute(op.as<Compute>());
    } else if (op.is<CopyOp>()) {
      emitCopy(op.as<CopyOp>());
    } else if (op.is<AllocOp>()) {
      const BufferSpec *spec = p.findArray(op.as<AllocOp>().buffer);
      if (!spec)
        throw std::invalid_argument("alloc of undeclared array '" +
                                    op.as<AllocOp>().buffer + "'");
      line(arrayDecl(*spec));
      if (!opts.plain && spec->depth > 1)
        line("// " + sanitize(spec->id) + ": channel depth " +
             std::to_string(spec->depth));
      partitionPragmas(*spec);
    } else if (op.is<TokenSendOp>()) {
      if (!opts.plain)
        line(sanitize(op.as<TokenSendOp>().chan) + ".write(true);");
    } else if (op.is<TokenRecvOp>()) {
      if (!opts.plain)
        line(sanitize(op.as<TokenRecvOp>().chan) + ".read();");
    } else if (op.is<NodeOp>()) {
      // Nested nodes (inside another node's schedule) are emitted inline.
      line("{");
      ++indent;
      emitRegion(op.as<NodeOp>().body);
      --indent;
      line("}");
    } else if (op.is<ScheduleOp>()) {
      emitRegion(op.as<ScheduleOp>().body);
    }
  }

  //===--------------------------------------------------------------------===//
  // Functions
  //===--------------------------------------------------------------------===//

  std::vector<std::string> tokenChannels(const NodeOp &node) const {
    std::vector<std::string> chans;
    walk(node.body, "", [&](const Op &op, const std::string &) {
      std::string chan;
      if (op.is<TokenSendOp>())
        chan = op.as<TokenSendOp>().chan;
      else if (op.is<TokenRecvOp>())
        chan = op.as<TokenRecvOp>().chan;
      if (!chan.empty() &&
          std::find(chans.begin(), chans.end(), chan) == chans.end())
        chans.push_back(chan);
    });
    return chans;
  }

  std::string nodeSignature(const NodeOp &node) const {
    std::string s = "static void " + sanitize(node.id) + "(";
    bool first = true;
    for (const NodeInput &in : node.inputs) {
      const BufferSpec *spec = p.findArray(in.buffer);
      if (!spec)
        throw std::invalid_argument("node '" + node.id +
                                    "' inputs undeclared array '" + in.buffer +
                                    "'");
      if (!first)
        s += ", ";
      s += arrayParam(*spec, in.effect == Effect::RO);
      first = false;
    }
    if (!opts.plain) {
      for (const std::string &chan : tokenChannels(node)) {
        if (!first)
          s += ", ";
        s += "hls::stream<bool> &" + sanitize(chan);
        first = false;
      }
    }
    s += ")";
    return s;
  }

  void emitNodeFunction(const NodeOp &node) {
    line(nodeSignature(node) + " {");
    ++indent;
    emitRegion(node.body);
    --indent;
    line("}");
    line("");
  }

  std::vector<const BufferSpec *> externalArrays() const {
    std::vector<const BufferSpec *> ext;
    for (const BufferSpec &a : p.arrays)
      if (a.placement == Placement::External)
        ext.push_back(&a);
    return ext;
  }

  bool externalIsReadOnly(const BufferSpec &spec) const {
    Effect e = Effect::RO;
    if (!computeEffect(p.top, spec.id, e))
      return true;
    return e == Effect::RO;
  }

  std::string topSignature(const std::string &symbol) const {
    std::string s = "void " + symbol + "(";
    bool first = true;
    for (const BufferSpec *spec : externalArrays()) {
      if (!first)
        s += ", ";
      s += arrayParam(*spec, externalIsReadOnly(*spec));
      first = false;
    }
    s += ")";
    return s;
  }

  bool needsIntHelper() const {
    bool needed = false;
    walk(p.top, "", [&](const Op &op, const std::string &) {
      if (!op.is<Compute>())
        return;
      const Compute &c = op.as<Compute>();
      if (elemOf(c.target.array) != ElemType::Int32)
        return;
      if (c.accumulate || c.opcount() > 0)
        needed = true;
    });
    return needed;
  }

  std::string emitHeader(const std::string &symbol) {
    out.clear();
    indent = 0;
    line("// " + p.name + ".h - generated; do not edit.");
    line("#pragma once");
    line("");
    line("#include <cstdint>");
    line("");
    line(topSignature(symbol) + ";");
    return out;
  }

  std::string emitSource(const EmitResult &res) {
    out.clear();
    indent = 0;
    line("// " + res.sourceName + " - generated; do not edit.");
    line("#include \"" + res.headerName + "\"");
    if (!opts.plain && !p.streams.empty()) {
      line("");
      line("#include \"hls_stream.h\"");
    }
    line("");
    if (needsIntHelper()) {
      line("static inline std::int32_t hida_i32(std::int64_t v) {");
      line("  return static_cast<std::int32_t>(v);");
      line("}");
      line("");
    }

    // One function per node found at schedule level, in program order.
    std::vector<const NodeOp *> nodes;
    for (const Op &op : p.top.ops)
      if (op.is<ScheduleOp>())
        for (const Op &inner : op.as<ScheduleOp>().body.ops)
          if (inner.is<NodeOp>())
            nodes.push_back(&inner.as<NodeOp>());
    for (const NodeOp *node : nodes)
      emitNodeFunction(*node);

    line(topSignature(res.topSymbol) + " {");
    ++indent;
    pragma("dataflow");
    for (const BufferSpec *spec : externalArrays())
      partitionPragmas(*spec);
    if (!opts.plain) {
      for (const StreamSpec &s : p.streams) {
        line("static hls::stream<bool> " + sanitize(s.id) + ";");
        pragma("stream variable=" + sanitize(s.id) + " depth=" +
               std::to_string(s.depth));
      }
    }
    for (const Op &op : p.top.ops) {
      if (!op.is<ScheduleOp>()) {
        emitOp(op);
        continue;
      }
      for (const Op &inner : op.as<ScheduleOp>().body.ops) {
        if (inner.is<AllocOp>()) {
          emitOp(inner);
        } else if (inner.is<NodeOp>()) {
          const NodeOp &node = inner.as<NodeOp>();
          std::string call = sanitize(node.id) + "(";
          bool first = true;
          for (const NodeInput &in : node.inputs) {
            if (!first)
              call += ", ";
            call += sanitize(in.buffer);
            first = false;
          }
          if (!opts.plain) {
            for (const std::string &chan : tokenChannels(node)) {
              if (!first)
                call += ", ";
              call += sanitize(chan);
              first = false;
            }
          }
          call += ");";
          line(call);
        } else {
          emitOp(inner);
        }
      }
    }
    --indent;
    line("}");
    return out;
  }
};

} // namespace

EmitResult emitCpp(const Program &p, const EmitOptions &opts) {
  return Emitter(p, opts).run();
}

} // namespace hida
