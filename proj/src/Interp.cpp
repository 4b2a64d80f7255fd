//===- Interp.cpp - Reference interpreter ---------------------------------===//

#include "hida/Interp.h"

#include "hida/Serialize.h"

#include <cmath>
#include <random>

namespace hida {

namespace {

struct Buffer {
  ElemType elem = ElemType::Float32;
  std::vector<std::int64_t> shape;
  std::vector<float> f;
  std::vector<std::int32_t> i;
  bool initialized = false;

  std::int64_t size() const {
    return elem == ElemType::Int32 ? std::int64_t(i.size())
                                   : std::int64_t(f.size());
  }
};

class Machine {
public:
  Machine(const Program &p,
          const std::map<std::string, std::vector<double>> &inputs,
          const InterpOptions &opts)
      : prog(p), opts(opts) {
    for (const BufferSpec &a : p.arrays) {
      Buffer b;
      b.elem = a.elem;
      b.shape = a.shape;
      std::int64_t n = a.elementCount();
      if (a.elem == ElemType::Int32)
        b.i.assign(n, 0);
      else
        b.f.assign(n, 0.0f);
      auto it = inputs.find(a.id);
      if (it != inputs.end()) {
        if (std::int64_t(it->second.size()) != n)
          throw InterpError("input for '" + a.id + "' has " +
                            std::to_string(it->second.size()) +
                            " values, expected " + std::to_string(n));
        for (std::int64_t k = 0; k < n; ++k) {
          if (a.elem == ElemType::Int32)
            b.i[k] = std::int32_t(std::llround(it->second[k]));
          else
            b.f[k] = float(it->second[k]);
        }
        b.initialized = true;
      }
      buffers.emplace(a.id, std::move(b));
    }
  }

  InterpResult run() {
    execRegion(prog.top);
    InterpResult res;
    for (const BufferSpec &a : prog.arrays) {
      std::vector<double> vals = snapshot(a.id);
      if (a.output)
        res.outputs.emplace(a.id, vals);
      res.arrays.emplace(a.id, std::move(vals));
    }
    return res;
  }

private:
  const Program &prog;
  InterpOptions opts;
  std::map<std::string, Buffer> buffers;
  std::map<std::string, std::int64_t> tokensSent;
  std::vector<std::pair<std::string, std::int64_t>> ivs;

  std::vector<double> snapshot(const std::string &id) const {
    const Buffer &b = buffers.at(id);
    std::vector<double> out;
    if (b.elem == ElemType::Int32)
      out.assign(b.i.begin(), b.i.end());
    else
      out.assign(b.f.begin(), b.f.end());
    return out;
  }

  std::int64_t ivValue(const std::string &iv) const {
    for (auto it = ivs.rbegin(); it != ivs.rend(); ++it)
      if (it->first == iv)
        return it->second;
    throw InterpError("loop variable '" + iv + "' not bound");
  }

  std::int64_t flattenIndex(const Access &a, const Buffer &b) const {
    std::int64_t flat = 0;
    for (size_t d = 0; d < a.index.size(); ++d) {
      const DimIndex &di = a.index[d];
      Rational idx(di.offset);
      for (const AccessTerm &t : di.terms)
        idx = idx + t.stride * Rational(ivValue(t.iv));
      if (!idx.isInteger())
        throw InterpError("non-integer index on '" + a.array + "' dim " +
                          std::to_string(d));
      std::int64_t v = idx.num;
      if (v < 0 || v >= b.shape[d])
        throw InterpError("index " + std::to_string(v) + " out of bounds on '" +
                          a.array + "' dim " + std::to_string(d) +
                          " (extent " + std::to_string(b.shape[d]) + ")");
      flat = flat * b.shape[d] + v;
    }
    return flat;
  }

  Buffer &bufferFor(const Access &a) {
    auto it = buffers.find(a.array);
    if (it == buffers.end())
      throw InterpError("access to undeclared array '" + a.array + "'");
    return it->second;
  }

  void checkInitialized(const Buffer &b, const std::string &id) const {
    if (!opts.zeroFillUninitialized && !b.initialized)
      throw InterpError("read of uninitialized array '" + id + "'");
  }

  float readF(const Access &a) {
    Buffer &b = bufferFor(a);
    checkInitialized(b, a.array);
    std::int64_t k = flattenIndex(a, b);
    return b.elem == ElemType::Int32 ? float(b.i[k]) : b.f[k];
  }

  std::int32_t readI(const Access &a) {
    Buffer &b = bufferFor(a);
    checkInitialized(b, a.array);
    std::int64_t k = flattenIndex(a, b);
    return b.elem == ElemType::Int32 ? b.i[k] : std::int32_t(b.f[k]);
  }

  // Float statements evaluate in float with per-operation rounding; integer
  // statements evaluate in int32 (wrapping via int64 truncation). This
  // matches the emitted C++, which computes in the target element type.
  float evalF(const Compute &c, int idx) {
    const ExprNode &e = c.expr[idx];
    switch (e.kind) {
    case ExprKind::Const:
      return float(e.value);
    case ExprKind::Read:
      return readF(c.reads[e.read]);
    case ExprKind::Add:
      return evalF(c, e.lhs) + evalF(c, e.rhs);
    case ExprKind::Sub:
      return evalF(c, e.lhs) - evalF(c, e.rhs);
    case ExprKind::Mul:
      return evalF(c, e.lhs) * evalF(c, e.rhs);
    case ExprKind::Div:
      return evalF(c, e.lhs) / evalF(c, e.rhs);
    }
    return 0;
  }

  std::int32_t evalI(const Compute &c, int idx) {
    const ExprNode &e = c.expr[idx];
    switch (e.kind) {
    case ExprKind::Const:
      return std::int32_t(e.value);
    case ExprKind::Read:
      return readI(c.reads[e.read]);
    default: {
      std::int64_t l = evalI(c, e.lhs);
      std::int64_t r = evalI(c, e.rhs);
      std::int64_t v = 0;
      switch (e.kind) {
      case ExprKind::Add:
        v = l + r;
        break;
      case ExprKind::Sub:
        v = l - r;
        break;
      case ExprKind::Mul:
        v = l * r;
        break;
      case ExprKind::Div:
        if (r == 0)
          throw InterpError("integer division by zero");
        v = l / r;
        break;
      default:
        break;
      }
      return std::int32_t(v);
    }
    }
  }

  void execCompute(const Compute &c) {
    Buffer &b = bufferFor(c.target);
    std::int64_t k = flattenIndex(c.target, b);
    int root = int(c.expr.size()) - 1;
    if (b.elem == ElemType::Float32) {
      float v = evalF(c, root);
      if (c.accumulate) {
        checkInitialized(b, c.target.array);
        v = b.f[k] + v;
      }
      b.f[k] = v;
    } else {
      std::int32_t v = evalI(c, root);
      if (c.accumulate) {
        checkInitialized(b, c.target.array);
        v = std::int32_t(std::int64_t(b.i[k]) + v);
      }
      b.i[k] = v;
    }
    b.initialized = true;
  }

  void execCopy(const CopyOp &c) {
    auto si = buffers.find(c.src);
    auto di = buffers.find(c.dst);
    if (si == buffers.end() || di == buffers.end())
      throw InterpError("copy references undeclared array");
    checkInitialized(si->second, c.src);
    di->second.f = si->second.f;
    di->second.i = si->second.i;
    di->second.initialized = true;
  }

  void execRegion(const Region &r) {
    for (const Op &op : r.ops)
      execOp(op);
  }

  void execOp(const Op &op) {
    if (op.is<Loop>()) {
      const Loop &l = op.as<Loop>();
      ivs.emplace_back(l.iv, 0);
      for (std::int64_t t = 0; t < l.trip; ++t) {
        ivs.back().second = t;
        execRegion(l.body);
      }
      ivs.pop_back();
    } else if (op.is<Compute>()) {
      execCompute(op.as<Compute>());
    } else if (op.is<CopyOp>()) {
      execCopy(op.as<CopyOp>());
    } else if (op.is<TokenSendOp>()) {
      ++tokensSent[op.as<TokenSendOp>().chan];
    } else if (op.is<TokenRecvOp>()) {
      const std::string &chan = op.as<TokenRecvOp>().chan;
      if (tokensSent[chan] < 1)
        throw InterpError("token received on '" + chan +
                          "' before it was sent");
    } else if (op.is<AllocOp>()) {
      // Storage exists for the whole run; allocation sites only matter for
      // structure.
    } else {
      for (const Region *sub : subRegions(op))
        execRegion(*sub);
    }
  }
};

} // namespace

InterpResult interpret(const Program &p,
                       const std::map<std::string, std::vector<double>> &inputs,
                       const InterpOptions &opts) {
  return Machine(p, inputs, opts).run();
}

std::map<std::string, std::vector<double>> seededInputs(const Program &p,
                                                        std::uint64_t seed) {
  std::map<std::string, std::vector<double>> inputs;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> fdist(-1.0, 1.0);
  std::uniform_int_distribution<int> idist(-100, 100);
  AccessSummary all = collectAccesses(p.top);
  auto isWritten = [&](const std::string &id) {
    for (const Access &w : all.writes)
      if (w.array == id)
        return true;
    return false;
  };
  for (const BufferSpec &a : p.arrays) {
    if (a.placement != Placement::External || isWritten(a.id))
      continue;
    std::vector<double> vals(a.elementCount());
    for (double &v : vals)
      v = a.elem == ElemType::Int32 ? double(idist(gen))
                                    : double(float(fdist(gen)));
    inputs.emplace(a.id, std::move(vals));
  }
  return inputs;
}

} // namespace hida
