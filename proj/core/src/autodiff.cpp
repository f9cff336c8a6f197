#include "ppt/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace ppt {

namespace {

constexpr double kExpClamp = 700.0;  // exp(700) is the largest finite double power

std::vector<int> broadcast_shape(const std::vector<int>& a, const std::vector<int>& b, const char* op) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(op) + ": rank mismatch " + Tensor::shape_str(a) +
                                " vs " + Tensor::shape_str(b));
  }
  std::vector<int> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) {
      out[i] = a[i];
    } else if (a[i] == 1) {
      out[i] = b[i];
    } else if (b[i] == 1) {
      out[i] = a[i];
    } else {
      throw std::invalid_argument(std::string(op) + ": shapes not broadcastable " +
                                  Tensor::shape_str(a) + " vs " + Tensor::shape_str(b));
    }
  }
  return out;
}

// Element strides of an operand viewed under `out` shape; broadcast axes get 0.
std::vector<int64_t> bcast_strides(const std::vector<int>& shape, const std::vector<int>& out) {
  std::vector<int64_t> strides(shape.size(), 0);
  int64_t s = 1;
  for (int i = static_cast<int>(shape.size()) - 1; i >= 0; --i) {
    strides[static_cast<size_t>(i)] = (shape[static_cast<size_t>(i)] == 1 && out[static_cast<size_t>(i)] != 1) ? 0 : s;
    s *= shape[static_cast<size_t>(i)];
  }
  return strides;
}

// Iterates the output linearly, tracking offsets into two broadcast operands.
template <typename F>
void for_each_bcast(const std::vector<int>& out_shape, const std::vector<int64_t>& sa,
                    const std::vector<int64_t>& sb, F&& f) {
  const int rank = static_cast<int>(out_shape.size());
  const int64_t total = Tensor::shape_size(out_shape);
  std::vector<int> idx(static_cast<size_t>(rank), 0);
  int64_t oa = 0, ob = 0;
  for (int64_t lin = 0; lin < total; ++lin) {
    f(lin, oa, ob);
    for (int ax = rank - 1; ax >= 0; --ax) {
      ++idx[static_cast<size_t>(ax)];
      oa += sa[static_cast<size_t>(ax)];
      ob += sb[static_cast<size_t>(ax)];
      if (idx[static_cast<size_t>(ax)] < out_shape[static_cast<size_t>(ax)]) break;
      oa -= sa[static_cast<size_t>(ax)] * out_shape[static_cast<size_t>(ax)];
      ob -= sb[static_cast<size_t>(ax)] * out_shape[static_cast<size_t>(ax)];
      idx[static_cast<size_t>(ax)] = 0;
    }
  }
}

void check_same_tape(Var a, Var b, const char* op) {
  if (a.tape() != b.tape()) throw std::logic_error(std::string(op) + ": operands from different tapes");
}

enum class BinOp { add, sub, mul, div };

const char* bin_name(BinOp op) {
  switch (op) {
    case BinOp::add: return "add";
    case BinOp::sub: return "sub";
    case BinOp::mul: return "mul";
    case BinOp::div: return "div";
  }
  return "?";
}

}  // namespace

// ---- Var -------------------------------------------------------------------

const Tensor& Var::value() const { return tape_->value(*this); }
const Tensor& Var::grad() const { return tape_->grad(*this); }
bool Var::requires_grad() const { return tape_->requires_grad(*this); }

// ---- Tape ------------------------------------------------------------------

Var Tape::input(Tensor value, bool requires_grad) {
  return emplace(std::move(value), requires_grad, nullptr);
}

Var Tape::emplace(Tensor value, bool requires_grad, std::function<void(Tape&)> backward_fn) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backward_fn = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor& Tape::grad_buffer(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.empty() && n.value.size() > 0) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::accumulate(int id, const Tensor& delta) {
  Tensor& g = grad_buffer(id);
  for (int64_t i = 0; i < delta.size(); ++i) g[i] += delta[i];
  mark_touched(id);
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_[static_cast<size_t>(v.id())];
  if (!n.requires_grad) throw std::logic_error("gradient requested for a node without requires_grad");
  if (!backward_done_) throw std::logic_error("gradient requested before backward()");
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw std::logic_error("backward: root belongs to another tape");
  if (backward_done_) throw std::logic_error("backward called twice without reset()");
  if (value(root).size() != 1) {
    throw std::invalid_argument("backward root must be scalar, got shape " + value(root).shape_str());
  }
  for (Node& n : nodes_) {
    n.touched = false;
    if (n.requires_grad) n.grad = Tensor(n.value.shape());
  }
  Node& rn = nodes_[static_cast<size_t>(root.id())];
  if (rn.requires_grad) {
    rn.grad[0] = 1.0;
    rn.touched = true;
    for (int i = root.id(); i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (n.touched && n.backward_fn) n.backward_fn(*this);
    }
  }
  backward_done_ = true;
}

void Tape::reset() {
  for (Node& n : nodes_) {
    n.grad = Tensor();
    n.touched = false;
  }
  backward_done_ = false;
}

// ---- elementwise binary -----------------------------------------------------

static Var binary(BinOp op, Var a, Var b) {
  const char* name = bin_name(op);
  check_same_tape(a, b, name);
  Tape& t = *a.tape();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::vector<int> out_shape = broadcast_shape(av.shape(), bv.shape(), name);
  Tensor out(out_shape);

  if (op == BinOp::div) {
    for (int64_t i = 0; i < bv.size(); ++i) {
      if (bv[i] == 0.0) throw std::domain_error("div: division by zero");
    }
  }

  const bool same = av.same_shape(bv);
  if (same) {
    const double* pa = av.ptr();
    const double* pb = bv.ptr();
    double* po = out.ptr();
    const int64_t n = out.size();
    switch (op) {
      case BinOp::add: for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i]; break;
      case BinOp::sub: for (int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i]; break;
      case BinOp::mul: for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i]; break;
      case BinOp::div: for (int64_t i = 0; i < n; ++i) po[i] = pa[i] / pb[i]; break;
    }
  } else {
    const auto sa = bcast_strides(av.shape(), out_shape);
    const auto sb = bcast_strides(bv.shape(), out_shape);
    const double* pa = av.ptr();
    const double* pb = bv.ptr();
    double* po = out.ptr();
    switch (op) {
      case BinOp::add:
        for_each_bcast(out_shape, sa, sb, [&](int64_t o, int64_t ia, int64_t ib) { po[o] = pa[ia] + pb[ib]; });
        break;
      case BinOp::sub:
        for_each_bcast(out_shape, sa, sb, [&](int64_t o, int64_t ia, int64_t ib) { po[o] = pa[ia] - pb[ib]; });
        break;
      case BinOp::mul:
        for_each_bcast(out_shape, sa, sb, [&](int64_t o, int64_t ia, int64_t ib) { po[o] = pa[ia] * pb[ib]; });
        break;
      case BinOp::div:
        for_each_bcast(out_shape, sa, sb, [&](int64_t o, int64_t ia, int64_t ib) { po[o] = pa[ia] / pb[ib]; });
        break;
    }
  }

  const bool rg = a.requires_grad() || b.requires_grad();
  Var outv = t.emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int aid = a.id(), bid = b.id(), oid = outv.id();
    t.node(oid).backward_fn = [op, aid, bid, oid](Tape& tp) {
      const Tensor& dy = tp.node(oid).grad;
      const Tensor& av2 = tp.node(aid).value;
      const Tensor& bv2 = tp.node(bid).value;
      const Tensor& ov2 = tp.node(oid).value;
      const auto& out_shape2 = ov2.shape();
      const auto sa = bcast_strides(av2.shape(), out_shape2);
      const auto sb = bcast_strides(bv2.shape(), out_shape2);
      const bool need_a = tp.node(aid).requires_grad;
      const bool need_b = tp.node(bid).requires_grad;
      double* da = need_a ? tp.grad_buffer(aid).ptr() : nullptr;
      double* db = need_b ? tp.grad_buffer(bid).ptr() : nullptr;
      const double* pdy = dy.ptr();
      const double* pa = av2.ptr();
      const double* pb = bv2.ptr();
      const double* po = ov2.ptr();
      for_each_bcast(out_shape2, sa, sb, [&](int64_t o, int64_t ia, int64_t ib) {
        switch (op) {
          case BinOp::add:
            if (need_a) da[ia] += pdy[o];
            if (need_b) db[ib] += pdy[o];
            break;
          case BinOp::sub:
            if (need_a) da[ia] += pdy[o];
            if (need_b) db[ib] -= pdy[o];
            break;
          case BinOp::mul:
            if (need_a) da[ia] += pdy[o] * pb[ib];
            if (need_b) db[ib] += pdy[o] * pa[ia];
            break;
          case BinOp::div:
            if (need_a) da[ia] += pdy[o] / pb[ib];
            if (need_b) db[ib] -= pdy[o] * po[o] / pb[ib];
            break;
        }
      });
      if (need_a) tp.mark_touched(aid);
      if (need_b) tp.mark_touched(bid);
    };
  }
  return outv;
}

Var add(Var a, Var b) { return binary(BinOp::add, a, b); }
Var sub(Var a, Var b) { return binary(BinOp::sub, a, b); }
Var mul(Var a, Var b) { return binary(BinOp::mul, a, b); }
Var div(Var a, Var b) { return binary(BinOp::div, a, b); }

// ---- elementwise unary -------------------------------------------------------

namespace {
enum class UnOp { relu, uexp, ulog, usqrt };
}

static Var unary(UnOp op, Var x) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  const double* px = xv.ptr();
  double* po = out.ptr();
  const int64_t n = xv.size();
  switch (op) {
    case UnOp::relu:
      for (int64_t i = 0; i < n; ++i) po[i] = px[i] > 0.0 ? px[i] : 0.0;
      break;
    case UnOp::uexp:
      for (int64_t i = 0; i < n; ++i) po[i] = std::exp(px[i] > kExpClamp ? kExpClamp : px[i]);
      break;
    case UnOp::ulog:
      for (int64_t i = 0; i < n; ++i) {
        if (px[i] <= 0.0) throw std::domain_error("log: argument must be strictly positive, got " + std::to_string(px[i]));
        po[i] = std::log(px[i]);
      }
      break;
    case UnOp::usqrt:
      for (int64_t i = 0; i < n; ++i) {
        if (px[i] < 0.0) throw std::domain_error("sqrt: argument must be non-negative, got " + std::to_string(px[i]));
        po[i] = std::sqrt(px[i]);
      }
      break;
  }
  const bool rg = x.requires_grad();
  Var outv = t.emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int xid = x.id(), oid = outv.id();
    t.node(oid).backward_fn = [op, xid, oid](Tape& tp) {
      const Tensor& dy = tp.node(oid).grad;
      const Tensor& xv2 = tp.node(xid).value;
      const Tensor& ov2 = tp.node(oid).value;
      double* dx = tp.grad_buffer(xid).ptr();
      const double* pdy = dy.ptr();
      const double* px2 = xv2.ptr();
      const double* po2 = ov2.ptr();
      const int64_t n2 = xv2.size();
      switch (op) {
        case UnOp::relu:
          for (int64_t i = 0; i < n2; ++i) dx[i] += px2[i] > 0.0 ? pdy[i] : 0.0;
          break;
        case UnOp::uexp:
          for (int64_t i = 0; i < n2; ++i) dx[i] += px2[i] > kExpClamp ? 0.0 : pdy[i] * po2[i];
          break;
        case UnOp::ulog:
          for (int64_t i = 0; i < n2; ++i) dx[i] += pdy[i] / px2[i];
          break;
        case UnOp::usqrt:
          // subgradient 0 at exactly 0 keeps the sweep finite
          for (int64_t i = 0; i < n2; ++i) dx[i] += po2[i] > 0.0 ? pdy[i] / (2.0 * po2[i]) : 0.0;
          break;
      }
      tp.mark_touched(xid);
    };
  }
  return outv;
}

Var relu(Var x) { return unary(UnOp::relu, x); }
Var exp(Var x) { return unary(UnOp::uexp, x); }
Var log(Var x) { return unary(UnOp::ulog, x); }
Var sqrt(Var x) { return unary(UnOp::usqrt, x); }

Var scale(Var x, double c) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (int64_t i = 0; i < xv.size(); ++i) out[i] = c * xv[i];
  const bool rg = x.requires_grad();
  Var outv = t.emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int xid = x.id(), oid = outv.id();
    t.node(oid).backward_fn = [c, xid, oid](Tape& tp) {
      const Tensor& dy = tp.node(oid).grad;
      double* dx = tp.grad_buffer(xid).ptr();
      for (int64_t i = 0; i < dy.size(); ++i) dx[i] += c * dy[i];
      tp.mark_touched(xid);
    };
  }
  return outv;
}

Var add_scalar(Var x, double c) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (int64_t i = 0; i < xv.size(); ++i) out[i] = xv[i] + c;
  const bool rg = x.requires_grad();
  Var outv = t.emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int xid = x.id(), oid = outv.id();
    t.node(oid).backward_fn = [xid, oid](Tape& tp) {
      const Tensor& dy = tp.node(oid).grad;
      double* dx = tp.grad_buffer(xid).ptr();
      for (int64_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
      tp.mark_touched(xid);
    };
  }
  return outv;
}

// ---- matmul and structure ----------------------------------------------------

Var matmul(Var a, Var b) {
  check_same_tape(a, b, "matmul");
  Tape& t = *a.tape();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + av.shape_str() + " vs " + bv.shape_str());
  }
  const int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  {
    const double* pa = av.ptr();
    const double* pb = bv.ptr();
    double* po = out.ptr();
    for (int i = 0; i < m; ++i) {
      for (int l = 0; l < k; ++l) {
        const double ail = pa[static_cast<size_t>(i) * k + l];
        if (ail == 0.0) continue;
        const double* brow = pb + static_cast<size_t>(l) * n;
        double* crow = po + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] += ail * brow[j];
      }
    }
  }
  const bool rg = a.requires_grad() || b.requires_grad();
  Var outv = t.emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int aid = a.id(), bid = b.id(), oid = outv.id();
    t.node(oid).backward_fn = [aid, bid, oid, m, k, n](Tape& tp) {
      const double* pdy = tp.node(oid).grad.ptr();
      const double* pa = tp.node(aid).value.ptr();
      const double* pb = tp.node(bid).value.ptr();
      if (tp.node(aid).requires_grad) {
        double* da = tp.grad_buffer(aid).ptr();
        // dA += dY . B^T
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) {
            const double d = pdy[static_cast<size_t>(i) * n + j];
            if (d == 0.0) continue;
            const double* brow = pb;
            for (int l = 0; l < k; ++l) da[static_cast<size_t>(i) * k + l] += d * brow[static_cast<size_t>(l) * n + j];
          }
        }
        tp.mark_touched(aid);
      }
      if (tp.node(bid).requires_grad) {
        double* db = tp.grad_buffer(bid).ptr();
        // dB += A^T . dY
        for (int i = 0; i < m; ++i) {
          const double* arow = pa + static_cast<size_t>(i) * k;
          const double* dyrow = pdy + static_cast<size_t>(i) * n;
          for (int l = 0; l < k; ++l) {
            const double ail = arow[l];
            if (ail == 0.0) continue;
            double* dbrow = db + static_cast<size_t>(l) * n;
            for (int j = 0; j < n; ++j) dbrow[j] += ail * dyrow[j];
          }
        }
        tp.mark_touched(bid);
      }
    };
  }
  return outv;
}

Var transpose(Var x) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  if (xv.rank() != 2) throw std::invalid_argument("transpose: rank-2 required, got " + xv.shape_str());
  const int r = xv.dim(0), c = xv.dim(1);
  Tensor out({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(j, i) = xv.at(i, j);
  const bool rg = x.requires_grad();
  Var outv = t.emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int xid = x.id(), oid = outv.id();
    t.node(oid).backward_fn = [xid, oid, r, c](Tape& tp) {
      const Tensor& dy = tp.node(oid).grad;
      Tensor& dx = tp.grad_buffer(xid);
      for (int j = 0; j < c; ++j)
        for (int i = 0; i < r; ++i) dx.at(i, j) += dy.at(j, i);
      tp.mark_touched(xid);
    };
  }
  return outv;
}

Var reshape(Var x, std::vector<int> shape) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  if (Tensor::shape_size(shape) != xv.size()) {
    throw std::invalid_argument("reshape: size mismatch " + xv.shape_str() + " -> " + Tensor::shape_str(shape));
  }
  Tensor out(std::move(shape), xv.data());
  const bool rg = x.requires_grad();
  Var outv = t.emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int xid = x.id(), oid = outv.id();
    t.node(oid).backward_fn = [xid, oid](Tape& tp) {
      const Tensor& dy = tp.node(oid).grad;
      double* dx = tp.grad_buffer(xid).ptr();
      for (int64_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
      tp.mark_touched(xid);
    };
  }
  return outv;
}

// ---- reductions ---------------------------------------------------------------

Var reduce(ReduceOp op, Var x, int axis) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  if (axis < 0 || axis >= xv.rank()) {
    throw std::invalid_argument("reduce: axis " + std::to_string(axis) + " out of range for " + xv.shape_str());
  }
  const int n = xv.dim(axis);
  if (n == 0) throw std::invalid_argument("reduce over empty axis");
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= xv.dim(i);
  for (int i = axis + 1; i < xv.rank(); ++i) inner *= xv.dim(i);

  std::vector<int> out_shape = xv.shape();
  out_shape[static_cast<size_t>(axis)] = 1;
  Tensor out(out_shape);
  const double* px = xv.ptr();
  double* po = out.ptr();
  std::vector<int64_t> amax;  // only for max

  auto xidx = [n, inner](int64_t o, int k, int64_t i) { return (o * n + k) * inner + i; };

  switch (op) {
    case ReduceOp::sum:
    case ReduceOp::mean:
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t i = 0; i < inner; ++i) {
          double acc = 0.0;
          for (int k = 0; k < n; ++k) acc += px[xidx(o, k, i)];
          po[o * inner + i] = op == ReduceOp::sum ? acc : acc / n;
        }
      break;
    case ReduceOp::var:
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t i = 0; i < inner; ++i) {
          double mean = 0.0;
          for (int k = 0; k < n; ++k) mean += px[xidx(o, k, i)];
          mean /= n;
          double acc = 0.0;
          for (int k = 0; k < n; ++k) {
            const double d = px[xidx(o, k, i)] - mean;
            acc += d * d;
          }
          po[o * inner + i] = acc / n;  // biased, divide by N
        }
      break;
    case ReduceOp::max:
      amax.resize(static_cast<size_t>(outer * inner));
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t i = 0; i < inner; ++i) {
          int best = 0;
          double bv = px[xidx(o, 0, i)];
          for (int k = 1; k < n; ++k) {
            const double v = px[xidx(o, k, i)];
            if (v > bv) {
              bv = v;
              best = k;
            }
          }
          po[o * inner + i] = bv;
          amax[static_cast<size_t>(o * inner + i)] = xidx(o, best, i);
        }
      break;
  }

  const bool rg = x.requires_grad();
  Var outv = t.emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int xid = x.id(), oid = outv.id();
    t.node(oid).backward_fn = [op, xid, oid, outer, inner, n, xidx, amax = std::move(amax)](Tape& tp) {
      const double* pdy = tp.node(oid).grad.ptr();
      const double* px2 = tp.node(xid).value.ptr();
      const double* po2 = tp.node(oid).value.ptr();
      double* dx = tp.grad_buffer(xid).ptr();
      switch (op) {
        case ReduceOp::sum:
          for (int64_t o = 0; o < outer; ++o)
            for (int64_t i = 0; i < inner; ++i)
              for (int k = 0; k < n; ++k) dx[xidx(o, k, i)] += pdy[o * inner + i];
          break;
        case ReduceOp::mean:
          for (int64_t o = 0; o < outer; ++o)
            for (int64_t i = 0; i < inner; ++i)
              for (int k = 0; k < n; ++k) dx[xidx(o, k, i)] += pdy[o * inner + i] / n;
          break;
        case ReduceOp::var:
          for (int64_t o = 0; o < outer; ++o)
            for (int64_t i = 0; i < inner; ++i) {
              double mean = 0.0;
              for (int k = 0; k < n; ++k) mean += px2[xidx(o, k, i)];
              mean /= n;
              for (int k = 0; k < n; ++k)
                dx[xidx(o, k, i)] += pdy[o * inner + i] * 2.0 * (px2[xidx(o, k, i)] - mean) / n;
            }
          break;
        case ReduceOp::max:
          for (int64_t oi = 0; oi < outer * inner; ++oi) dx[amax[static_cast<size_t>(oi)]] += pdy[oi];
          break;
      }
      (void)po2;
      tp.mark_touched(xid);
    };
  }
  return outv;
}

Var sum_all(Var x) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  double acc = 0.0;
  for (int64_t i = 0; i < xv.size(); ++i) acc += xv[i];
  const bool rg = x.requires_grad();
  Var outv = t.emplace(Tensor::scalar(acc), rg, nullptr);
  if (rg) {
    const int xid = x.id(), oid = outv.id();
    t.node(oid).backward_fn = [xid, oid](Tape& tp) {
      const double d = tp.node(oid).grad[0];
      double* dx = tp.grad_buffer(xid).ptr();
      const int64_t n = tp.node(xid).value.size();
      for (int64_t i = 0; i < n; ++i) dx[i] += d;
      tp.mark_touched(xid);
    };
  }
  return outv;
}

Var mean_all(Var x) {
  const int64_t n = x.value().size();
  if (n == 0) throw std::invalid_argument("mean_all of empty tensor");
  return scale(sum_all(x), 1.0 / static_cast<double>(n));
}

// ---- log softmax ----------------------------------------------------------------

Var log_softmax(Var x) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  if (xv.rank() != 2) throw std::invalid_argument("log_softmax: rank-2 required, got " + xv.shape_str());
  const int r = xv.dim(0), c = xv.dim(1);
  if (c == 0) throw std::invalid_argument("log_softmax: empty rows");
  Tensor out({r, c});
  for (int i = 0; i < r; ++i) {
    double m = xv.at(i, 0);
    for (int j = 1; j < c; ++j) m = std::max(m, xv.at(i, j));
    double s = 0.0;
    for (int j = 0; j < c; ++j) s += std::exp(xv.at(i, j) - m);
    const double lse = m + std::log(s);
    for (int j = 0; j < c; ++j) out.at(i, j) = xv.at(i, j) - lse;
  }
  const bool rg = x.requires_grad();
  Var outv = t.emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int xid = x.id(), oid = outv.id();
    t.node(oid).backward_fn = [xid, oid, r, c](Tape& tp) {
      const Tensor& dy = tp.node(oid).grad;
      const Tensor& y = tp.node(oid).value;
      Tensor& dx = tp.grad_buffer(xid);
      for (int i = 0; i < r; ++i) {
        double dsum = 0.0;
        for (int j = 0; j < c; ++j) dsum += dy.at(i, j);
        for (int j = 0; j < c; ++j) dx.at(i, j) += dy.at(i, j) - std::exp(y.at(i, j)) * dsum;
      }
      tp.mark_touched(xid);
    };
  }
  return outv;
}

// ---- masked fill -----------------------------------------------------------------

Var masked_fill(Var x, const Tensor& mask, double value) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  const std::vector<int> out_shape = broadcast_shape(xv.shape(), mask.shape(), "masked_fill");
  if (out_shape != xv.shape()) {
    throw std::invalid_argument("masked_fill: mask " + mask.shape_str() + " does not broadcast to " + xv.shape_str());
  }
  auto mask_ptr = std::make_shared<const Tensor>(mask);
  const auto sx = bcast_strides(xv.shape(), out_shape);
  const auto sm = bcast_strides(mask.shape(), out_shape);
  Tensor out(out_shape);
  {
    const double* px = xv.ptr();
    const double* pm = mask_ptr->ptr();
    double* po = out.ptr();
    for_each_bcast(out_shape, sx, sm, [&](int64_t o, int64_t ix, int64_t im) {
      po[o] = pm[im] != 0.0 ? value : px[ix];
    });
  }
  const bool rg = x.requires_grad();
  Var outv = t.emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int xid = x.id(), oid = outv.id();
    t.node(oid).backward_fn = [xid, oid, mask_ptr, sx, sm](Tape& tp) {
      const Tensor& dy = tp.node(oid).grad;
      double* dx = tp.grad_buffer(xid).ptr();
      const double* pm = mask_ptr->ptr();
      const double* pdy = dy.ptr();
      for_each_bcast(dy.shape(), sx, sm, [&](int64_t o, int64_t ix, int64_t im) {
        if (pm[im] == 0.0) dx[ix] += pdy[o];
      });
      tp.mark_touched(xid);
    };
  }
  return outv;
}

// ---- gradient oracle ---------------------------------------------------------------

double check_gradients(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double h) {
  Tensor ad;
  {
    Tape t;
    Var vx = t.input(x, true);
    Var y = f(t, vx);
    if (y.value().size() != 1) {
      throw std::invalid_argument("check_gradients: f must be scalar-valued, got shape " + y.value().shape_str());
    }
    t.backward(y);
    ad = t.grad(vx);
  }
  auto eval = [&f](const Tensor& p) {
    Tape t;
    Var y = f(t, t.input(p, false));
    return y.value()[0];
  };
  double max_err = 0.0;
  Tensor xp = x;
  for (int64_t i = 0; i < x.size(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + h;
    const double fp = eval(xp);
    xp[i] = orig - h;
    const double fm = eval(xp);
    xp[i] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({1.0, std::abs(fd), std::abs(ad[i])});
    max_err = std::max(max_err, std::abs(fd - ad[i]) / denom);
  }
  return max_err;
}

}  // namespace ppt
