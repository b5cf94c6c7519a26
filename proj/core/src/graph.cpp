// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#include "snnt/graph.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "snnt/errors.hpp"

namespace snnt {

namespace {

using EigenRowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<const EigenRowMat>;
using MatMapMut = Eigen::Map<EigenRowMat>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMapMut = Eigen::Map<Eigen::VectorXd>;

thread_local bool g_count_mults = false;
thread_local uint64_t g_mult_count = 0;
thread_local bool g_corrupt_enabled = false;
thread_local OpKind g_corrupt_op = OpKind::kConst;

inline void count_mults(uint64_t n) {
  if (g_count_mults) g_mult_count += n;
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double stable_logaddexp(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

}  // namespace

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConst: return "const";
    case OpKind::kMatVec: return "matvec";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kTanh: return "tanh";
    case OpKind::kIdentity: return "identity";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kConcat: return "concat";
    case OpKind::kEmbedRow: return "embed_row";
    case OpKind::kPick: return "pick";
    case OpKind::kSum: return "sum";
    case OpKind::kLogAddExp: return "logaddexp";
  }
  return "?";
}

std::vector<OpKind> all_op_kinds() {
  return {OpKind::kMatVec, OpKind::kAdd,     OpKind::kSub,       OpKind::kMul,
          OpKind::kScale,  OpKind::kSigmoid, OpKind::kTanh,      OpKind::kIdentity,
          OpKind::kLogSoftmax, OpKind::kConcat, OpKind::kEmbedRow, OpKind::kPick,
          OpKind::kSum,    OpKind::kLogAddExp};
}

namespace {
Precision g_default_precision = Precision::f64;
}  // namespace

void set_default_precision(Precision precision) { g_default_precision = precision; }
Precision default_precision() { return g_default_precision; }

const Tensor& Value::tensor() const { return graph->value_of(id); }
const Tensor& Value::grad() const { return graph->grad_of(id); }

double Value::scalar() const {
  const Tensor& t = tensor();
  if (t.size() != 1) {
    throw ShapeError("scalar() on tensor of shape " + shape_str(t.shape()));
  }
  return t[0];
}

Graph::Graph(Precision precision) : precision_(precision) {}

Value Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Value{this, static_cast<int>(nodes_.size()) - 1};
}

static void round_to_f32(Tensor& t) {
  for (auto& v : t.values()) v = static_cast<double>(static_cast<float>(v));
}

Value Graph::param(const std::string& name, const Tensor& value) {
  if (name.empty()) throw ConfigError("parameter name must not be empty");
  if (leaves_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  Node n;
  n.op = OpKind::kLeaf;
  n.value = value;
  if (precision_ == Precision::f32) round_to_f32(n.value);
  n.name = name;
  if (!n.value.all_finite()) throw NonFiniteError("leaf", name);
  Value v = push(std::move(n));
  leaves_.emplace(name, v.id);
  return v;
}

Value Graph::constant(Tensor value) {
  Node n;
  n.op = OpKind::kConst;
  n.value = std::move(value);
  if (precision_ == Precision::f32) round_to_f32(n.value);
  if (!n.value.all_finite()) throw NonFiniteError("const");
  return push(std::move(n));
}

Tensor Graph::eval(const Node& node) const {
  static const Tensor kEmpty;
  const Tensor& A =
      node.a >= 0 ? nodes_[static_cast<size_t>(node.a)].value : kEmpty;
  const Tensor& B =
      node.b >= 0 ? nodes_[static_cast<size_t>(node.b)].value : kEmpty;

  switch (node.op) {
    case OpKind::kLeaf:
    case OpKind::kConst:
      return node.value;

    case OpKind::kMatVec: {
      const Tensor& w = A;
      const Tensor& x = B;
      require(w.rank() == 2 && x.rank() == 1, "matvec expects [n,m] and [m]");
      require(w.dim(1) == x.dim(0), "matvec inner dimensions differ: " +
                                        shape_str(w.shape()) + " vs " + shape_str(x.shape()));
      const int n = w.dim(0), m = w.dim(1);
      Tensor out({n});
      MatMap wm(w.data(), n, m);
      VecMap xv(x.data(), m);
      VecMapMut ov(out.data(), n);
      ov.noalias() = wm * xv;
      count_mults(static_cast<uint64_t>(n) * static_cast<uint64_t>(m));
      return out;
    }

    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
    case OpKind::kLogAddExp: {
      const Tensor& a = A;
      const Tensor& b = B;
      require(a.same_shape(b), std::string(op_name(node.op)) + " shape mismatch: " +
                                   shape_str(a.shape()) + " vs " + shape_str(b.shape()));
      Tensor out(a.shape());
      const int64_t n = a.size();
      switch (node.op) {
        case OpKind::kAdd:
          for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
          break;
        case OpKind::kSub:
          for (int64_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
          break;
        case OpKind::kMul:
          for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
          count_mults(static_cast<uint64_t>(n));
          break;
        default:  // kLogAddExp
          for (int64_t i = 0; i < n; ++i) out[i] = stable_logaddexp(a[i], b[i]);
          break;
      }
      return out;
    }

    case OpKind::kScale: {
      const Tensor& a = A;
      Tensor out(a.shape());
      for (int64_t i = 0; i < a.size(); ++i) out[i] = node.attr.scalar * a[i];
      count_mults(static_cast<uint64_t>(a.size()));
      return out;
    }

    case OpKind::kSigmoid: {
      const Tensor& a = A;
      Tensor out(a.shape());
      for (int64_t i = 0; i < a.size(); ++i) out[i] = stable_sigmoid(a[i]);
      return out;
    }

    case OpKind::kTanh: {
      const Tensor& a = A;
      Tensor out(a.shape());
      for (int64_t i = 0; i < a.size(); ++i) out[i] = std::tanh(a[i]);
      return out;
    }

    case OpKind::kIdentity:
      return A;

    case OpKind::kLogSoftmax: {
      const Tensor& a = A;
      require(a.rank() == 1, "log_softmax expects a vector");
      Tensor out(a.shape());
      double hi = a[0];
      for (int64_t i = 1; i < a.size(); ++i) hi = std::max(hi, a[i]);
      double acc = 0.0;
      for (int64_t i = 0; i < a.size(); ++i) acc += std::exp(a[i] - hi);
      const double lse = hi + std::log(acc);
      for (int64_t i = 0; i < a.size(); ++i) out[i] = a[i] - lse;
      return out;
    }

    case OpKind::kConcat: {
      const Tensor& a = A;
      const Tensor& b = B;
      require(a.rank() == 1 && b.rank() == 1, "concat expects two vectors");
      Tensor out({a.dim(0) + b.dim(0)});
      std::copy(a.data(), a.data() + a.size(), out.data());
      std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
      return out;
    }

    case OpKind::kEmbedRow: {
      const Tensor& t = A;
      require(t.rank() == 2, "embed_row expects a matrix");
      const int row = node.attr.index;
      require(row >= 0 && row < t.dim(0),
              "embed_row index " + std::to_string(row) + " out of range for " +
                  shape_str(t.shape()));
      Tensor out({t.dim(1)});
      std::copy(t.data() + static_cast<int64_t>(row) * t.dim(1),
                t.data() + static_cast<int64_t>(row + 1) * t.dim(1), out.data());
      return out;
    }

    case OpKind::kPick: {
      const Tensor& a = A;
      require(a.rank() == 1, "pick expects a vector");
      const int idx = node.attr.index;
      require(idx >= 0 && idx < a.dim(0),
              "pick index " + std::to_string(idx) + " out of range for " +
                  shape_str(a.shape()));
      return Tensor::scalar(a[idx]);
    }

    case OpKind::kSum: {
      const Tensor& a = A;
      double acc = 0.0;
      for (int64_t i = 0; i < a.size(); ++i) acc += a[i];
      return Tensor::scalar(acc);
    }
  }
  throw Error("unhandled op");
}

Value Graph::apply(OpKind op, std::span<const Value> operands, OpAttr attr) {
  const size_t arity = [&]() -> size_t {
    switch (op) {
      case OpKind::kMatVec:
      case OpKind::kAdd:
      case OpKind::kSub:
      case OpKind::kMul:
      case OpKind::kConcat:
      case OpKind::kLogAddExp:
        return 2;
      case OpKind::kScale:
      case OpKind::kSigmoid:
      case OpKind::kTanh:
      case OpKind::kIdentity:
      case OpKind::kLogSoftmax:
      case OpKind::kEmbedRow:
      case OpKind::kPick:
      case OpKind::kSum:
        return 1;
      default:
        throw ConfigError(std::string("apply: '") + op_name(op) +
                          "' is not an applicable op");
    }
  }();
  if (operands.size() != arity) {
    throw ShapeError(std::string(op_name(op)) + " expects " + std::to_string(arity) +
                     " operands, got " + std::to_string(operands.size()));
  }
  for (const Value& v : operands) {
    if (v.graph != this) throw ConfigError("operand belongs to a different graph");
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
      throw ConfigError("operand id out of range");
    }
  }

  Node n;
  n.op = op;
  n.a = operands[0].id;
  if (arity == 2) n.b = operands[1].id;
  n.attr = attr;
  n.value = eval(n);
  if (precision_ == Precision::f32) round_to_f32(n.value);
  if (!n.value.all_finite()) throw NonFiniteError(op_name(op));
  return push(std::move(n));
}

Tensor& Graph::grad_buffer(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.grad_alloc) {
    n.grad = Tensor(n.value.shape());
    n.grad_alloc = true;
  }
  return n.grad;
}

const Tensor& Graph::grad_of(int id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.grad_alloc) {
    throw Error("gradient of node " + std::to_string(id) +
                " read before any backward pass reached it");
  }
  return n.grad;
}

void Graph::accumulate_operand_grads(const Node& node) {
  const Tensor& g = node.grad;
  const double corrupt =
      (g_corrupt_enabled && node.op == g_corrupt_op) ? 1.5 : 1.0;

  switch (node.op) {
    case OpKind::kLeaf:
    case OpKind::kConst:
      return;

    case OpKind::kMatVec: {
      const Tensor& w = nodes_[static_cast<size_t>(node.a)].value;
      const Tensor& x = nodes_[static_cast<size_t>(node.b)].value;
      const int n = w.dim(0), m = w.dim(1);
      Tensor& gw = grad_buffer(node.a);
      Tensor& gx = grad_buffer(node.b);
      MatMap wm(w.data(), n, m);
      VecMap xv(x.data(), m);
      VecMap gy(g.data(), n);
      MatMapMut gwm(gw.data(), n, m);
      VecMapMut gxv(gx.data(), m);
      gwm.noalias() += corrupt * gy * xv.transpose();
      gxv.noalias() += corrupt * wm.transpose() * gy;
      return;
    }

    case OpKind::kAdd: {
      Tensor& ga = grad_buffer(node.a);
      Tensor& gb = grad_buffer(node.b);
      for (int64_t i = 0; i < g.size(); ++i) {
        ga[i] += corrupt * g[i];
        gb[i] += corrupt * g[i];
      }
      return;
    }

    case OpKind::kSub: {
      Tensor& ga = grad_buffer(node.a);
      Tensor& gb = grad_buffer(node.b);
      for (int64_t i = 0; i < g.size(); ++i) {
        ga[i] += corrupt * g[i];
        gb[i] -= corrupt * g[i];
      }
      return;
    }

    case OpKind::kMul: {
      const Tensor& a = nodes_[static_cast<size_t>(node.a)].value;
      const Tensor& b = nodes_[static_cast<size_t>(node.b)].value;
      Tensor& ga = grad_buffer(node.a);
      Tensor& gb = grad_buffer(node.b);
      for (int64_t i = 0; i < g.size(); ++i) {
        ga[i] += corrupt * g[i] * b[i];
        gb[i] += corrupt * g[i] * a[i];
      }
      return;
    }

    case OpKind::kScale: {
      Tensor& ga = grad_buffer(node.a);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += corrupt * node.attr.scalar * g[i];
      return;
    }

    case OpKind::kSigmoid: {
      const Tensor& y = node.value;
      Tensor& ga = grad_buffer(node.a);
      for (int64_t i = 0; i < g.size(); ++i) {
        ga[i] += corrupt * g[i] * y[i] * (1.0 - y[i]);
      }
      return;
    }

    case OpKind::kTanh: {
      const Tensor& y = node.value;
      Tensor& ga = grad_buffer(node.a);
      for (int64_t i = 0; i < g.size(); ++i) {
        ga[i] += corrupt * g[i] * (1.0 - y[i] * y[i]);
      }
      return;
    }

    case OpKind::kIdentity: {
      Tensor& ga = grad_buffer(node.a);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += corrupt * g[i];
      return;
    }

    case OpKind::kLogSoftmax: {
      const Tensor& y = node.value;
      Tensor& ga = grad_buffer(node.a);
      double gsum = 0.0;
      for (int64_t i = 0; i < g.size(); ++i) gsum += g[i];
      for (int64_t i = 0; i < g.size(); ++i) {
        ga[i] += corrupt * (g[i] - std::exp(y[i]) * gsum);
      }
      return;
    }

    case OpKind::kConcat: {
      Tensor& ga = grad_buffer(node.a);
      Tensor& gb = grad_buffer(node.b);
      const int64_t na = ga.size();
      for (int64_t i = 0; i < na; ++i) ga[i] += corrupt * g[i];
      for (int64_t i = 0; i < gb.size(); ++i) gb[i] += corrupt * g[na + i];
      return;
    }

    case OpKind::kEmbedRow: {
      Tensor& gt = grad_buffer(node.a);
      const int cols = gt.shape()[1];
      double* row = gt.data() + static_cast<int64_t>(node.attr.index) * cols;
      for (int64_t i = 0; i < g.size(); ++i) row[i] += corrupt * g[i];
      return;
    }

    case OpKind::kPick: {
      Tensor& ga = grad_buffer(node.a);
      ga[node.attr.index] += corrupt * g[0];
      return;
    }

    case OpKind::kSum: {
      Tensor& ga = grad_buffer(node.a);
      for (int64_t i = 0; i < ga.size(); ++i) ga[i] += corrupt * g[0];
      return;
    }

    case OpKind::kLogAddExp: {
      const Tensor& a = nodes_[static_cast<size_t>(node.a)].value;
      const Tensor& b = nodes_[static_cast<size_t>(node.b)].value;
      const Tensor& z = node.value;
      Tensor& ga = grad_buffer(node.a);
      Tensor& gb = grad_buffer(node.b);
      for (int64_t i = 0; i < g.size(); ++i) {
        ga[i] += corrupt * g[i] * std::exp(a[i] - z[i]);
        gb[i] += corrupt * g[i] * std::exp(b[i] - z[i]);
      }
      return;
    }
  }
}

GradientMap Graph::backward(Value root) {
  if (root.graph != this) throw ConfigError("backward: root from a different graph");
  const Node& rn = nodes_[static_cast<size_t>(root.id)];
  if (rn.value.size() != 1) {
    throw ShapeError("backward requires a scalar root, got shape " +
                     shape_str(rn.value.shape()));
  }

  // Mark nodes reachable from the root; creation order is topological.
  std::vector<char> reach(static_cast<size_t>(root.id) + 1, 0);
  reach[static_cast<size_t>(root.id)] = 1;
  grad_buffer(root.id)[0] += 1.0;
  for (int id = root.id; id >= 0; --id) {
    if (!reach[static_cast<size_t>(id)]) continue;
    const Node& n = nodes_[static_cast<size_t>(id)];
    if (n.a >= 0) reach[static_cast<size_t>(n.a)] = 1;
    if (n.b >= 0) reach[static_cast<size_t>(n.b)] = 1;
    accumulate_operand_grads(n);
  }
  return leaf_gradients();
}

GradientMap Graph::leaf_gradients() const {
  GradientMap out;
  for (const auto& [name, id] : leaves_) {
    const Node& n = nodes_[static_cast<size_t>(id)];
    out.emplace(name, n.grad_alloc ? n.grad : Tensor(n.value.shape()));
  }
  return out;
}

void Graph::zero_grad() {
  for (Node& n : nodes_) {
    if (n.grad_alloc) {
      std::fill(n.grad.values().begin(), n.grad.values().end(), 0.0);
    }
  }
}

void Graph::replay() {
  for (Node& n : nodes_) {
    if (n.op == OpKind::kLeaf || n.op == OpKind::kConst) continue;
    Tensor v = eval(n);
    if (precision_ == Precision::f32) round_to_f32(v);
    n.value = std::move(v);
  }
}

namespace {
Value apply1(OpKind op, Value a, OpAttr attr = {}) {
  const Value ops[] = {a};
  return a.graph->apply(op, ops, attr);
}
Value apply2(OpKind op, Value a, Value b, OpAttr attr = {}) {
  const Value ops[] = {a, b};
  return a.graph->apply(op, ops, attr);
}
}  // namespace

Value matvec(Value w, Value x) { return apply2(OpKind::kMatVec, w, x); }
Value add(Value a, Value b) { return apply2(OpKind::kAdd, a, b); }
Value sub(Value a, Value b) { return apply2(OpKind::kSub, a, b); }
Value mul(Value a, Value b) { return apply2(OpKind::kMul, a, b); }
Value scale(double c, Value x) { return apply1(OpKind::kScale, x, OpAttr{c, -1}); }
Value sigmoid(Value x) { return apply1(OpKind::kSigmoid, x); }
Value tanh(Value x) { return apply1(OpKind::kTanh, x); }
Value identity(Value x) { return apply1(OpKind::kIdentity, x); }
Value log_softmax(Value x) { return apply1(OpKind::kLogSoftmax, x); }
Value concat(Value a, Value b) { return apply2(OpKind::kConcat, a, b); }
Value embed_row(Value table, int row) {
  return apply1(OpKind::kEmbedRow, table, OpAttr{0.0, row});
}
Value pick(Value x, int index) { return apply1(OpKind::kPick, x, OpAttr{0.0, index}); }
Value sum(Value x) { return apply1(OpKind::kSum, x); }
Value logaddexp(Value a, Value b) { return apply2(OpKind::kLogAddExp, a, b); }

namespace mult_counter {
void reset() { g_mult_count = 0; }
void enable(bool on) { g_count_mults = on; }
bool enabled() { return g_count_mults; }
uint64_t count() { return g_mult_count; }
}  // namespace mult_counter

namespace debug {
void corrupt_backward(OpKind op) {
  g_corrupt_enabled = true;
  g_corrupt_op = op;
}
void clear_corruption() { g_corrupt_enabled = false; }
}  // namespace debug

}  // namespace snnt
