// Copyright (c) 2026 the snnt authors. Apache-2.0 license.
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "snnt/tensor.hpp"

namespace snnt {

class Graph;

enum class OpKind {
  kLeaf,        // named parameter
  kConst,       // constant input
  kMatVec,      // [n,m] x [m] -> [n]
  kAdd,         // elementwise, equal shapes
  kSub,         // elementwise, equal shapes
  kMul,         // elementwise (Hadamard), equal shapes
  kScale,       // scalar constant times tensor
  kSigmoid,
  kTanh,
  kIdentity,
  kLogSoftmax,  // rank-1
  kConcat,      // rank-1 pair -> rank-1
  kEmbedRow,    // [v,e] row select -> [e]
  kPick,        // rank-1 element select -> rank-0
  kSum,         // any -> rank-0
  kLogAddExp,   // elementwise, equal shapes
};

const char* op_name(OpKind op);
std::vector<OpKind> all_op_kinds();

// Extra op arguments: the constant for kScale, the row/element index for
// kEmbedRow and kPick.
struct OpAttr {
  double scalar = 0.0;
  int index = -1;
};

// 64-bit is the default; f32 rounds every op result (and every leaf/const on
// entry) to the nearest binary32 value, so a run carries float precision
// while storage stays double.
enum class Precision { f64, f32 };

// Run-wide default picked up by every Graph constructed without an explicit
// precision (the CLI's --f32 switch).
void set_default_precision(Precision precision);
Precision default_precision();

// Handle to a node in a Graph. Cheap to copy; valid as long as the graph is.
struct Value {
  Graph* graph = nullptr;
  int id = -1;

  bool valid() const { return graph != nullptr && id >= 0; }
  const Tensor& tensor() const;
  const Tensor& grad() const;
  const Shape& shape() const { return tensor().shape(); }
  int64_t size() const { return tensor().size(); }
  double scalar() const;  // requires a single-element tensor
};

using GradientMap = std::map<std::string, Tensor>;

// A computation record: nodes in creation order, operands always preceding
// their consumers. Confined to one thread.
class Graph {
 public:
  Graph() : Graph(default_precision()) {}
  explicit Graph(Precision precision);

  Precision precision() const { return precision_; }

  Value param(const std::string& name, const Tensor& value);
  Value constant(Tensor value);
  Value constant_scalar(double v) { return constant(Tensor::scalar(v)); }

  Value apply(OpKind op, std::span<const Value> operands, OpAttr attr = {});

  // Reverse-mode sweep from a scalar root. Gradients accumulate into the
  // nodes (repeated calls without zero_grad add up). Returns the gradients
  // of every named leaf reachable so far.
  GradientMap backward(Value root);

  GradientMap leaf_gradients() const;
  void zero_grad();

  // Recomputes every non-leaf value from the recorded provenance.
  void replay();

  size_t node_count() const { return nodes_.size(); }
  const Tensor& value_of(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& grad_of(int id) const;
  const std::string& name_of(int id) const { return nodes_[static_cast<size_t>(id)].name; }
  OpKind op_of(int id) const { return nodes_[static_cast<size_t>(id)].op; }

 private:
  struct Node {
    OpKind op = OpKind::kConst;
    int a = -1, b = -1;
    OpAttr attr;
    Tensor value;
    Tensor grad;            // allocated on first use
    bool grad_alloc = false;
    std::string name;       // leaves only
  };

  Value push(Node node);
  Tensor eval(const Node& node) const;
  void accumulate_operand_grads(const Node& node);
  Tensor& grad_buffer(int id);

  std::deque<Node> nodes_;
  std::unordered_map<std::string, int> leaves_;
  Precision precision_;
};

// Op helpers. All validate shapes and throw ShapeError on mismatch; every
// result is checked for NaN/Inf and NonFiniteError is thrown on violation.
Value matvec(Value w, Value x);
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value scale(double c, Value x);
Value sigmoid(Value x);
Value tanh(Value x);
Value identity(Value x);
Value log_softmax(Value x);
Value concat(Value a, Value b);
Value embed_row(Value table, int row);
Value pick(Value x, int index);
Value sum(Value x);
Value logaddexp(Value a, Value b);

// Forward multiplication counter used by the profiler cross-checks.
// Counting convention: matrix-vector n*m, elementwise product n, scalar
// scaling n; additions, activations and data movement are free.
namespace mult_counter {
void reset();
void enable(bool on);
bool enabled();
uint64_t count();
}  // namespace mult_counter

// Test fixture: makes the backward rule of one op deliberately wrong so a
// gradient check must fail. Never enable outside tests.
namespace debug {
void corrupt_backward(OpKind op);
void clear_corruption();
}  // namespace debug

}  // namespace snnt
