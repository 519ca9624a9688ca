#pragma once

#include <cstdint>
#include <vector>

#include "lcsac/tensor.hpp"

namespace lcsac {

/// Operation kinds recorded on the tape. `kConstLeaf` marks inputs that never
/// need gradients (batch data, noise, numeric constants); backward skips
/// accumulating into them.
enum class OpKind : std::uint8_t {
  kLeaf,
  kConstLeaf,
  kAdd,
  kSub,
  kMul,
  kMatMul,
  kRelu,
  kTanh,
  kSigmoid,
  kExp,
  kLog,
  kNegate,
  kSum,
  kMean,
  kConcatCols,
  kSliceCols,
  kLogSumExp,
  kSquaredDiff,
  kTranspose,
};

/// Handle to a tape node.
struct Value {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape;

/// Result of a backward pass: gradient of the root with respect to every
/// node. Nodes the root does not reach report a zero tensor of their shape.
class Gradients {
 public:
  /// Gradient tensor for `v` (zeros if unreachable from the root).
  Tensor get(Value v) const;
  /// True if backward actually touched `v`.
  bool reached(Value v) const;

 private:
  friend class Tape;
  Gradients(const Tape* tape, std::vector<Tensor> grads)
      : tape_(tape), grads_(std::move(grads)) {}
  const Tape* tape_;
  std::vector<Tensor> grads_;
};

/// Reverse-mode autodiff tape over dense tensors. Nodes are appended in
/// topological order (inputs always precede consumers); forward values are
/// cached eagerly. A tape is single-threaded; distinct tapes are independent.
///
/// All shapes are explicit: there is no broadcasting. Batched bias addition,
/// scaling by a constant, min/clamp and similar utilities are composed from
/// the kinds above (see the sugar helpers at the bottom).
class Tape {
 public:
  /// Differentiable input (network parameter).
  Value leaf(Tensor t);
  /// Non-differentiable input (data, noise, constants).
  Value constant(Tensor t);

  const Tensor& value(Value v) const;
  OpKind kind(Value v) const;
  std::size_t size() const { return nodes_.size(); }
  /// Drops all nodes, keeping allocated node capacity for reuse.
  void reset();

  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  /// [m,k] x [k,n] -> [m,n]; rank-2 operands only.
  Value matmul(Value a, Value b);
  Value relu(Value x);
  Value tanh(Value x);
  Value sigmoid(Value x);
  Value exp(Value x);
  Value log(Value x);
  Value negate(Value x);
  /// Full reduction to a scalar.
  Value sum(Value x);
  Value mean(Value x);
  /// Concatenate along the last axis: [n,a]+[n,b] -> [n,a+b] (rank-1: [a]+[b]).
  Value concat_cols(Value a, Value b);
  /// Columns [c0, c1) of a rank-2 tensor, or elements [c0, c1) of a rank-1.
  Value slice_cols(Value x, std::int64_t c0, std::int64_t c1);
  /// log(sum(exp(x))) along `axis` of a rank-2 tensor ([n,m] -> [n,1] for
  /// axis 1, [1,m] for axis 0); rank-1 reduces fully to a scalar. Internally
  /// max-stabilized.
  Value logsumexp(Value x, int axis);
  /// (a - b)^2 elementwise.
  Value squared_diff(Value a, Value b);
  Value transpose(Value x);

  // --- sugar (expands to the kinds above) ---

  /// x * k (elementwise constant scale).
  Value scale(Value x, double k);
  /// x + k (elementwise constant shift).
  Value add_const(Value x, double k);
  /// Row sums of [n,m] -> [n,1] via matmul with a ones column.
  Value row_sum(Value x);
  /// Elementwise min(a, b) = a - relu(a - b).
  Value minimum(Value a, Value b);
  /// Elementwise clamp to [lo, hi], composed from relu.
  Value clamp(Value x, double lo, double hi);
  /// Main diagonal of a square [n,n] as a [n,1] column.
  Value diag_col(Value x);

  /// Gradient of scalar-shaped `root` w.r.t. every reachable node. Const
  /// leaves are skipped. The tape itself is not mutated; calling backward
  /// twice yields identical results.
  Gradients backward(Value root) const;

 private:
  friend class Gradients;
  struct Node {
    OpKind kind;
    int a = -1;
    int b = -1;
    std::int64_t p0 = 0;  // slice begin / logsumexp axis
    std::int64_t p1 = 0;  // slice end
    Tensor value;
  };

  Value push(Node node);
  const Node& node(Value v) const;
  void check_valid(Value v, const char* op) const;

  std::vector<Node> nodes_;
};

}  // namespace lcsac
