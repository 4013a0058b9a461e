#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adarank/numerics/rng.hpp"
#include "adarank/numerics/tensor.hpp"

namespace adarank {

/// Handle to a node of a Graph. Only meaningful for the graph that issued it.
struct Var {
  static constexpr std::uint32_t kNone = 0xffffffffu;
  std::uint32_t id = kNone;
  bool valid() const noexcept { return id != kNone; }
};

template <typename T>
struct LeafGradient {
  Var leaf;
  const Tensor<T>* grad;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the node
/// list is already a topological order and backward is a single reverse
/// sweep. Parameter leaves reference caller-owned tensors; those tensors
/// must outlive the graph's current build.
///
/// clear() keeps node storage alive so repeated builds of the same shape
/// reuse every buffer.
template <typename T>
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) noexcept = default;
  Graph& operator=(Graph&&) noexcept = default;

  void clear() noexcept { count_ = 0; }
  std::size_t size() const noexcept { return count_; }

  Var constant(const Tensor<T>& value);
  Var constant(Tensor<T>&& value);
  /// Leaf bound to an external tensor. Non-trainable leaves never receive
  /// gradient, though gradient still flows through ops that read them.
  Var parameter(const Tensor<T>& value, bool trainable);

  const Tensor<T>& value(Var v) const;
  /// Gradient accumulated by the last backward(); empty when none reached v.
  const Tensor<T>& grad(Var v) const;
  bool requires_grad(Var v) const;

  Var matmul(Var a, Var b);
  /// a * b^T
  Var matmul_nt(Var a, Var b);
  // Elementwise ops broadcast any extent-1 dimension of either operand.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, T factor);
  Var add_scalar(Var a, T offset);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var exp(Var a);
  Var softmax_rows(Var a);
  /// Column means. Each column is summed in sorted order, so the result is
  /// bitwise invariant to any permutation of the rows.
  Var mean_rows(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var gather_rows(Var table, std::span<const std::uint32_t> ids);
  /// Inverted dropout with a stored Bernoulli mask scaled by 1/(1-rate).
  Var dropout(Var a, double rate, Rng& rng);
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var a, std::size_t start, std::size_t count);
  Var slice_rows(Var a, std::size_t start, std::size_t count);
  /// Tiles a 1 x n row into count x n.
  Var repeat_rows(Var a, std::size_t count);
  /// Row-major reinterpretation under a new shape.
  Var reshape(Var a, std::size_t rows, std::size_t cols);
  /// Mean binary cross entropy of scores against 0/1 labels of the same
  /// element count. Scores are clamped to [clamp, 1 - clamp]; clamped
  /// entries pass no gradient.
  Var bce_mean(Var scores, const Tensor<T>& labels, double clamp = 1e-7);

  /// Runs the reverse sweep from a 1 x 1 loss node. Returns the gradient of
  /// every trainable leaf; non-trainable leaves are absent. Throws
  /// NumericError if a non-finite gradient appears.
  std::vector<LeafGradient<T>> backward(Var loss);

 private:
  enum class Op : std::uint8_t {
    kConstant,
    kParameter,
    kMatMul,
    kMatMulNT,
    kAdd,
    kSub,
    kMul,
    kScale,
    kAddScalar,
    kSigmoid,
    kTanh,
    kRelu,
    kExp,
    kSoftmaxRows,
    kMeanRows,
    kSum,
    kMean,
    kGatherRows,
    kDropout,
    kConcatCols,
    kSliceCols,
    kSliceRows,
    kRepeatRows,
    kReshape,
    kBceMean,
  };

  struct Node {
    Op op = Op::kConstant;
    std::uint32_t a = Var::kNone;
    std::uint32_t b = Var::kNone;
    std::size_t i0 = 0;
    T scalar = T(0);
    const Tensor<T>* external = nullptr;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> aux;
    std::vector<std::uint32_t> ids;
    bool requires_grad = false;
    bool trainable = false;
    bool has_grad = false;
  };

  std::uint32_t push(Op op, Var a = {}, Var b = {});
  Node& node(Var v);
  const Node& node(Var v) const;
  const Tensor<T>& val(std::uint32_t id) const;
  Tensor<T>& grad_buffer(std::uint32_t id);
  void finish(std::uint32_t id, const char* op_name);
  Var binary(Op op, Var a, Var b, const char* name);
  Var unary(Op op, Var a, const char* name);
  void backprop(std::uint32_t id);

  std::vector<Node> nodes_;
  std::size_t count_ = 0;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace adarank
