#include "adarank/numerics/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace adarank {
namespace {

struct Broadcast {
  std::size_t rows;
  std::size_t cols;
  // Element strides of each operand; 0 along a broadcast dimension.
  std::size_t a_row, a_col, b_row, b_col;
};

template <typename T>
Broadcast broadcast_shape(const Tensor<T>& a, const Tensor<T>& b, const char* name) {
  auto extent = [&](std::size_t x, std::size_t y) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw ShapeError(std::string(name) + ": cannot broadcast " + shape_string(a) + " with " +
                     shape_string(b));
  };
  Broadcast s{};
  s.rows = extent(a.rows(), b.rows());
  s.cols = extent(a.cols(), b.cols());
  s.a_row = a.rows() == 1 ? 0 : a.cols();
  s.a_col = a.cols() == 1 ? 0 : 1;
  s.b_row = b.rows() == 1 ? 0 : b.cols();
  s.b_col = b.cols() == 1 ? 0 : 1;
  return s;
}

/// Dot product with eight interleaved partial sums combined in a fixed
/// order, so the compiler can vectorize it and results stay deterministic.
template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T lanes[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) lanes[l] += a[i + l] * b[i + l];
  }
  T acc = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
std::uint32_t Graph<T>::push(Op op, Var a, Var b) {
  if (count_ == nodes_.size()) nodes_.emplace_back();
  Node& n = nodes_[count_];
  n.op = op;
  n.a = a.id;
  n.b = b.id;
  n.i0 = 0;
  n.scalar = T(0);
  n.external = nullptr;
  n.trainable = false;
  n.has_grad = false;
  n.requires_grad = (a.valid() && nodes_[a.id].requires_grad) ||
                    (b.valid() && nodes_[b.id].requires_grad);
  return static_cast<std::uint32_t>(count_++);
}

template <typename T>
typename Graph<T>::Node& Graph<T>::node(Var v) {
  if (v.id >= count_) throw std::out_of_range("graph: invalid variable");
  return nodes_[v.id];
}

template <typename T>
const typename Graph<T>::Node& Graph<T>::node(Var v) const {
  if (v.id >= count_) throw std::out_of_range("graph: invalid variable");
  return nodes_[v.id];
}

template <typename T>
const Tensor<T>& Graph<T>::val(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

template <typename T>
Tensor<T>& Graph<T>::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    const Tensor<T>& v = val(id);
    n.grad.reset(v.rows(), v.cols());
    n.has_grad = true;
  }
  return n.grad;
}

template <typename T>
void Graph<T>::finish(std::uint32_t id, const char* op_name) {
  if (!nodes_[id].value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op_name);
  }
}

template <typename T>
Var Graph<T>::constant(const Tensor<T>& value) {
  const auto id = push(Op::kConstant);
  nodes_[id].value = value;
  finish(id, "constant");
  return {id};
}

template <typename T>
Var Graph<T>::constant(Tensor<T>&& value) {
  const auto id = push(Op::kConstant);
  nodes_[id].value = std::move(value);
  finish(id, "constant");
  return {id};
}

template <typename T>
Var Graph<T>::parameter(const Tensor<T>& value, bool trainable) {
  const auto id = push(Op::kParameter);
  Node& n = nodes_[id];
  n.external = &value;
  n.trainable = trainable;
  n.requires_grad = trainable;
  return {id};
}

template <typename T>
const Tensor<T>& Graph<T>::value(Var v) const {
  node(v);
  return val(v.id);
}

template <typename T>
const Tensor<T>& Graph<T>::grad(Var v) const {
  static const Tensor<T> kEmpty;
  const Node& n = node(v);
  return n.has_grad ? n.grad : kEmpty;
}

template <typename T>
bool Graph<T>::requires_grad(Var v) const {
  return node(v).requires_grad;
}

template <typename T>
Var Graph<T>::matmul(Var a, Var b) {
  const auto id = push(Op::kMatMul, a, b);
  const Tensor<T>& A = val(a.id);
  const Tensor<T>& B = val(b.id);
  if (A.cols() != B.rows()) {
    throw ShapeError("matmul: " + shape_string(A) + " x " + shape_string(B));
  }
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor<T>& C = nodes_[id].value;
  C.reset(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = C.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = A[i * k + p];
      const T* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  finish(id, "matmul");
  return {id};
}

template <typename T>
Var Graph<T>::matmul_nt(Var a, Var b) {
  const auto id = push(Op::kMatMulNT, a, b);
  const Tensor<T>& A = val(a.id);
  const Tensor<T>& B = val(b.id);
  if (A.cols() != B.cols()) {
    throw ShapeError("matmul_nt: " + shape_string(A) + " x " + shape_string(B) + "^T");
  }
  const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
  Tensor<T>& C = nodes_[id].value;
  C.reset(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      C[i * n + j] = dot(A.data() + i * k, B.data() + j * k, k);
    }
  }
  finish(id, "matmul_nt");
  return {id};
}

template <typename T>
Var Graph<T>::binary(Op op, Var a, Var b, const char* name) {
  const auto id = push(op, a, b);
  const Tensor<T>& A = val(a.id);
  const Tensor<T>& B = val(b.id);
  const Broadcast s = broadcast_shape(A, B, name);
  Tensor<T>& C = nodes_[id].value;
  C.reset(s.rows, s.cols);
  if (A.same_shape(B)) {
    const std::size_t n = A.size();
    switch (op) {
      case Op::kAdd: for (std::size_t i = 0; i < n; ++i) C[i] = A[i] + B[i]; break;
      case Op::kSub: for (std::size_t i = 0; i < n; ++i) C[i] = A[i] - B[i]; break;
      default: for (std::size_t i = 0; i < n; ++i) C[i] = A[i] * B[i]; break;
    }
  } else {
    for (std::size_t r = 0; r < s.rows; ++r) {
      for (std::size_t c = 0; c < s.cols; ++c) {
        const T x = A[r * s.a_row + c * s.a_col];
        const T y = B[r * s.b_row + c * s.b_col];
        T& out = C[r * s.cols + c];
        switch (op) {
          case Op::kAdd: out = x + y; break;
          case Op::kSub: out = x - y; break;
          default: out = x * y; break;
        }
      }
    }
  }
  finish(id, name);
  return {id};
}

template <typename T>
Var Graph<T>::add(Var a, Var b) { return binary(Op::kAdd, a, b, "add"); }
template <typename T>
Var Graph<T>::sub(Var a, Var b) { return binary(Op::kSub, a, b, "sub"); }
template <typename T>
Var Graph<T>::mul(Var a, Var b) { return binary(Op::kMul, a, b, "mul"); }

template <typename T>
Var Graph<T>::scale(Var a, T factor) {
  const auto id = push(Op::kScale, a);
  nodes_[id].scalar = factor;
  const Tensor<T>& A = val(a.id);
  Tensor<T>& C = nodes_[id].value;
  C.reset(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.size(); ++i) C[i] = A[i] * factor;
  finish(id, "scale");
  return {id};
}

template <typename T>
Var Graph<T>::add_scalar(Var a, T offset) {
  const auto id = push(Op::kAddScalar, a);
  nodes_[id].scalar = offset;
  const Tensor<T>& A = val(a.id);
  Tensor<T>& C = nodes_[id].value;
  C.reset(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.size(); ++i) C[i] = A[i] + offset;
  finish(id, "add_scalar");
  return {id};
}

template <typename T>
Var Graph<T>::unary(Op op, Var a, const char* name) {
  const auto id = push(op, a);
  const Tensor<T>& A = val(a.id);
  Tensor<T>& C = nodes_[id].value;
  C.reset(A.rows(), A.cols());
  const std::size_t n = A.size();
  switch (op) {
    case Op::kSigmoid: for (std::size_t i = 0; i < n; ++i) C[i] = stable_sigmoid(A[i]); break;
    case Op::kTanh: for (std::size_t i = 0; i < n; ++i) C[i] = std::tanh(A[i]); break;
    case Op::kRelu: for (std::size_t i = 0; i < n; ++i) C[i] = A[i] > T(0) ? A[i] : T(0); break;
    case Op::kExp: for (std::size_t i = 0; i < n; ++i) C[i] = std::exp(A[i]); break;
    default: throw std::logic_error("graph: not a unary op");
  }
  finish(id, name);
  return {id};
}

template <typename T>
Var Graph<T>::sigmoid(Var a) { return unary(Op::kSigmoid, a, "sigmoid"); }
template <typename T>
Var Graph<T>::tanh(Var a) { return unary(Op::kTanh, a, "tanh"); }
template <typename T>
Var Graph<T>::relu(Var a) { return unary(Op::kRelu, a, "relu"); }
template <typename T>
Var Graph<T>::exp(Var a) { return unary(Op::kExp, a, "exp"); }

template <typename T>
Var Graph<T>::softmax_rows(Var a) {
  const auto id = push(Op::kSoftmaxRows, a);
  const Tensor<T>& A = val(a.id);
  Tensor<T>& C = nodes_[id].value;
  C.reset(A.rows(), A.cols());
  const std::size_t cols = A.cols();
  for (std::size_t r = 0; r < A.rows(); ++r) {
    const T* x = A.data() + r * cols;
    T* y = C.data() + r * cols;
    T peak = x[0];
    for (std::size_t c = 1; c < cols; ++c) peak = std::max(peak, x[c]);
    T total = T(0);
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - peak);
      total += y[c];
    }
    for (std::size_t c = 0; c < cols; ++c) y[c] /= total;
  }
  finish(id, "softmax_rows");
  return {id};
}

template <typename T>
Var Graph<T>::mean_rows(Var a) {
  const auto id = push(Op::kMeanRows, a);
  const Tensor<T>& A = val(a.id);
  if (A.rows() == 0) throw ShapeError("mean_rows: no rows");
  Tensor<T>& C = nodes_[id].value;
  C.reset(1, A.cols());
  std::vector<T> column(A.rows());
  for (std::size_t c = 0; c < A.cols(); ++c) {
    for (std::size_t r = 0; r < A.rows(); ++r) column[r] = A(r, c);
    std::sort(column.begin(), column.end());
    T total = T(0);
    for (T v : column) total += v;
    C[c] = total / static_cast<T>(A.rows());
  }
  finish(id, "mean_rows");
  return {id};
}

template <typename T>
Var Graph<T>::sum(Var a) {
  const auto id = push(Op::kSum, a);
  const Tensor<T>& A = val(a.id);
  T total = T(0);
  for (T v : A.values()) total += v;
  nodes_[id].value.reset(1, 1);
  nodes_[id].value[0] = total;
  finish(id, "sum");
  return {id};
}

template <typename T>
Var Graph<T>::mean(Var a) {
  const auto id = push(Op::kMean, a);
  const Tensor<T>& A = val(a.id);
  if (A.empty()) throw ShapeError("mean: empty tensor");
  T total = T(0);
  for (T v : A.values()) total += v;
  nodes_[id].value.reset(1, 1);
  nodes_[id].value[0] = total / static_cast<T>(A.size());
  finish(id, "mean");
  return {id};
}

template <typename T>
Var Graph<T>::gather_rows(Var table, std::span<const std::uint32_t> ids) {
  const auto id = push(Op::kGatherRows, table);
  Node& n = nodes_[id];
  n.ids.assign(ids.begin(), ids.end());
  const Tensor<T>& A = val(table.id);
  const std::size_t cols = A.cols();
  n.value.reset(ids.size(), cols);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= A.rows()) {
      throw std::out_of_range("gather_rows: id " + std::to_string(ids[r]) +
                              " outside table of " + std::to_string(A.rows()) + " rows");
    }
    std::copy_n(A.data() + ids[r] * cols, cols, n.value.data() + r * cols);
  }
  return {id};
}

template <typename T>
Var Graph<T>::dropout(Var a, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate outside [0, 1)");
  const auto id = push(Op::kDropout, a);
  Node& n = nodes_[id];
  const Tensor<T>& A = val(a.id);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  n.aux.reset(A.rows(), A.cols());
  n.value.reset(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.size(); ++i) {
    n.aux[i] = rng.uniform() < rate ? T(0) : keep_scale;
    n.value[i] = A[i] * n.aux[i];
  }
  return {id};
}

template <typename T>
Var Graph<T>::concat_cols(Var a, Var b) {
  const auto id = push(Op::kConcatCols, a, b);
  const Tensor<T>& A = val(a.id);
  const Tensor<T>& B = val(b.id);
  if (A.rows() != B.rows()) {
    throw ShapeError("concat_cols: " + shape_string(A) + " with " + shape_string(B));
  }
  Tensor<T>& C = nodes_[id].value;
  C.reset(A.rows(), A.cols() + B.cols());
  for (std::size_t r = 0; r < A.rows(); ++r) {
    std::copy_n(A.data() + r * A.cols(), A.cols(), C.data() + r * C.cols());
    std::copy_n(B.data() + r * B.cols(), B.cols(), C.data() + r * C.cols() + A.cols());
  }
  return {id};
}

template <typename T>
Var Graph<T>::slice_cols(Var a, std::size_t start, std::size_t count) {
  const auto id = push(Op::kSliceCols, a);
  nodes_[id].i0 = start;
  const Tensor<T>& A = val(a.id);
  if (start + count > A.cols()) throw ShapeError("slice_cols: range outside " + shape_string(A));
  Tensor<T>& C = nodes_[id].value;
  C.reset(A.rows(), count);
  for (std::size_t r = 0; r < A.rows(); ++r) {
    std::copy_n(A.data() + r * A.cols() + start, count, C.data() + r * count);
  }
  return {id};
}

template <typename T>
Var Graph<T>::slice_rows(Var a, std::size_t start, std::size_t count) {
  const auto id = push(Op::kSliceRows, a);
  nodes_[id].i0 = start;
  const Tensor<T>& A = val(a.id);
  if (start + count > A.rows()) throw ShapeError("slice_rows: range outside " + shape_string(A));
  Tensor<T>& C = nodes_[id].value;
  C.reset(count, A.cols());
  std::copy_n(A.data() + start * A.cols(), count * A.cols(), C.data());
  return {id};
}

template <typename T>
Var Graph<T>::repeat_rows(Var a, std::size_t count) {
  const auto id = push(Op::kRepeatRows, a);
  const Tensor<T>& A = val(a.id);
  if (A.rows() != 1) throw ShapeError("repeat_rows: expects a single row, got " + shape_string(A));
  Tensor<T>& C = nodes_[id].value;
  C.reset(count, A.cols());
  for (std::size_t r = 0; r < count; ++r) std::copy_n(A.data(), A.cols(), C.data() + r * A.cols());
  return {id};
}

template <typename T>
Var Graph<T>::reshape(Var a, std::size_t rows, std::size_t cols) {
  const auto id = push(Op::kReshape, a);
  const Tensor<T>& A = val(a.id);
  if (rows * cols != A.size()) {
    throw ShapeError("reshape: " + shape_string(A) + " to " + shape_string(rows, cols));
  }
  Tensor<T>& C = nodes_[id].value;
  C.reset(rows, cols);
  std::copy_n(A.data(), A.size(), C.data());
  return {id};
}

template <typename T>
Var Graph<T>::bce_mean(Var scores, const Tensor<T>& labels, double clamp) {
  const auto id = push(Op::kBceMean, scores);
  Node& n = nodes_[id];
  const Tensor<T>& S = val(scores.id);
  if (S.size() != labels.size() || S.empty()) {
    throw ShapeError("bce_mean: " + std::to_string(S.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  }
  n.aux = labels;
  n.scalar = static_cast<T>(clamp);
  const T lo = static_cast<T>(clamp);
  const T hi = T(1) - lo;
  T total = T(0);
  for (std::size_t i = 0; i < S.size(); ++i) {
    const T p = std::clamp(S[i], lo, hi);
    const T y = labels[i];
    total += -y * std::log(p) - (T(1) - y) * std::log(T(1) - p);
  }
  n.value.reset(1, 1);
  n.value[0] = total / static_cast<T>(S.size());
  finish(id, "bce_mean");
  return {id};
}

template <typename T>
std::vector<LeafGradient<T>> Graph<T>::backward(Var loss) {
  const Node& root = node(loss);
  const Tensor<T>& lv = val(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + shape_string(lv));
  }
  for (std::size_t i = 0; i < count_; ++i) nodes_[i].has_grad = false;
  if (root.requires_grad) {
    grad_buffer(loss.id)[0] = T(1);
    for (std::uint32_t id = loss.id + 1; id-- > 0;) {
      const Node& n = nodes_[id];
      if (!n.has_grad || !n.requires_grad) continue;
      if (n.op == Op::kConstant || n.op == Op::kParameter) continue;
      if (!n.grad.all_finite()) throw NumericError("non-finite gradient during backprop");
      backprop(id);
    }
  }
  std::vector<LeafGradient<T>> out;
  for (std::uint32_t id = 0; id < count_; ++id) {
    if (nodes_[id].op != Op::kParameter || !nodes_[id].trainable) continue;
    Tensor<T>& g = grad_buffer(id);
    if (!g.all_finite()) throw NumericError("non-finite gradient on a parameter leaf");
    out.push_back({Var{id}, &g});
  }
  return out;
}

template <typename T>
void Graph<T>::backprop(std::uint32_t id) {
  // Copy fields up front: grad_buffer() may touch other nodes but never
  // reallocates nodes_, so references stay valid.
  Node& n = nodes_[id];
  const Tensor<T>& G = n.grad;
  const bool need_a = n.a != Var::kNone && nodes_[n.a].requires_grad;
  const bool need_b = n.b != Var::kNone && nodes_[n.b].requires_grad;

  switch (n.op) {
    case Op::kMatMul: {
      const Tensor<T>& A = val(n.a);
      const Tensor<T>& B = val(n.b);
      const std::size_t m = A.rows(), k = A.cols(), cols = B.cols();
      if (need_a) {
        Tensor<T>& dA = grad_buffer(n.a);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            dA[i * k + p] += dot(G.data() + i * cols, B.data() + p * cols, cols);
          }
        }
      }
      if (need_b) {
        Tensor<T>& dB = grad_buffer(n.b);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const T av = A[i * k + p];
            if (av == T(0)) continue;
            T* drow = dB.data() + p * cols;
            const T* grow = G.data() + i * cols;
            for (std::size_t j = 0; j < cols; ++j) drow[j] += av * grow[j];
          }
        }
      }
      break;
    }
    case Op::kMatMulNT: {
      const Tensor<T>& A = val(n.a);
      const Tensor<T>& B = val(n.b);
      const std::size_t m = A.rows(), k = A.cols(), rows_b = B.rows();
      if (need_a) {
        Tensor<T>& dA = grad_buffer(n.a);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < rows_b; ++j) {
            const T g = G[i * rows_b + j];
            for (std::size_t p = 0; p < k; ++p) dA[i * k + p] += g * B[j * k + p];
          }
        }
      }
      if (need_b) {
        Tensor<T>& dB = grad_buffer(n.b);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < rows_b; ++j) {
            const T g = G[i * rows_b + j];
            for (std::size_t p = 0; p < k; ++p) dB[j * k + p] += g * A[i * k + p];
          }
        }
      }
      break;
    }
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul: {
      const Tensor<T>& A = val(n.a);
      const Tensor<T>& B = val(n.b);
      const Broadcast s = broadcast_shape(A, B, "backward");
      if (need_a) {
        Tensor<T>& dA = grad_buffer(n.a);
        for (std::size_t r = 0; r < s.rows; ++r) {
          for (std::size_t c = 0; c < s.cols; ++c) {
            const T g = G[r * s.cols + c];
            const T factor = n.op == Op::kMul ? B[r * s.b_row + c * s.b_col] : T(1);
            dA[r * s.a_row + c * s.a_col] += g * factor;
          }
        }
      }
      if (need_b) {
        Tensor<T>& dB = grad_buffer(n.b);
        for (std::size_t r = 0; r < s.rows; ++r) {
          for (std::size_t c = 0; c < s.cols; ++c) {
            const T g = G[r * s.cols + c];
            T contrib;
            switch (n.op) {
              case Op::kAdd: contrib = g; break;
              case Op::kSub: contrib = -g; break;
              default: contrib = g * A[r * s.a_row + c * s.a_col]; break;
            }
            dB[r * s.b_row + c * s.b_col] += contrib;
          }
        }
      }
      break;
    }
    case Op::kScale: {
      Tensor<T>& dA = grad_buffer(n.a);
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i] * n.scalar;
      break;
    }
    case Op::kAddScalar: {
      Tensor<T>& dA = grad_buffer(n.a);
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i];
      break;
    }
    case Op::kSigmoid: {
      Tensor<T>& dA = grad_buffer(n.a);
      for (std::size_t i = 0; i < G.size(); ++i) {
        const T y = n.value[i];
        dA[i] += G[i] * y * (T(1) - y);
      }
      break;
    }
    case Op::kTanh: {
      Tensor<T>& dA = grad_buffer(n.a);
      for (std::size_t i = 0; i < G.size(); ++i) {
        const T y = n.value[i];
        dA[i] += G[i] * (T(1) - y * y);
      }
      break;
    }
    case Op::kRelu: {
      const Tensor<T>& A = val(n.a);
      Tensor<T>& dA = grad_buffer(n.a);
      for (std::size_t i = 0; i < G.size(); ++i) {
        if (A[i] > T(0)) dA[i] += G[i];
      }
      break;
    }
    case Op::kExp: {
      Tensor<T>& dA = grad_buffer(n.a);
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i] * n.value[i];
      break;
    }
    case Op::kSoftmaxRows: {
      Tensor<T>& dA = grad_buffer(n.a);
      const std::size_t cols = n.value.cols();
      for (std::size_t r = 0; r < n.value.rows(); ++r) {
        const T* y = n.value.data() + r * cols;
        const T* g = G.data() + r * cols;
        T dot = T(0);
        for (std::size_t c = 0; c < cols; ++c) dot += g[c] * y[c];
        for (std::size_t c = 0; c < cols; ++c) dA[r * cols + c] += y[c] * (g[c] - dot);
      }
      break;
    }
    case Op::kMeanRows: {
      Tensor<T>& dA = grad_buffer(n.a);
      const T inv = T(1) / static_cast<T>(dA.rows());
      for (std::size_t r = 0; r < dA.rows(); ++r) {
        for (std::size_t c = 0; c < dA.cols(); ++c) dA(r, c) += G[c] * inv;
      }
      break;
    }
    case Op::kSum: {
      Tensor<T>& dA = grad_buffer(n.a);
      for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += G[0];
      break;
    }
    case Op::kMean: {
      Tensor<T>& dA = grad_buffer(n.a);
      const T g = G[0] / static_cast<T>(dA.size());
      for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += g;
      break;
    }
    case Op::kGatherRows: {
      Tensor<T>& dA = grad_buffer(n.a);
      const std::size_t cols = dA.cols();
      for (std::size_t r = 0; r < n.ids.size(); ++r) {
        T* drow = dA.data() + n.ids[r] * cols;
        const T* grow = G.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) drow[c] += grow[c];
      }
      break;
    }
    case Op::kDropout: {
      Tensor<T>& dA = grad_buffer(n.a);
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i] * n.aux[i];
      break;
    }
    case Op::kConcatCols: {
      const std::size_t ca = val(n.a).cols();
      const std::size_t cb = val(n.b).cols();
      const std::size_t cols = ca + cb;
      if (need_a) {
        Tensor<T>& dA = grad_buffer(n.a);
        for (std::size_t r = 0; r < G.rows(); ++r) {
          for (std::size_t c = 0; c < ca; ++c) dA[r * ca + c] += G[r * cols + c];
        }
      }
      if (need_b) {
        Tensor<T>& dB = grad_buffer(n.b);
        for (std::size_t r = 0; r < G.rows(); ++r) {
          for (std::size_t c = 0; c < cb; ++c) dB[r * cb + c] += G[r * cols + ca + c];
        }
      }
      break;
    }
    case Op::kSliceCols: {
      Tensor<T>& dA = grad_buffer(n.a);
      const std::size_t count = G.cols();
      for (std::size_t r = 0; r < G.rows(); ++r) {
        for (std::size_t c = 0; c < count; ++c) dA(r, n.i0 + c) += G[r * count + c];
      }
      break;
    }
    case Op::kSliceRows: {
      Tensor<T>& dA = grad_buffer(n.a);
      const std::size_t offset = n.i0 * dA.cols();
      for (std::size_t i = 0; i < G.size(); ++i) dA[offset + i] += G[i];
      break;
    }
    case Op::kRepeatRows: {
      Tensor<T>& dA = grad_buffer(n.a);
      const std::size_t cols = dA.cols();
      for (std::size_t r = 0; r < G.rows(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) dA[c] += G[r * cols + c];
      }
      break;
    }
    case Op::kReshape: {
      Tensor<T>& dA = grad_buffer(n.a);
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i];
      break;
    }
    case Op::kBceMean: {
      const Tensor<T>& S = val(n.a);
      Tensor<T>& dS = grad_buffer(n.a);
      const T lo = n.scalar;
      const T hi = T(1) - lo;
      const T g = G[0] / static_cast<T>(S.size());
      for (std::size_t i = 0; i < S.size(); ++i) {
        const T p = S[i];
        if (p <= lo || p >= hi) continue;
        const T y = n.aux[i];
        dS[i] += g * (p - y) / (p * (T(1) - p));
      }
      break;
    }
    case Op::kConstant:
    case Op::kParameter:
      break;
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace adarank
