#pragma once

#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adarank/numerics/adam.hpp"
#include "adarank/numerics/graph.hpp"
#include "adarank/numerics/rng.hpp"

namespace adarank::model {

/// Ordered named tensors with stable addresses. Order is creation order and
/// is what checkpoints, optimizers and gradient accumulators index by.
template <typename T>
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor<T> value;
  };

  /// Throws std::invalid_argument on a duplicate name.
  Tensor<T>& add(std::string name, Tensor<T> value);
  Tensor<T>* find(std::string_view name);
  const Tensor<T>* find(std::string_view name) const;
  /// Throws std::out_of_range for unknown names.
  Tensor<T>& at(std::string_view name);
  const Tensor<T>& at(std::string_view name) const;

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  Entry& operator[](std::size_t i) { return entries_[i]; }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Total number of scalar parameters.
  std::size_t count() const noexcept;
  std::vector<ParamRef<T>> refs();

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>());
    return out;
  }

 private:
  std::deque<Entry> entries_;
};

/// A parameter set bound as leaves of one graph build.
template <typename T>
class Bound {
 public:
  Bound() = default;
  Bound(const ParameterSet<T>* set, std::vector<Var> vars) : set_(set), vars_(std::move(vars)) {}

  /// Throws std::out_of_range for unknown names.
  Var operator[](std::string_view name) const;
  bool has(std::string_view name) const;
  std::span<const Var> vars() const noexcept { return vars_; }
  /// Index into the parameter set of a leaf, or size() when not ours.
  std::size_t index_of(Var leaf) const noexcept;

 private:
  const ParameterSet<T>* set_ = nullptr;
  std::vector<Var> vars_;
};

template <typename T>
Bound<T> bind(Graph<T>& graph, const ParameterSet<T>& set, bool trainable);

/// Gaussian tensor with the given standard deviation.
template <typename T>
Tensor<T> gaussian_tensor(std::size_t rows, std::size_t cols, double stddev, Rng& rng);

/// Per-parameter gradient sums over the groups of a batch, in a fixed order.
template <typename T>
class GradientAccumulator {
 public:
  explicit GradientAccumulator(const ParameterSet<T>& set);
  void zero();
  /// Adds every gradient of `grads` that belongs to `bound`.
  void add(const Bound<T>& bound, std::span<const LeafGradient<T>> grads);
  void scale(T factor);
  std::vector<Tensor<T>>& grads() noexcept { return grads_; }
  /// Whether parameter i received any gradient since zero().
  bool touched(std::size_t i) const { return touched_[i]; }

 private:
  std::vector<Tensor<T>> grads_;
  std::vector<bool> touched_;
};

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;
extern template class Bound<float>;
extern template class Bound<double>;
extern template class GradientAccumulator<float>;
extern template class GradientAccumulator<double>;

}  // namespace adarank::model
