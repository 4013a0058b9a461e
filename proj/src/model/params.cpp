#include "adarank/model/params.hpp"

#include <stdexcept>

namespace adarank::model {

template <typename T>
Tensor<T>& ParameterSet<T>::add(std::string name, Tensor<T> value) {
  if (find(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  entries_.push_back({std::move(name), std::move(value)});
  return entries_.back().value;
}

template <typename T>
Tensor<T>* ParameterSet<T>::find(std::string_view name) {
  for (auto& e : entries_) {
    if (e.name == name) return &e.value;
  }
  return nullptr;
}

template <typename T>
const Tensor<T>* ParameterSet<T>::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e.value;
  }
  return nullptr;
}

template <typename T>
Tensor<T>& ParameterSet<T>::at(std::string_view name) {
  if (auto* t = find(name)) return *t;
  throw std::out_of_range("no parameter '" + std::string(name) + "'");
}

template <typename T>
const Tensor<T>& ParameterSet<T>::at(std::string_view name) const {
  if (const auto* t = find(name)) return *t;
  throw std::out_of_range("no parameter '" + std::string(name) + "'");
}

template <typename T>
std::size_t ParameterSet<T>::count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

template <typename T>
std::vector<ParamRef<T>> ParameterSet<T>::refs() {
  std::vector<ParamRef<T>> out;
  out.reserve(entries_.size());
  for (auto& e : entries_) out.push_back({e.name, &e.value});
  return out;
}

template <typename T>
Var Bound<T>::operator[](std::string_view name) const {
  if (set_) {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if ((*set_)[i].name == name) return vars_[i];
    }
  }
  throw std::out_of_range("parameter '" + std::string(name) + "' is not bound");
}

template <typename T>
bool Bound<T>::has(std::string_view name) const {
  return set_ && set_->find(name) != nullptr;
}

template <typename T>
std::size_t Bound<T>::index_of(Var leaf) const noexcept {
  if (vars_.empty()) return 0;
  // bind() pushes leaves back to back, so ids are contiguous.
  const std::uint32_t first = vars_.front().id;
  if (leaf.id < first || leaf.id - first >= vars_.size()) return vars_.size();
  return leaf.id - first;
}

template <typename T>
Bound<T> bind(Graph<T>& graph, const ParameterSet<T>& set, bool trainable) {
  std::vector<Var> vars;
  vars.reserve(set.size());
  for (const auto& e : set) vars.push_back(graph.parameter(e.value, trainable));
  return Bound<T>(&set, std::move(vars));
}

template <typename T>
Tensor<T> gaussian_tensor(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  Tensor<T> t(rows, cols);
  for (auto& v : t.values()) v = static_cast<T>(rng.gaussian() * stddev);
  return t;
}

template <typename T>
GradientAccumulator<T>::GradientAccumulator(const ParameterSet<T>& set) {
  for (const auto& e : set) grads_.emplace_back(e.value.rows(), e.value.cols());
  touched_.assign(grads_.size(), false);
}

template <typename T>
void GradientAccumulator<T>::zero() {
  for (auto& g : grads_) std::fill(g.values().begin(), g.values().end(), T(0));
  touched_.assign(grads_.size(), false);
}

template <typename T>
void GradientAccumulator<T>::add(const Bound<T>& bound, std::span<const LeafGradient<T>> grads) {
  for (const auto& lg : grads) {
    const std::size_t i = bound.index_of(lg.leaf);
    if (i >= grads_.size()) continue;
    auto dst = grads_[i].values();
    const auto src = lg.grad->values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    touched_[i] = true;
  }
}

template <typename T>
void GradientAccumulator<T>::scale(T factor) {
  for (auto& g : grads_) {
    for (auto& v : g.values()) v *= factor;
  }
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class Bound<float>;
template class Bound<double>;
template class GradientAccumulator<float>;
template class GradientAccumulator<double>;
template Bound<float> bind(Graph<float>&, const ParameterSet<float>&, bool);
template Bound<double> bind(Graph<double>&, const ParameterSet<double>&, bool);
template Tensor<float> gaussian_tensor(std::size_t, std::size_t, double, Rng&);
template Tensor<double> gaussian_tensor(std::size_t, std::size_t, double, Rng&);

}  // namespace adarank::model
