#include "adarank/numerics/adam.hpp"

#include <cmath>

namespace adarank {

template <typename T>
void Adam<T>::step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (m_.empty()) {
    for (const Tensor<T>* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  if (m_.size() != params.size()) throw ShapeError("adam: parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i]) || !params[i]->same_shape(m_[i])) {
      throw ShapeError("adam: shape mismatch for parameter " + std::to_string(i) + " (" +
                       shape_string(*params[i]) + " vs gradient " + shape_string(grads[i]) + ")");
    }
  }
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = *params[i];
    const Tensor<T>& g = grads[i];
    Tensor<T>& m = m_[i];
    Tensor<T>& v = v_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k];
      const double mk = b1 * m[k] + (1.0 - b1) * gk;
      const double vk = b2 * v[k] + (1.0 - b2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double update = config_.lr * (mk / c1) / (std::sqrt(vk / c2) + config_.eps);
      p[k] = static_cast<T>(p[k] - update);
    }
  }
}

template <typename T>
double clip_global_norm(std::span<Tensor<T>> grads, double max_norm) {
  double total = 0.0;
  for (const auto& g : grads) {
    for (T v : g.values()) total += static_cast<double>(v) * v;
  }
  const double norm = std::sqrt(total);
  if (norm > max_norm && norm > 0.0) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& g : grads) {
      for (T& v : g.values()) v *= factor;
    }
  }
  return norm;
}

template class Adam<float>;
template class Adam<double>;
template double clip_global_norm<float>(std::span<Tensor<float>>, double);
template double clip_global_norm<double>(std::span<Tensor<double>>, double);

}  // namespace adarank
