#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adarank/numerics/tensor.hpp"

namespace adarank {

/// Named handle to a tensor owned by a model.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. Moments are created on the first step and keep the
/// shapes of the parameters they were created for.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>> grads);

  std::uint64_t steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }
  const std::vector<Tensor<T>>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor<T>>& second_moments() const noexcept { return v_; }

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
};

/// Rescales grads in place so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <typename T>
double clip_global_norm(std::span<Tensor<T>> grads, double max_norm);

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace adarank
