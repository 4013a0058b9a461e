#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "adarank/model/model.hpp"

namespace adarank::train {

struct ParamCount {
  std::size_t theta = 0;
  std::size_t phi = 0;
  /// (component, count) in a fixed order: embedding, encoder, predictor,
  /// then np, film, one row per pool or generator, add_bias.
  std::vector<std::pair<std::string, std::size_t>> breakdown;
};

/// Walks the tensors of a model and groups them by component.
ParamCount count_params(const model::Model& model);

/// Closed-form counts from the configs alone, same breakdown order.
ParamCount expected_params(const model::RankerConfig& ranker, const model::AdaptorConfig* adaptor);

/// L * K * (h * d + d) + d * d with K = 4 patched tensors: the asymptotic
/// size of the extra parameters, reported for comparison only.
std::size_t asymptotic_adaptor_size(const model::RankerConfig& ranker, const model::AdaptorConfig& adaptor);

}  // namespace adarank::train
