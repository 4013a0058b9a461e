#pragma once

#include <array>
#include <optional>
#include <vector>

#include "adarank/model/adaptor.hpp"

namespace adarank::model {

/// A base ranker with an optional adaptor, in training precision.
struct Model {
  BaseRanker<float> ranker;
  std::optional<Adaptor<float>> adaptor;
};

/// z and the pool coefficients of one adapted group.
struct GroupDiagnostics {
  std::vector<float> z;
  std::vector<std::vector<float>> alphas;  // one row of L per pool
};

using GroupScores = std::array<float, data::kGroupSize>;

/// Eval-phase scoring with a reusable graph. Not thread safe; use one
/// scorer per thread.
class Scorer {
 public:
  /// Scores the 20 candidates (positive first). With use_adaptor false, or
  /// when the model has no adaptor, the base ranker scores alone.
  GroupScores score(const Model& model, const data::CandidateGroup& group, bool use_adaptor,
                    GroupDiagnostics* diagnostics = nullptr);

 private:
  Graph<float> graph_;
};

}  // namespace adarank::model
