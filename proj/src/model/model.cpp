#include "adarank/model/model.hpp"

#include <algorithm>

namespace adarank::model {

GroupScores Scorer::score(const Model& model, const data::CandidateGroup& group, bool use_adaptor,
                          GroupDiagnostics* diagnostics) {
  graph_.clear();
  const auto theta = bind(graph_, model.ranker.params, false);
  Var scores;
  if (use_adaptor && model.adaptor) {
    const auto phi = bind(graph_, model.adaptor->params, false);
    const auto out = adapted_score_group(graph_, theta, model.ranker.config, phi,
                                         model.adaptor->config, group, Phase::kEval, nullptr);
    scores = out.scores;
    if (diagnostics) {
      const auto z = graph_.value(out.distribution.z).values();
      diagnostics->z.assign(z.begin(), z.end());
      diagnostics->alphas.clear();
      for (Var a : out.alphas) {
        const auto v = graph_.value(a).values();
        diagnostics->alphas.emplace_back(v.begin(), v.end());
      }
    }
  } else {
    scores = score_group(graph_, theta, model.ranker.config, group, Phase::kEval, nullptr);
  }
  GroupScores out{};
  const auto v = graph_.value(scores).values();
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace adarank::model
