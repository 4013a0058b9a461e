#include "adarank/model/grad_checks.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace adarank::model {

GradCheckReport full_loss_grad_check(const LossCheckSetup& setup) {
  Rng rng = Rng::stream(setup.seed, "loss_check/init");
  RankerConfig rc;
  rc.num_items = setup.num_items;
  rc.num_users = 4;
  rc.dim = setup.dim;
  rc.hidden = setup.hidden;
  rc.encoder = setup.encoder;
  auto ranker = BaseRanker<double>::init(rc, rng);
  auto adaptor = Adaptor<double>::init(setup.adaptor, rc, rng);
  // Unit-scale activations everywhere: unit embeddings, 1/sqrt(fan_in)
  // weights, small biases. Saturated gates or softmaxes would leave
  // gradients below the finite-difference noise floor.
  for (auto* set : {&ranker.params, &adaptor.params}) {
    for (auto& e : *set) {
      double stddev = setup.init_scale / std::sqrt(static_cast<double>(e.value.rows()));
      if (e.name.find("embedding") != std::string::npos) stddev = setup.init_scale;
      if (e.value.rows() == 1) stddev = 0.1 * setup.init_scale;
      for (auto& v : e.value.values()) v = stddev * rng.gaussian();
    }
  }

  std::vector<data::ItemId> history(setup.seq_len);
  std::vector<data::ItemId> candidates(setup.candidates);
  std::iota(candidates.begin(), candidates.end(), data::ItemId{0});
  for (auto& v : history) v = static_cast<data::ItemId>(rng.uniform_int(setup.num_items));
  Tensor<double> labels(setup.candidates, 1);
  labels[0] = 1.0;

  std::vector<ParamRef<double>> refs = ranker.params.refs();
  const std::size_t n_theta = refs.size();
  if (setup.with_adaptor) {
    for (auto& r : adaptor.params.refs()) refs.push_back(r);
  }

  const LossBuilder build = [&](Graph<double>& g, std::span<const Var> leaves, Rng& r) {
    const Bound<double> theta(&ranker.params, {leaves.begin(), leaves.begin() + n_theta});
    Var scores;
    if (setup.with_adaptor) {
      const Bound<double> phi(&adaptor.params, {leaves.begin() + n_theta, leaves.end()});
      scores = adapted_score_candidates(g, theta, rc, phi, setup.adaptor, 1, history, candidates,
                                        setup.phase, &r)
                   .scores;
    } else {
      scores = score_candidates(g, theta, rc, 1, history, candidates, setup.phase, &r);
    }
    return g.bce_mean(scores, labels);
  };
  return grad_check(build, refs, setup.h, setup.seed);
}

}  // namespace adarank::model
