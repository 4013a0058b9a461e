#include "adarank/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "adarank/eval/evaluate.hpp"

namespace adarank::train {
namespace {

using model::Bound;
using model::GradientAccumulator;
using model::ParameterSet;

/// One trainable parameter set with its gradient buffer and optimizer.
struct Slot {
  ParameterSet<float>* params = nullptr;
  bool trainable = false;
  GradientAccumulator<float> grads;
  Adam<float> adam;
  std::vector<Tensor<float>*> refs;

  Slot(ParameterSet<float>& p, bool train, double lr)
      : params(&p), trainable(train), grads(p), adam(AdamConfig{.lr = lr}) {
    for (auto& r : p.refs()) refs.push_back(r.value);
  }
};

struct Run {
  model::Model model;
  bool adapted = false;
  std::vector<Slot> slots;  // Θ then Φ when present
};

double global_norm(const std::vector<Slot>& slots) {
  double sq = 0.0;
  for (const auto& s : slots) {
    if (!s.trainable) continue;
    for (const auto& g : const_cast<Slot&>(s).grads.grads()) {
      for (float v : g.values()) sq += static_cast<double>(v) * v;
    }
  }
  return std::sqrt(sq);
}

std::pair<double, double> validate_model(const model::Model& m, std::span<const data::CandidateGroup> valid,
                                         bool adapted) {
  try {
    const auto report = eval::evaluate(m, valid, adapted);
    return {report.overall.gauc, report.overall.ndcg};
  } catch (const NumericError& e) {
    throw TrainingDiverged(std::string("validation failed: ") + e.what());
  }
}

void check_finite(double loss, std::size_t epoch, std::size_t step) {
  if (!std::isfinite(loss)) {
    throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + " step " +
                           std::to_string(step) + ": non-finite loss");
  }
}

TrainResult run_training(Run& run, std::span<const data::CandidateGroup> train,
                         std::span<const data::CandidateGroup> valid, const TrainConfig& config) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("training needs at least one group");
  if (valid.empty()) throw std::invalid_argument("training needs validation groups");

  TrainResult result;
  auto [gauc, ndcg] = validate_model(run.model, valid, run.adapted);
  result.log.push_back({0, 0, std::numeric_limits<double>::quiet_NaN(), gauc, ndcg});
  result.model = run.model;
  result.best_valid_gauc = gauc;

  Graph<float> graph;
  Tensor<float> labels(data::kGroupSize, 1);
  for (std::size_t i = 0; i < data::kGroupSize; ++i) labels[i] = data::CandidateGroup::label(i);
  std::vector<std::size_t> order(train.size());
  std::size_t step = 0, stale = 0;
  bool out_of_steps = false;

  for (std::size_t epoch = 1; epoch <= config.max_epochs && !out_of_steps; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = Rng::stream(config.seed, "train/shuffle", epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.uniform_int(i)]);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      Rng noise = Rng::stream(config.seed, "train/noise", epoch, start);
      for (auto& s : run.slots) s.grads.zero();
      double batch_loss = 0.0;
      try {
        for (std::size_t k = start; k < end; ++k) {
          const auto& group = train[order[k]];
          graph.clear();
          const auto theta = model::bind(graph, run.model.ranker.params, run.slots[0].trainable);
          Var scores;
          std::optional<Bound<float>> phi;
          if (run.adapted) {
            phi = model::bind(graph, run.model.adaptor->params, run.slots[1].trainable);
            scores = model::adapted_score_group(graph, theta, run.model.ranker.config, *phi,
                                                run.model.adaptor->config, group, model::Phase::kTrain,
                                                &noise)
                         .scores;
          } else {
            scores = model::score_group(graph, theta, run.model.ranker.config, group, model::Phase::kTrain,
                                        &noise);
          }
          const Var loss = graph.bce_mean(scores, labels);
          batch_loss += graph.value(loss)[0];
          const auto grads = graph.backward(loss);
          if (run.slots[0].trainable) run.slots[0].grads.add(theta, grads);
          if (phi && run.slots[1].trainable) run.slots[1].grads.add(*phi, grads);
        }
      } catch (const NumericError& e) {
        throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + " step " +
                               std::to_string(step + 1) + ": " + e.what());
      }
      const double n = static_cast<double>(end - start);
      batch_loss /= n;
      check_finite(batch_loss, epoch, step + 1);
      for (auto& s : run.slots) {
        if (s.trainable) s.grads.scale(static_cast<float>(1.0 / n));
      }
      const double norm = global_norm(run.slots);
      if (!std::isfinite(norm)) check_finite(norm, epoch, step + 1);
      if (norm > config.clip_norm) {
        for (auto& s : run.slots) {
          if (s.trainable) s.grads.scale(static_cast<float>(config.clip_norm / norm));
        }
      }
      for (auto& s : run.slots) {
        if (s.trainable) s.adam.step(s.refs, s.grads.grads());
      }
      ++step;
      loss_sum += batch_loss;
      ++batches;
      if (config.max_steps && step >= config.max_steps) {
        out_of_steps = true;
        break;
      }
    }

    std::tie(gauc, ndcg) = validate_model(run.model, valid, run.adapted);
    result.log.push_back({epoch, step, loss_sum / static_cast<double>(batches), gauc, ndcg});
    if (gauc > result.best_valid_gauc) {
      result.best_valid_gauc = gauc;
      result.best_epoch = epoch;
      result.model = run.model;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  result.steps = step;
  return result;
}

}  // namespace

const char* to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kScratchJoint: return "scratch_joint";
    case Strategy::kFinetuneJoint: return "finetune_joint";
    case Strategy::kFinetuneAdaptor: return "finetune_adaptor";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  for (Strategy s : {Strategy::kScratchJoint, Strategy::kFinetuneJoint, Strategy::kFinetuneAdaptor}) {
    if (name == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown strategy '" + name +
                              "' (expected scratch_joint, finetune_joint or finetune_adaptor)");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (max_epochs == 0) throw std::invalid_argument("max_epochs must be positive");
  if (patience == 0) throw std::invalid_argument("patience must be positive");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be positive");
}

double group_loss(std::span<const float> scores) {
  Graph<double> g;
  Tensor<double> s(scores.size(), 1), labels(scores.size(), 1);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    s[i] = scores[i];
    labels[i] = data::CandidateGroup::label(i);
  }
  return g.value(g.bce_mean(g.constant(std::move(s)), labels))[0];
}

TrainResult train_base(const model::RankerConfig& ranker, std::span<const data::CandidateGroup> train,
                       std::span<const data::CandidateGroup> valid, const TrainConfig& config) {
  Rng init = Rng::stream(config.seed, "init/theta");
  Run run;
  run.model.ranker = model::BaseRanker<float>::init(ranker, init);
  run.slots.emplace_back(run.model.ranker.params, true, config.lr);
  return run_training(run, train, valid, config);
}

TrainResult train_adapter(const std::optional<model::BaseRanker<float>>& base,
                          const model::RankerConfig& ranker, const model::AdaptorConfig& adaptor,
                          std::span<const data::CandidateGroup> train,
                          std::span<const data::CandidateGroup> valid, const TrainConfig& config,
                          Strategy strategy) {
  Run run;
  run.adapted = true;
  if (strategy == Strategy::kScratchJoint) {
    Rng init = Rng::stream(config.seed, "init/theta");
    run.model.ranker = model::BaseRanker<float>::init(ranker, init);
  } else {
    if (!base) throw std::invalid_argument(std::string(to_string(strategy)) + " needs a base checkpoint");
    if (base->config != ranker) throw std::invalid_argument("base checkpoint config differs from the run config");
    run.model.ranker = *base;
  }
  Rng init = Rng::stream(config.seed, "init/phi");
  run.model.adaptor = model::Adaptor<float>::init(adaptor, ranker, init);
  run.slots.emplace_back(run.model.ranker.params, strategy != Strategy::kFinetuneAdaptor, config.lr);
  run.slots.emplace_back(run.model.adaptor->params, true, config.lr);
  return run_training(run, train, valid, config);
}

void write_log(std::ostream& out, std::span<const LogRow> log, const std::vector<std::string>& header) {
  for (const auto& h : header) out << "# " << h << '\n';
  out << "epoch\tstep\tloss\tvalid_gauc\tvalid_ndcg\n";
  char buf[160];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu\t%zu\t%.9g\t%.9g\t%.9g\n", r.epoch, r.step, r.loss, r.valid_gauc,
                  r.valid_ndcg);
    out << buf;
  }
}

}  // namespace adarank::train
