#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adarank/model/model.hpp"

namespace adarank::train {

/// Which parameters the adapter stage starts from and updates.
enum class Strategy {
  kScratchJoint,     // random Θ, update Θ and Φ
  kFinetuneJoint,    // Θ from the base model, update Θ and Φ
  kFinetuneAdaptor,  // Θ from the base model and frozen, update Φ
};

const char* to_string(Strategy strategy);
/// Throws std::invalid_argument on an unknown name.
Strategy parse_strategy(const std::string& name);

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 20;
  /// Epochs without a validation GAUC improvement before stopping.
  std::size_t patience = 3;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  /// Stops after this many optimizer steps when nonzero.
  std::size_t max_steps = 0;

  /// Throws std::invalid_argument on non-positive values.
  void validate() const;
};

/// One training log line. Epoch 0 holds the metrics before any update and a
/// NaN loss.
struct LogRow {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double loss = 0.0;
  double valid_gauc = 0.0;
  double valid_ndcg = 0.0;
};

struct TrainResult {
  /// Parameters of the best validation epoch.
  model::Model model;
  std::vector<LogRow> log;
  std::size_t best_epoch = 0;
  double best_valid_gauc = 0.0;
  std::size_t steps = 0;
};

/// A non-finite loss or gradient stopped training.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean BCE of one group's 20 scores against its labels.
double group_loss(std::span<const float> scores);

/// Trains Θ alone on the training groups with Adam, global-norm clipping
/// and early stopping on validation GAUC.
TrainResult train_base(const model::RankerConfig& ranker, std::span<const data::CandidateGroup> train,
                       std::span<const data::CandidateGroup> valid, const TrainConfig& config);

/// Trains an adapted model under `strategy`. Finetune strategies need
/// `base`; scratch_joint ignores it. Throws std::invalid_argument when a
/// required base model is missing or its config differs from `ranker`.
TrainResult train_adapter(const std::optional<model::BaseRanker<float>>& base,
                          const model::RankerConfig& ranker, const model::AdaptorConfig& adaptor,
                          std::span<const data::CandidateGroup> train,
                          std::span<const data::CandidateGroup> valid, const TrainConfig& config,
                          Strategy strategy);

/// `epoch<TAB>step<TAB>loss<TAB>valid_gauc<TAB>valid_ndcg` lines after a
/// column header and '#' comment lines.
void write_log(std::ostream& out, std::span<const LogRow> log, const std::vector<std::string>& header = {});

}  // namespace adarank::train
