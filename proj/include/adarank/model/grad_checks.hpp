#pragma once

#include <cstdint>

#include "adarank/model/adaptor.hpp"
#include "adarank/numerics/grad_check.hpp"

namespace adarank::model {

/// Small double-precision setup for checking gradients of the complete
/// training loss against central differences.
struct LossCheckSetup {
  std::size_t dim = 8;
  std::size_t hidden = 8;
  std::size_t seq_len = 5;
  std::size_t candidates = 6;  // m
  std::size_t num_items = 24;
  EncoderKind encoder = EncoderKind::kGru;
  AdaptorConfig adaptor{ExtractorMode::kNp, FilmMode::kScalar, PoolMode::kMemNet, 3};
  /// Without the adaptor only the base ranker loss is checked.
  bool with_adaptor = true;
  /// Train phase (dropout masks and eps fixed by the seed) or eval phase.
  Phase phase = Phase::kTrain;
  double h = 1e-5;
  /// Overall scale of the parameter redraw.
  double init_scale = 1.0;
  std::uint64_t seed = 1;
};

/// Mean BCE over the candidates of one synthetic group, positive first,
/// differentiated with respect to every Θ and Φ tensor. All parameters are
/// redrawn at random first (identity initializations have structurally zero
/// gradients): embeddings N(0, s^2), biases N(0, (s/10)^2), other tensors
/// N(0, s^2 / rows) with s = init_scale.
GradCheckReport full_loss_grad_check(const LossCheckSetup& setup);

}  // namespace adarank::model
