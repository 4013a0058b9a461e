#pragma once

#include <span>
#include <string>

#include "adarank/data/types.hpp"
#include "adarank/model/params.hpp"

namespace adarank::model {

enum class EncoderKind { kGru, kMf };
enum class Phase { kTrain, kEval };

const char* to_string(EncoderKind kind);
/// Throws std::invalid_argument for unknown names.
EncoderKind parse_encoder(const std::string& name);

struct RankerConfig {
  std::size_t num_items = 0;
  std::size_t num_users = 0;
  std::size_t dim = 64;
  std::size_t hidden = 64;
  EncoderKind encoder = EncoderKind::kGru;
  double dropout = 0.4;

  bool operator==(const RankerConfig&) const = default;
};

/// Θ: item embeddings, the sequential encoder and the two-layer predictor.
/// Parameter names:
///   item_embedding                 num_items x d
///   user_embedding                 num_users x d      (MF)
///   gru_wx, gru_wh                 d x 3d             (GRU; gate blocks r|u|n)
///   gru_bx, gru_bh                 1 x 3d             (GRU)
///   pred_w1 2d x h, pred_b1 1 x h, pred_w2 h x 1, pred_b2 1 x 1
template <typename T>
struct BaseRanker {
  RankerConfig config;
  ParameterSet<T> params;

  /// Embeddings ~ N(0, 0.01^2), weights ~ N(0, 1/fan_in), biases zero.
  static BaseRanker init(const RankerConfig& config, Rng& rng);
};

/// The four predictor tensors as graph values, possibly already modulated.
/// add1 / add2 are optional 1 x h and 1 x 1 pre-activation offsets.
struct PredictorVars {
  Var w1, b1, w2, b2;
  Var add1, add2;
};

PredictorVars predictor_vars(const Bound<float>& theta);
PredictorVars predictor_vars(const Bound<double>& theta);

/// Sigmoid scores (m x 1) of the predictor on concat(p_u, q_v) for every
/// candidate row of `candidates` (m x d). In the train phase the hidden
/// layer gets dropout at `dropout` with masks from `rng`.
template <typename T>
Var predict_scores(Graph<T>& g, const PredictorVars& p, Var user, Var candidates, Phase phase,
                   double dropout, Rng* rng);

/// Final hidden state of a single-layer GRU run from a zero state over the
/// rows of `sequence` (n x d). Gates follow the standard formulation:
///   r = sig(x Wx_r + bx_r + h Wh_r + bh_r)
///   u = sig(x Wx_u + bx_u + h Wh_u + bh_u)
///   n = tanh(x Wx_n + bx_n + r * (h Wh_n + bh_n))
///   h' = (1 - u) * n + u * h
/// Throws std::invalid_argument on an empty sequence.
template <typename T>
Var gru_encode(Graph<T>& g, const Bound<T>& theta, Var sequence);

/// p_u for a group: MF reads the user row, GRU encodes the (already
/// embedded, possibly modulated) history.
template <typename T>
Var encode_user(Graph<T>& g, const Bound<T>& theta, const RankerConfig& config,
                data::UserId user, Var history);

/// History embeddings, with dropout in the train phase.
template <typename T>
Var embed_history(Graph<T>& g, const Bound<T>& theta, const RankerConfig& config,
                  std::span<const data::ItemId> history, Phase phase, Rng* rng);

/// Scores of the 20 candidates (positive first) as a 20 x 1 node; p_u is
/// computed once and shared.
template <typename T>
Var score_group(Graph<T>& g, const Bound<T>& theta, const RankerConfig& config,
                const data::CandidateGroup& group, Phase phase, Rng* rng);

/// Scores for an arbitrary candidate list (m x 1). Candidate ids must be
/// in range; this is the building block of score_group.
template <typename T>
Var score_candidates(Graph<T>& g, const Bound<T>& theta, const RankerConfig& config,
                     data::UserId user, std::span<const data::ItemId> history,
                     std::span<const data::ItemId> candidates, Phase phase, Rng* rng);

/// Checks that ids fit the tables of `config`. Throws std::out_of_range.
void check_group_ids(const RankerConfig& config, const data::CandidateGroup& group);
void check_ids(const RankerConfig& config, data::UserId user, std::span<const data::ItemId> history,
               std::span<const data::ItemId> candidates);

}  // namespace adarank::model
