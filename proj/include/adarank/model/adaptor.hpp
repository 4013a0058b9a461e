#pragma once

#include <array>
#include <string>
#include <vector>

#include "adarank/model/ranker.hpp"

namespace adarank::model {

enum class ExtractorMode { kNp, kAvg };
enum class FilmMode { kScalar, kVector, kPerItem, kAddBias, kNone };
enum class PoolMode { kMemNet, kFreePara, kNoGlobal, kAddBias1, kAddBias2, kNone };

const char* to_string(ExtractorMode mode);
const char* to_string(FilmMode mode);
const char* to_string(PoolMode mode);
// Parsers throw std::invalid_argument for unknown names.
ExtractorMode parse_extractor_mode(const std::string& name);
FilmMode parse_film_mode(const std::string& name);
PoolMode parse_pool_mode(const std::string& name);

struct AdaptorConfig {
  ExtractorMode extractor = ExtractorMode::kNp;
  FilmMode film = FilmMode::kScalar;
  PoolMode pool = PoolMode::kMemNet;
  std::size_t slots = 10;  // L

  bool operator==(const AdaptorConfig&) const = default;
};

/// The patched predictor parameters, in pool order.
inline constexpr std::array<const char*, 4> kPatchedParams{"pred_w1", "pred_b1", "pred_w2", "pred_b2"};

/// Φ. Parameter names by component:
///   np_w1, np_b1, np_w2, np_b2 (d x d / 1 x d), np_ws, np_wmu, np_wsigma (d x d)
///   film_s_{w1,b1,w2,b2}, film_b_{w1,b1,w2,b2}: in -> d -> out, where in is
///     d (2d for per-item) and out is 1 for scalar mode, d otherwise;
///     add_bias mode has only the film_b network
///   pool_<param>_slots (L x numel), pool_<param>_heads (L x d)   mem_net, no_global
///   gen_<param>_{w1,b1,w2,b2}: d -> d -> numel                    free_para
///   bias_p1 (d x h), bias_p2 (d x 1)                              add_bias_1/2
/// Initialization starts at the identity modulation: FiLM output layers are
/// zero with bias 1 for the scale and 0 for the shift, W slots are ones and
/// b slots zeros, generators emit 1 for W and 0 for b, bias projections are
/// zero. The no_global pools start from random W slots since they replace
/// the predictor weights outright.
template <typename T>
struct Adaptor {
  AdaptorConfig config;
  ParameterSet<T> params;

  static Adaptor init(const AdaptorConfig& config, const RankerConfig& ranker, Rng& rng);
};

/// Latent summary of a candidate set. mu, log_sigma and eps are invalid in
/// avg mode; eps is invalid in the eval phase, where z = mu.
struct Distribution {
  Var mu, log_sigma, eps, z;
};

/// z from candidate embeddings (m x d). Train phase draws eps ~ N(0, I)
/// from rng.
template <typename T>
Distribution extract_distribution(Graph<T>& g, const Bound<T>& phi, ExtractorMode mode,
                                  Var candidates, Phase phase, Rng* rng);

struct FilmCoefficients {
  Var gamma, beta;  // invalid gamma means 1, invalid beta means 0
};

/// FiLM scale and shift from z. Per-item mode also takes the history rows
/// and returns one row of coefficients per position.
template <typename T>
FilmCoefficients film_coefficients(Graph<T>& g, const Bound<T>& phi, FilmMode mode, Var z,
                                   Var history);

/// gamma * q_t + beta for every row, broadcasting scalar or row coefficients.
template <typename T>
Var modulate_inputs(Graph<T>& g, Var history, const FilmCoefficients& c);

/// softmax(z heads^T) and the slot combination reshaped to rows x cols.
struct Patch {
  Var value, alpha;
};
template <typename T>
Patch compose_patch(Graph<T>& g, Var slots, Var heads, Var z, std::size_t rows, std::size_t cols);

/// W (.) W_hat and b + b_hat per layer, or the patch alone for no_global.
template <typename T>
PredictorVars modulate_predictor(Graph<T>& g, const PredictorVars& base,
                                 const std::array<Var, 4>& patches, PoolMode mode);

/// Patches from the free_para generators.
template <typename T>
std::array<Var, 4> free_patches(Graph<T>& g, const Bound<T>& phi, const PredictorVars& base, Var z);

struct AdaptedScores {
  Var scores;  // 20 x 1
  Distribution distribution;
  std::vector<Var> alphas;  // one 1 x L row per pool (mem_net, no_global)
};

/// Adapted scores for an arbitrary candidate list (m x 1).
template <typename T>
AdaptedScores adapted_score_candidates(Graph<T>& g, const Bound<T>& theta,
                                       const RankerConfig& rconfig, const Bound<T>& phi,
                                       const AdaptorConfig& aconfig, data::UserId user,
                                       std::span<const data::ItemId> history,
                                       std::span<const data::ItemId> candidates, Phase phase,
                                       Rng* rng);

/// Adapted ranking of one group: extract z from the candidates, modulate
/// the history, encode, patch the predictor and score. One z and one set of
/// patches serve all 20 candidates.
template <typename T>
AdaptedScores adapted_score_group(Graph<T>& g, const Bound<T>& theta, const RankerConfig& rconfig,
                                  const Bound<T>& phi, const AdaptorConfig& aconfig,
                                  const data::CandidateGroup& group, Phase phase, Rng* rng);

}  // namespace adarank::model
