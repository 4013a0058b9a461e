#include "adarank/model/ranker.hpp"

#include <cmath>
#include <stdexcept>

namespace adarank::model {

const char* to_string(EncoderKind kind) {
  return kind == EncoderKind::kGru ? "gru" : "mf";
}

EncoderKind parse_encoder(const std::string& name) {
  if (name == "gru") return EncoderKind::kGru;
  if (name == "mf") return EncoderKind::kMf;
  throw std::invalid_argument("unknown encoder '" + name + "' (expected gru or mf)");
}

template <typename T>
BaseRanker<T> BaseRanker<T>::init(const RankerConfig& config, Rng& rng) {
  if (config.num_items == 0 || config.dim == 0 || config.hidden == 0) {
    throw std::invalid_argument("ranker needs positive num_items, dim and hidden");
  }
  if (config.encoder == EncoderKind::kMf && config.num_users == 0) {
    throw std::invalid_argument("MF encoder needs num_users");
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) {
    throw std::invalid_argument("dropout must lie in [0, 1)");
  }
  const std::size_t d = config.dim, h = config.hidden;
  BaseRanker r;
  r.config = config;
  r.params.add("item_embedding", gaussian_tensor<T>(config.num_items, d, 0.01, rng));
  if (config.encoder == EncoderKind::kMf) {
    r.params.add("user_embedding", gaussian_tensor<T>(config.num_users, d, 0.01, rng));
  } else {
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    r.params.add("gru_wx", gaussian_tensor<T>(d, 3 * d, s, rng));
    r.params.add("gru_wh", gaussian_tensor<T>(d, 3 * d, s, rng));
    r.params.add("gru_bx", Tensor<T>(1, 3 * d));
    r.params.add("gru_bh", Tensor<T>(1, 3 * d));
  }
  r.params.add("pred_w1", gaussian_tensor<T>(2 * d, h, 1.0 / std::sqrt(2.0 * d), rng));
  r.params.add("pred_b1", Tensor<T>(1, h));
  r.params.add("pred_w2", gaussian_tensor<T>(h, 1, 1.0 / std::sqrt(static_cast<double>(h)), rng));
  r.params.add("pred_b2", Tensor<T>(1, 1));
  return r;
}

namespace {

template <typename T>
PredictorVars predictor_vars_impl(const Bound<T>& theta) {
  return {theta["pred_w1"], theta["pred_b1"], theta["pred_w2"], theta["pred_b2"], {}, {}};
}

}  // namespace

PredictorVars predictor_vars(const Bound<float>& theta) { return predictor_vars_impl(theta); }
PredictorVars predictor_vars(const Bound<double>& theta) { return predictor_vars_impl(theta); }

template <typename T>
Var predict_scores(Graph<T>& g, const PredictorVars& p, Var user, Var candidates, Phase phase,
                   double dropout, Rng* rng) {
  const std::size_t m = g.value(candidates).rows();
  const Var x = g.concat_cols(g.repeat_rows(user, m), candidates);
  Var pre = g.add(g.matmul(x, p.w1), p.b1);
  if (p.add1.valid()) pre = g.add(pre, p.add1);
  Var hidden = g.relu(pre);
  if (phase == Phase::kTrain && dropout > 0.0) {
    if (!rng) throw std::invalid_argument("train phase needs an rng");
    hidden = g.dropout(hidden, dropout, *rng);
  }
  Var out = g.add(g.matmul(hidden, p.w2), p.b2);
  if (p.add2.valid()) out = g.add(out, p.add2);
  return g.sigmoid(out);
}

template <typename T>
Var gru_encode(Graph<T>& g, const Bound<T>& theta, Var sequence) {
  const std::size_t n = g.value(sequence).rows();
  if (n == 0) throw std::invalid_argument("GRU encoder needs a nonempty sequence");
  const Var wh = theta["gru_wh"];
  const Var bh = theta["gru_bh"];
  const std::size_t d = g.value(wh).rows();
  // Input projections for every step in one product.
  const Var gx_all = g.add(g.matmul(sequence, theta["gru_wx"]), theta["gru_bx"]);
  Var h = g.constant(Tensor<T>(1, d));
  for (std::size_t t = 0; t < n; ++t) {
    const Var gx = g.slice_rows(gx_all, t, 1);
    const Var gh = g.add(g.matmul(h, wh), bh);
    const Var r = g.sigmoid(g.add(g.slice_cols(gx, 0, d), g.slice_cols(gh, 0, d)));
    const Var u = g.sigmoid(g.add(g.slice_cols(gx, d, d), g.slice_cols(gh, d, d)));
    const Var cand = g.tanh(g.add(g.slice_cols(gx, 2 * d, d), g.mul(r, g.slice_cols(gh, 2 * d, d))));
    // (1 - u) * n + u * h == n + u * (h - n)
    h = g.add(cand, g.mul(u, g.sub(h, cand)));
  }
  return h;
}

template <typename T>
Var encode_user(Graph<T>& g, const Bound<T>& theta, const RankerConfig& config,
                data::UserId user, Var history) {
  if (config.encoder == EncoderKind::kMf) {
    const std::uint32_t id = user;
    return g.gather_rows(theta["user_embedding"], std::span<const std::uint32_t>(&id, 1));
  }
  return gru_encode(g, theta, history);
}

template <typename T>
Var embed_history(Graph<T>& g, const Bound<T>& theta, const RankerConfig& config,
                  std::span<const data::ItemId> history, Phase phase, Rng* rng) {
  Var seq = g.gather_rows(theta["item_embedding"], history);
  if (phase == Phase::kTrain && config.dropout > 0.0) {
    if (!rng) throw std::invalid_argument("train phase needs an rng");
    seq = g.dropout(seq, config.dropout, *rng);
  }
  return seq;
}

void check_ids(const RankerConfig& config, data::UserId user, std::span<const data::ItemId> history,
               std::span<const data::ItemId> candidates) {
  auto check_item = [&](data::ItemId v) {
    if (v >= config.num_items) {
      throw std::out_of_range("item " + std::to_string(v) + " outside the embedding table (" +
                              std::to_string(config.num_items) + " rows)");
    }
  };
  for (data::ItemId v : history) check_item(v);
  for (data::ItemId v : candidates) check_item(v);
  if (candidates.empty()) throw std::invalid_argument("empty candidate list");
  if (config.encoder == EncoderKind::kMf && user >= config.num_users) {
    throw std::out_of_range("user " + std::to_string(user) + " outside the user table");
  }
  if (config.encoder == EncoderKind::kGru && history.empty()) {
    throw std::invalid_argument("GRU scoring needs a nonempty history");
  }
}

void check_group_ids(const RankerConfig& config, const data::CandidateGroup& group) {
  const auto cands = group.candidates();
  check_ids(config, group.user, group.history, cands);
}

template <typename T>
Var score_candidates(Graph<T>& g, const Bound<T>& theta, const RankerConfig& config,
                     data::UserId user, std::span<const data::ItemId> history,
                     std::span<const data::ItemId> candidate_ids, Phase phase, Rng* rng) {
  check_ids(config, user, history, candidate_ids);
  const Var candidates = g.gather_rows(theta["item_embedding"], candidate_ids);
  Var seq{};
  if (config.encoder == EncoderKind::kGru) seq = embed_history(g, theta, config, history, phase, rng);
  const Var p_u = encode_user(g, theta, config, user, seq);
  return predict_scores(g, predictor_vars(theta), p_u, candidates, phase, config.dropout, rng);
}

template <typename T>
Var score_group(Graph<T>& g, const Bound<T>& theta, const RankerConfig& config,
                const data::CandidateGroup& group, Phase phase, Rng* rng) {
  const auto cands = group.candidates();
  return score_candidates(g, theta, config, group.user, group.history, cands, phase, rng);
}

#define ADARANK_INSTANTIATE(T)                                                                   \
  template struct BaseRanker<T>;                                                                 \
  template Var predict_scores(Graph<T>&, const PredictorVars&, Var, Var, Phase, double, Rng*);   \
  template Var gru_encode(Graph<T>&, const Bound<T>&, Var);                                      \
  template Var encode_user(Graph<T>&, const Bound<T>&, const RankerConfig&, data::UserId, Var);  \
  template Var embed_history(Graph<T>&, const Bound<T>&, const RankerConfig&,                   \
                             std::span<const data::ItemId>, Phase, Rng*);                        \
  template Var score_candidates(Graph<T>&, const Bound<T>&, const RankerConfig&, data::UserId,   \
                                std::span<const data::ItemId>, std::span<const data::ItemId>,    \
                                Phase, Rng*);                                                    \
  template Var score_group(Graph<T>&, const Bound<T>&, const RankerConfig&,                      \
                           const data::CandidateGroup&, Phase, Rng*);
ADARANK_INSTANTIATE(float)
ADARANK_INSTANTIATE(double)
#undef ADARANK_INSTANTIATE

}  // namespace adarank::model
