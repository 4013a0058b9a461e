#include "adarank/model/adaptor.hpp"

#include <cmath>
#include <stdexcept>

namespace adarank::model {

const char* to_string(ExtractorMode mode) { return mode == ExtractorMode::kNp ? "np" : "avg"; }

const char* to_string(FilmMode mode) {
  switch (mode) {
    case FilmMode::kScalar: return "film_scalar";
    case FilmMode::kVector: return "film_vector";
    case FilmMode::kPerItem: return "film_per_item";
    case FilmMode::kAddBias: return "add_bias";
    case FilmMode::kNone: return "none";
  }
  return "?";
}

const char* to_string(PoolMode mode) {
  switch (mode) {
    case PoolMode::kMemNet: return "mem_net";
    case PoolMode::kFreePara: return "free_para";
    case PoolMode::kNoGlobal: return "no_global";
    case PoolMode::kAddBias1: return "add_bias_1";
    case PoolMode::kAddBias2: return "add_bias_2";
    case PoolMode::kNone: return "none";
  }
  return "?";
}

ExtractorMode parse_extractor_mode(const std::string& name) {
  if (name == "np") return ExtractorMode::kNp;
  if (name == "avg") return ExtractorMode::kAvg;
  throw std::invalid_argument("unknown extractor mode '" + name + "' (expected np or avg)");
}

FilmMode parse_film_mode(const std::string& name) {
  for (auto m : {FilmMode::kScalar, FilmMode::kVector, FilmMode::kPerItem, FilmMode::kAddBias,
                 FilmMode::kNone}) {
    if (name == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown input modulation mode '" + name +
                              "' (expected film_scalar, film_vector, film_per_item, add_bias or none)");
}

PoolMode parse_pool_mode(const std::string& name) {
  for (auto m : {PoolMode::kMemNet, PoolMode::kFreePara, PoolMode::kNoGlobal, PoolMode::kAddBias1,
                 PoolMode::kAddBias2, PoolMode::kNone}) {
    if (name == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown parameter modulation mode '" + name +
                              "' (expected mem_net, free_para, no_global, add_bias_1, add_bias_2 or none)");
}

namespace {

double fan_in_std(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

/// Two-layer network in -> hidden -> out with zero output weights and a
/// constant output bias.
template <typename T>
void add_identity_net(ParameterSet<T>& p, const std::string& prefix, std::size_t in,
                      std::size_t hidden, std::size_t out, T out_bias, Rng& rng) {
  p.add(prefix + "_w1", gaussian_tensor<T>(in, hidden, fan_in_std(in), rng));
  p.add(prefix + "_b1", Tensor<T>(1, hidden));
  p.add(prefix + "_w2", Tensor<T>(hidden, out));
  p.add(prefix + "_b2", Tensor<T>(1, out, out_bias));
}

template <typename T>
Var two_layer(Graph<T>& g, const Bound<T>& phi, const std::string& prefix, Var x) {
  const Var h = g.relu(g.add(g.matmul(x, phi[prefix + "_w1"]), phi[prefix + "_b1"]));
  return g.add(g.matmul(h, phi[prefix + "_w2"]), phi[prefix + "_b2"]);
}

bool is_weight(std::size_t k) { return k % 2 == 0; }

}  // namespace

template <typename T>
Adaptor<T> Adaptor<T>::init(const AdaptorConfig& config, const RankerConfig& ranker, Rng& rng) {
  const std::size_t d = ranker.dim, h = ranker.hidden, L = config.slots;
  if (d == 0 || h == 0) throw std::invalid_argument("adaptor needs positive dim and hidden");
  Adaptor a;
  a.config = config;
  auto& p = a.params;

  if (config.extractor == ExtractorMode::kNp) {
    p.add("np_w1", gaussian_tensor<T>(d, d, fan_in_std(d), rng));
    p.add("np_b1", Tensor<T>(1, d));
    p.add("np_w2", gaussian_tensor<T>(d, d, fan_in_std(d), rng));
    p.add("np_b2", Tensor<T>(1, d));
    p.add("np_ws", gaussian_tensor<T>(d, d, fan_in_std(d), rng));
    p.add("np_wmu", gaussian_tensor<T>(d, d, fan_in_std(d), rng));
    p.add("np_wsigma", gaussian_tensor<T>(d, d, fan_in_std(d), rng));
  }

  switch (config.film) {
    case FilmMode::kScalar:
      add_identity_net<T>(p, "film_s", d, d, 1, T(1), rng);
      add_identity_net<T>(p, "film_b", d, d, 1, T(0), rng);
      break;
    case FilmMode::kVector:
      add_identity_net<T>(p, "film_s", d, d, d, T(1), rng);
      add_identity_net<T>(p, "film_b", d, d, d, T(0), rng);
      break;
    case FilmMode::kPerItem:
      add_identity_net<T>(p, "film_s", 2 * d, d, d, T(1), rng);
      add_identity_net<T>(p, "film_b", 2 * d, d, d, T(0), rng);
      break;
    case FilmMode::kAddBias:
      add_identity_net<T>(p, "film_b", d, d, d, T(0), rng);
      break;
    case FilmMode::kNone:
      break;
  }

  const std::array<std::array<std::size_t, 2>, 4> shapes{
      {{2 * d, h}, {1, h}, {h, 1}, {1, 1}}};
  switch (config.pool) {
    case PoolMode::kMemNet:
    case PoolMode::kNoGlobal:
      if (L == 0) throw std::invalid_argument("parameter pools need at least one slot");
      for (std::size_t k = 0; k < 4; ++k) {
        const std::size_t numel = shapes[k][0] * shapes[k][1];
        const std::string name = std::string("pool_") + kPatchedParams[k];
        Tensor<T> slots(L, numel, is_weight(k) ? T(1) : T(0));
        if (config.pool == PoolMode::kNoGlobal && is_weight(k)) {
          slots = gaussian_tensor<T>(L, numel, fan_in_std(shapes[k][0]), rng);
        }
        p.add(name + "_slots", std::move(slots));
        p.add(name + "_heads", gaussian_tensor<T>(L, d, fan_in_std(d), rng));
      }
      break;
    case PoolMode::kFreePara:
      for (std::size_t k = 0; k < 4; ++k) {
        const std::size_t numel = shapes[k][0] * shapes[k][1];
        add_identity_net<T>(p, std::string("gen_") + kPatchedParams[k], d, d, numel,
                            is_weight(k) ? T(1) : T(0), rng);
      }
      break;
    case PoolMode::kAddBias2:
      p.add("bias_p1", Tensor<T>(d, h));
      p.add("bias_p2", Tensor<T>(d, 1));
      break;
    case PoolMode::kAddBias1:
      p.add("bias_p1", Tensor<T>(d, h));
      break;
    case PoolMode::kNone:
      break;
  }
  return a;
}

template <typename T>
Distribution extract_distribution(Graph<T>& g, const Bound<T>& phi, ExtractorMode mode,
                                  Var candidates, Phase phase, Rng* rng) {
  if (g.value(candidates).rows() == 0) throw std::invalid_argument("empty candidate set");
  Distribution out;
  if (mode == ExtractorMode::kAvg) {
    out.z = g.mean_rows(candidates);
    return out;
  }
  const Var h = g.relu(g.add(g.matmul(candidates, phi["np_w1"]), phi["np_b1"]));
  const Var r_j = g.add(g.matmul(h, phi["np_w2"]), phi["np_b2"]);
  const Var r = g.mean_rows(r_j);
  const Var s = g.relu(g.matmul(r, phi["np_ws"]));
  out.mu = g.matmul(s, phi["np_wmu"]);
  out.log_sigma = g.matmul(s, phi["np_wsigma"]);
  if (phase == Phase::kTrain) {
    if (!rng) throw std::invalid_argument("train phase needs an rng");
    const std::size_t d = g.value(out.mu).cols();
    Tensor<T> eps(1, d);
    for (auto& v : eps.values()) v = static_cast<T>(rng->gaussian());
    out.eps = g.constant(std::move(eps));
    out.z = g.add(out.mu, g.mul(out.eps, g.exp(out.log_sigma)));
  } else {
    out.z = out.mu;
  }
  return out;
}

template <typename T>
FilmCoefficients film_coefficients(Graph<T>& g, const Bound<T>& phi, FilmMode mode, Var z,
                                   Var history) {
  switch (mode) {
    case FilmMode::kScalar:
    case FilmMode::kVector:
      return {two_layer(g, phi, "film_s", z), two_layer(g, phi, "film_b", z)};
    case FilmMode::kPerItem: {
      const std::size_t n = g.value(history).rows();
      const Var in = g.concat_cols(g.repeat_rows(z, n), history);
      return {two_layer(g, phi, "film_s", in), two_layer(g, phi, "film_b", in)};
    }
    case FilmMode::kAddBias:
      return {Var{}, two_layer(g, phi, "film_b", z)};
    case FilmMode::kNone:
      break;
  }
  return {};
}

template <typename T>
Var modulate_inputs(Graph<T>& g, Var history, const FilmCoefficients& c) {
  Var out = history;
  if (c.gamma.valid()) out = g.mul(out, c.gamma);
  if (c.beta.valid()) out = g.add(out, c.beta);
  return out;
}

template <typename T>
Patch compose_patch(Graph<T>& g, Var slots, Var heads, Var z, std::size_t rows, std::size_t cols) {
  const Var alpha = g.softmax_rows(g.matmul_nt(z, heads));
  return {g.reshape(g.matmul(alpha, slots), rows, cols), alpha};
}

template <typename T>
PredictorVars modulate_predictor(Graph<T>& g, const PredictorVars& base,
                                 const std::array<Var, 4>& patches, PoolMode mode) {
  PredictorVars out = base;
  if (mode == PoolMode::kNoGlobal) {
    out.w1 = patches[0];
    out.b1 = patches[1];
    out.w2 = patches[2];
    out.b2 = patches[3];
  } else if (mode == PoolMode::kMemNet || mode == PoolMode::kFreePara) {
    out.w1 = g.mul(base.w1, patches[0]);
    out.b1 = g.add(base.b1, patches[1]);
    out.w2 = g.mul(base.w2, patches[2]);
    out.b2 = g.add(base.b2, patches[3]);
  }
  return out;
}

template <typename T>
std::array<Var, 4> free_patches(Graph<T>& g, const Bound<T>& phi, const PredictorVars& base, Var z) {
  const std::array<Var, 4> targets{base.w1, base.b1, base.w2, base.b2};
  std::array<Var, 4> out{};
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& shape = g.value(targets[k]);
    const Var flat = two_layer(g, phi, std::string("gen_") + kPatchedParams[k], z);
    out[k] = g.reshape(flat, shape.rows(), shape.cols());
  }
  return out;
}

template <typename T>
AdaptedScores adapted_score_candidates(Graph<T>& g, const Bound<T>& theta,
                                       const RankerConfig& rconfig, const Bound<T>& phi,
                                       const AdaptorConfig& aconfig, data::UserId user_id,
                                       std::span<const data::ItemId> history_ids,
                                       std::span<const data::ItemId> cand_ids, Phase phase,
                                       Rng* rng) {
  check_ids(rconfig, user_id, history_ids, cand_ids);
  AdaptedScores out;
  const Var candidates = g.gather_rows(theta["item_embedding"], cand_ids);
  out.distribution = extract_distribution(g, phi, aconfig.extractor, candidates, phase, rng);
  const Var z = out.distribution.z;

  Var history{};
  if (rconfig.encoder == EncoderKind::kGru) {
    history = embed_history(g, theta, rconfig, history_ids, phase, rng);
    history = modulate_inputs(g, history, film_coefficients(g, phi, aconfig.film, z, history));
  }
  const Var user = encode_user(g, theta, rconfig, user_id, history);

  PredictorVars pred = predictor_vars(theta);
  switch (aconfig.pool) {
    case PoolMode::kMemNet:
    case PoolMode::kNoGlobal: {
      std::array<Var, 4> patches{};
      const std::array<Var, 4> targets{pred.w1, pred.b1, pred.w2, pred.b2};
      for (std::size_t k = 0; k < 4; ++k) {
        const std::string name = std::string("pool_") + kPatchedParams[k];
        const auto& shape = g.value(targets[k]);
        const Patch p = compose_patch(g, phi[name + "_slots"], phi[name + "_heads"], z, shape.rows(),
                                      shape.cols());
        patches[k] = p.value;
        out.alphas.push_back(p.alpha);
      }
      pred = modulate_predictor(g, pred, patches, aconfig.pool);
      break;
    }
    case PoolMode::kFreePara:
      pred = modulate_predictor(g, pred, free_patches(g, phi, pred, z), aconfig.pool);
      break;
    case PoolMode::kAddBias2:
      pred.add2 = g.matmul(z, phi["bias_p2"]);
      [[fallthrough]];
    case PoolMode::kAddBias1:
      pred.add1 = g.matmul(z, phi["bias_p1"]);
      break;
    case PoolMode::kNone:
      break;
  }
  out.scores = predict_scores(g, pred, user, candidates, phase, rconfig.dropout, rng);
  return out;
}

template <typename T>
AdaptedScores adapted_score_group(Graph<T>& g, const Bound<T>& theta, const RankerConfig& rconfig,
                                  const Bound<T>& phi, const AdaptorConfig& aconfig,
                                  const data::CandidateGroup& group, Phase phase, Rng* rng) {
  const auto cands = group.candidates();
  return adapted_score_candidates(g, theta, rconfig, phi, aconfig, group.user, group.history, cands,
                                  phase, rng);
}

#define ADARANK_INSTANTIATE(T)                                                                    \
  template struct Adaptor<T>;                                                                     \
  template Distribution extract_distribution(Graph<T>&, const Bound<T>&, ExtractorMode, Var,      \
                                             Phase, Rng*);                                        \
  template FilmCoefficients film_coefficients(Graph<T>&, const Bound<T>&, FilmMode, Var, Var);    \
  template Var modulate_inputs(Graph<T>&, Var, const FilmCoefficients&);                          \
  template Patch compose_patch(Graph<T>&, Var, Var, Var, std::size_t, std::size_t);               \
  template PredictorVars modulate_predictor(Graph<T>&, const PredictorVars&,                      \
                                            const std::array<Var, 4>&, PoolMode);                 \
  template std::array<Var, 4> free_patches(Graph<T>&, const Bound<T>&, const PredictorVars&, Var); \
  template AdaptedScores adapted_score_candidates(                                                 \
      Graph<T>&, const Bound<T>&, const RankerConfig&, const Bound<T>&, const AdaptorConfig&,     \
      data::UserId, std::span<const data::ItemId>, std::span<const data::ItemId>, Phase, Rng*);   \
  template AdaptedScores adapted_score_group(Graph<T>&, const Bound<T>&, const RankerConfig&,     \
                                             const Bound<T>&, const AdaptorConfig&,               \
                                             const data::CandidateGroup&, Phase, Rng*);
ADARANK_INSTANTIATE(float)
ADARANK_INSTANTIATE(double)
#undef ADARANK_INSTANTIATE

}  // namespace adarank::model
