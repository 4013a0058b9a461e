#include "adarank/train/param_count.hpp"

#include <map>

namespace adarank::train {
namespace {

std::string component(const std::string& name) {
  auto starts = [&](const char* p) { return name.rfind(p, 0) == 0; };
  if (starts("item_embedding") || starts("user_embedding")) return "embedding";
  if (starts("gru_")) return "encoder";
  if (starts("pred_")) return "predictor";
  if (starts("np_")) return "np";
  if (starts("film_")) return "film";
  if (starts("bias_")) return "add_bias";
  // pool_pred_w1_slots -> pool:pred_w1, gen_pred_w1_w2 -> gen:pred_w1
  for (const char* target : model::kPatchedParams) {
    for (const char* kind : {"pool", "gen"}) {
      if (starts((std::string(kind) + "_" + target + "_").c_str())) return std::string(kind) + ":" + target;
    }
  }
  return "other";
}

void add(ParamCount& c, const std::string& key, std::size_t n) {
  for (auto& [k, v] : c.breakdown) {
    if (k == key) {
      v += n;
      return;
    }
  }
  c.breakdown.emplace_back(key, n);
}

std::size_t net(std::size_t in, std::size_t hidden, std::size_t out) { return in * hidden + hidden + hidden * out + out; }

}  // namespace

ParamCount count_params(const model::Model& model) {
  ParamCount c;
  for (const auto& e : model.ranker.params) {
    c.theta += e.value.size();
    add(c, component(e.name), e.value.size());
  }
  if (model.adaptor) {
    for (const auto& e : model.adaptor->params) {
      c.phi += e.value.size();
      add(c, component(e.name), e.value.size());
    }
  }
  return c;
}

ParamCount expected_params(const model::RankerConfig& r, const model::AdaptorConfig* a) {
  using namespace model;
  const std::size_t d = r.dim, h = r.hidden, n = r.num_items, u = r.num_users;
  ParamCount c;
  const std::size_t embed = n * d + (r.encoder == EncoderKind::kMf ? u * d : 0);
  const std::size_t encoder = r.encoder == EncoderKind::kGru ? 2 * (d * 3 * d) + 2 * (3 * d) : 0;
  const std::size_t predictor = 2 * d * h + h + h + 1;
  c.theta = embed + encoder + predictor;
  c.breakdown.emplace_back("embedding", embed);
  if (encoder) c.breakdown.emplace_back("encoder", encoder);
  c.breakdown.emplace_back("predictor", predictor);
  if (!a) return c;

  auto put = [&](const std::string& key, std::size_t v) {
    c.phi += v;
    c.breakdown.emplace_back(key, v);
  };
  if (a->extractor == ExtractorMode::kNp) put("np", 2 * (d * d + d) + 3 * d * d);
  switch (a->film) {
    case FilmMode::kScalar: put("film", 2 * net(d, d, 1)); break;
    case FilmMode::kVector: put("film", 2 * net(d, d, d)); break;
    case FilmMode::kPerItem: put("film", 2 * net(2 * d, d, d)); break;
    case FilmMode::kAddBias: put("film", net(d, d, d)); break;
    case FilmMode::kNone: break;
  }
  const std::size_t numel[4] = {2 * d * h, h, h, 1};
  switch (a->pool) {
    case PoolMode::kMemNet:
    case PoolMode::kNoGlobal:
      for (std::size_t k = 0; k < 4; ++k) put(std::string("pool:") + kPatchedParams[k], a->slots * (numel[k] + d));
      break;
    case PoolMode::kFreePara:
      for (std::size_t k = 0; k < 4; ++k) put(std::string("gen:") + kPatchedParams[k], net(d, d, numel[k]));
      break;
    case PoolMode::kAddBias2: put("add_bias", d * h + d); break;
    case PoolMode::kAddBias1: put("add_bias", d * h); break;
    case PoolMode::kNone: break;
  }
  return c;
}

std::size_t asymptotic_adaptor_size(const model::RankerConfig& r, const model::AdaptorConfig& a) {
  return a.slots * 4 * (r.hidden * r.dim + r.dim) + r.dim * r.dim;
}

}  // namespace adarank::train
