#include "adarank/data/recall_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace adarank::data {
namespace {

float dot(const Tensor<float>& a, std::size_t ra, const Tensor<float>& b, std::size_t rb) {
  const float* x = a.data() + ra * a.cols();
  const float* y = b.data() + rb * b.cols();
  float acc = 0.0f;
  for (std::size_t k = 0; k < a.cols(); ++k) acc += x[k] * y[k];
  return acc;
}

float logistic(float x) {
  if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
  const float e = std::exp(x);
  return e / (1.0f + e);
}

std::vector<ItemId> rank_by(std::vector<ItemId> items, const std::vector<float>& score) {
  std::sort(items.begin(), items.end(), [&](ItemId a, ItemId b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  return items;
}

template <typename Fn>
void shuffle(std::vector<Fn>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_int(i)]);
}

void train_mf(Tensor<float>& users, Tensor<float>& items,
              std::span<const UserSequence> training, std::span<const ItemId> known,
              const RecallConfig& config, Rng& rng) {
  std::vector<std::pair<UserId, ItemId>> pairs;
  for (const auto& seq : training) {
    for (ItemId item : seq.items) pairs.emplace_back(seq.user, item);
  }
  const std::size_t d = users.cols();
  const float lr = static_cast<float>(config.mf_lr);
  const float l2 = static_cast<float>(config.mf_l2);
  std::vector<float> pu(d);
  auto update = [&](UserId u, ItemId i, float label) {
    float* p = users.data() + static_cast<std::size_t>(u) * d;
    float* q = items.data() + static_cast<std::size_t>(i) * d;
    const float g = logistic(dot(users, u, items, i)) - label;
    std::copy_n(p, d, pu.begin());
    for (std::size_t k = 0; k < d; ++k) {
      p[k] -= lr * (g * q[k] + l2 * p[k]);
      q[k] -= lr * (g * pu[k] + l2 * q[k]);
    }
  };
  for (std::size_t epoch = 0; epoch < config.mf_epochs; ++epoch) {
    shuffle(pairs, rng);
    for (const auto& [u, i] : pairs) {
      update(u, i, 1.0f);
      for (std::size_t n = 0; n < config.mf_negatives; ++n) {
        update(u, known[rng.uniform_int(known.size())], 0.0f);
      }
    }
  }
}

void train_skipgram(Tensor<float>& in, std::span<const UserSequence> training,
                    std::span<const ItemId> known, const RecallConfig& config, Rng& rng) {
  const std::size_t d = in.cols();
  Tensor<float> out(in.rows(), d);
  std::vector<float> err(d);
  const float lr = static_cast<float>(config.i2i_lr);
  auto pair_update = [&](ItemId center, ItemId other, float label) {
    float* x = in.data() + static_cast<std::size_t>(center) * d;
    float* y = out.data() + static_cast<std::size_t>(other) * d;
    float s = 0.0f;
    for (std::size_t k = 0; k < d; ++k) s += x[k] * y[k];
    const float g = lr * (label - logistic(s));
    for (std::size_t k = 0; k < d; ++k) {
      err[k] += g * y[k];
      y[k] += g * x[k];
    }
  };
  std::vector<std::size_t> order(training.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.i2i_epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t s : order) {
      const auto& items = training[s].items;
      for (std::size_t i = 0; i < items.size(); ++i) {
        std::fill(err.begin(), err.end(), 0.0f);
        const std::size_t lo = i >= config.i2i_window ? i - config.i2i_window : 0;
        const std::size_t hi = std::min(items.size(), i + config.i2i_window + 1);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j != i) pair_update(items[i], items[j], 1.0f);
        }
        for (std::size_t n = 0; n < config.i2i_negatives; ++n) {
          pair_update(items[i], known[rng.uniform_int(known.size())], 0.0f);
        }
        float* x = in.data() + static_cast<std::size_t>(items[i]) * d;
        for (std::size_t k = 0; k < d; ++k) x[k] += err[k];
      }
    }
  }
}

}  // namespace

RecallIndex build_recall_index(std::span<const UserSequence> training, const Catalog& catalog,
                               const RecallConfig& config, Rng& rng) {
  const auto known = catalog.known_items();
  if (known.size() < 2) throw DataError("recall index needs at least 2 known items");
  if (config.dim == 0) throw DataError("recall index dimension must be positive");
  RecallIndex index;
  index.known_.assign(known.begin(), known.end());

  std::vector<float> pop(catalog.num_items(), 0.0f);
  for (ItemId item : known) pop[item] = static_cast<float>(catalog.popularity(item));
  index.popularity_order_ = rank_by(index.known_, pop);

  UserId max_user = 0;
  for (const auto& seq : training) max_user = std::max(max_user, seq.user);
  const std::size_t d = config.dim;
  index.user_embedding_ = Tensor<float>(static_cast<std::size_t>(max_user) + 1, d);
  index.item_embedding_ = Tensor<float>(catalog.num_items(), d);
  for (auto& v : index.user_embedding_.values()) v = static_cast<float>(rng.gaussian() * 0.1);
  for (auto& v : index.item_embedding_.values()) v = static_cast<float>(rng.gaussian() * 0.1);
  train_mf(index.user_embedding_, index.item_embedding_, training, known, config, rng);

  index.i2i_embedding_ = Tensor<float>(catalog.num_items(), d);
  for (auto& v : index.i2i_embedding_.values()) {
    v = static_cast<float>((rng.uniform() - 0.5) / static_cast<double>(d));
  }
  train_skipgram(index.i2i_embedding_, training, known, config, rng);

  index.mf_cache_.resize(index.user_embedding_.rows());
  index.i2i_cache_.resize(catalog.num_items());
  return index;
}

float RecallIndex::mf_score(UserId user, ItemId item) const {
  return dot(user_embedding_, user, item_embedding_, item);
}

float RecallIndex::i2i_score(ItemId a, ItemId b) const {
  return dot(i2i_embedding_, a, i2i_embedding_, b);
}

const std::vector<ItemId>& RecallIndex::mf_ranking(UserId user) {
  if (user >= mf_cache_.size()) throw DataError("user " + std::to_string(user) + " unknown to the MF recall model");
  auto& cached = mf_cache_[user];
  if (cached.empty()) {
    std::vector<float> score(item_embedding_.rows(), 0.0f);
    for (ItemId item : known_) score[item] = mf_score(user, item);
    cached = rank_by(known_, score);
  }
  return cached;
}

const std::vector<ItemId>& RecallIndex::i2i_ranking(ItemId anchor) {
  if (anchor >= i2i_cache_.size()) throw DataError("item " + std::to_string(anchor) + " unknown to the item2item model");
  auto& cached = i2i_cache_[anchor];
  if (cached.empty()) {
    std::vector<float> score(i2i_embedding_.rows(), 0.0f);
    std::vector<ItemId> others;
    others.reserve(known_.size());
    for (ItemId item : known_) {
      if (item == anchor) continue;
      others.push_back(item);
      score[item] = i2i_score(anchor, item);
    }
    cached = rank_by(std::move(others), score);
  }
  return cached;
}

}  // namespace adarank::data
