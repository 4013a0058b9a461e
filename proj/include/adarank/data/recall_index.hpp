#pragma once

#include <span>
#include <vector>

#include "adarank/data/types.hpp"
#include "adarank/numerics/rng.hpp"
#include "adarank/numerics/tensor.hpp"

namespace adarank::data {

struct RecallConfig {
  std::size_t dim = 64;
  // MF: BCE with uniform negatives, plain SGD.
  std::size_t mf_epochs = 10;
  std::size_t mf_negatives = 4;
  double mf_lr = 0.05;
  double mf_l2 = 1e-4;
  // Skip-gram with negative sampling over behavior sequences.
  std::size_t i2i_epochs = 5;
  std::size_t i2i_window = 5;
  std::size_t i2i_negatives = 5;
  double i2i_lr = 0.025;
};

/// Three recall models over the known items of a catalog: popularity
/// order, MF user/item embeddings and item2item skip-gram embeddings. All
/// rankings are total orders, ties broken by ascending item id. Per-user
/// and per-item rankings are computed on first use and cached, so an index
/// must not be shared across threads while sampling.
class RecallIndex {
 public:
  const std::vector<ItemId>& popularity_order() const noexcept { return popularity_order_; }
  /// Known items by descending dot(user, item), MF embeddings.
  const std::vector<ItemId>& mf_ranking(UserId user);
  /// Known items other than `anchor` by descending dot(anchor, item),
  /// item2item embeddings.
  const std::vector<ItemId>& i2i_ranking(ItemId anchor);

  float mf_score(UserId user, ItemId item) const;
  float i2i_score(ItemId a, ItemId b) const;

  std::size_t dim() const noexcept { return user_embedding_.cols(); }
  std::size_t ranking_size() const noexcept { return popularity_order_.size(); }
  const Tensor<float>& user_embedding() const noexcept { return user_embedding_; }
  const Tensor<float>& item_embedding() const noexcept { return item_embedding_; }
  const Tensor<float>& i2i_embedding() const noexcept { return i2i_embedding_; }

  friend RecallIndex build_recall_index(std::span<const UserSequence>, const Catalog&,
                                        const RecallConfig&, Rng&);

 private:
  std::vector<ItemId> popularity_order_;
  Tensor<float> user_embedding_;
  Tensor<float> item_embedding_;
  Tensor<float> i2i_embedding_;
  std::vector<ItemId> known_;
  std::vector<std::vector<ItemId>> mf_cache_;
  std::vector<std::vector<ItemId>> i2i_cache_;
};

/// Trains the three recall models on training interactions (sequences with
/// their validation and test items already removed). Popularity comes from
/// catalog.popularity(). Throws DataError with fewer than 2 known items.
RecallIndex build_recall_index(std::span<const UserSequence> training, const Catalog& catalog,
                               const RecallConfig& config, Rng& rng);

}  // namespace adarank::data
