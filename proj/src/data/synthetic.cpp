#include "adarank/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "adarank/numerics/rng.hpp"

namespace adarank::data {

void validate(const SyntheticConfig& c) {
  auto fail = [](const std::string& why) { throw std::invalid_argument("synthetic config: " + why); };
  if (c.num_users == 0) fail("num_users must be positive");
  if (c.num_categories == 0) fail("num_categories must be positive");
  if (c.num_categories > 65535) fail("num_categories exceeds the category id range");
  if (c.num_items < 20 * c.num_categories) {
    fail("num_items (" + std::to_string(c.num_items) + ") must be at least 20 * num_categories (" +
         std::to_string(20 * c.num_categories) + ")");
  }
  if (!(c.dirichlet_alpha > 0.0)) fail("dirichlet_alpha must be positive");
  if (!(c.zipf_s >= 0.0)) fail("zipf_s must be nonnegative");
  if (c.min_seq_len == 0 || c.min_seq_len > c.max_seq_len) fail("sequence length range is empty");
  if (!(c.multi_category_rate >= 0.0 && c.multi_category_rate <= 1.0)) {
    fail("multi_category_rate must lie in [0, 1]");
  }
}

InteractionLog generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  validate(config);
  const std::size_t n_items = config.num_items;
  const std::size_t n_cats = config.num_categories;

  Rng item_rng = Rng::stream(seed, "synthetic/items");
  std::vector<ItemId> order(n_items);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n_items; i > 1; --i) std::swap(order[i - 1], order[item_rng.uniform_int(i)]);

  std::vector<std::vector<CategoryId>> item_cats(n_items);
  for (std::size_t k = 0; k < n_items; ++k) {
    const auto primary = static_cast<CategoryId>(k % n_cats);
    auto& cats = item_cats[order[k]];
    cats.push_back(primary);
    if (n_cats > 1 && item_rng.bernoulli(config.multi_category_rate)) {
      auto second = static_cast<CategoryId>(item_rng.uniform_int(n_cats - 1));
      if (second >= primary) ++second;
      cats = {std::min(primary, second), std::max(primary, second)};
    }
  }

  // Members of each category in a random popularity order, with Zipf weights.
  std::vector<std::vector<ItemId>> members(n_cats);
  for (ItemId item = 0; item < n_items; ++item) {
    for (CategoryId c : item_cats[item]) members[c].push_back(item);
  }
  std::vector<std::vector<double>> weights(n_cats);
  for (std::size_t c = 0; c < n_cats; ++c) {
    auto& m = members[c];
    for (std::size_t i = m.size(); i > 1; --i) std::swap(m[i - 1], m[item_rng.uniform_int(i)]);
    weights[c].resize(m.size());
    for (std::size_t r = 0; r < m.size(); ++r) {
      weights[c][r] = std::pow(static_cast<double>(r + 1), -config.zipf_s);
    }
  }

  InteractionLog log;
  for (std::size_t u = 0; u < config.num_users; ++u) {
    Rng rng = Rng::stream(seed, "synthetic/user", u);
    const auto preference = rng.dirichlet(config.dirichlet_alpha, n_cats);
    const std::size_t span = config.max_seq_len - config.min_seq_len + 1;
    const std::size_t length = config.min_seq_len + rng.uniform_int(span);
    for (std::size_t t = 0; t < length; ++t) {
      const std::size_t c = rng.categorical(preference);
      const ItemId item = members[c][rng.categorical(weights[c])];
      log.records.push_back({static_cast<UserId>(u), item, static_cast<std::int64_t>(t),
                             item_cats[item]});
    }
  }
  return log;
}

}  // namespace adarank::data
