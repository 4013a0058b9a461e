#pragma once

#include <cstdint>

#include "adarank/data/types.hpp"

namespace adarank::data {

struct SyntheticConfig {
  std::size_t num_users = 2000;
  std::size_t num_items = 500;
  std::size_t num_categories = 10;
  double dirichlet_alpha = 0.2;
  double zipf_s = 1.0;
  std::size_t min_seq_len = 10;
  std::size_t max_seq_len = 30;
  /// Fraction of items that carry a second category.
  double multi_category_rate = 0.3;
};

/// Desk-scale interaction log. Every item gets a primary category (balanced
/// round robin over a shuffled item order) and, with probability
/// multi_category_rate, a second distinct one. Each user draws a category
/// preference from a symmetric Dirichlet(alpha) and a length uniformly from
/// [min_seq_len, max_seq_len]; each interaction picks a category by
/// preference, then an item by a Zipf(s) law over a fixed random popularity
/// order within that category. Timestamps count up by one per user.
/// Throws std::invalid_argument on infeasible configs, including
/// num_items < 20 * num_categories.
InteractionLog generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

void validate(const SyntheticConfig& config);

}  // namespace adarank::data
