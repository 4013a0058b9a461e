#pragma once

#include <span>

#include "adarank/data/types.hpp"

namespace adarank::eval {

/// AUC of one group with exactly one positive label: the share of negatives
/// scored strictly below the positive, ties counted one half. Throws
/// std::invalid_argument unless exactly one label is 1.
double group_auc(std::span<const float> scores, std::span<const float> labels);

/// NDCG with one relevant item: 1 / log2(r + 1) where r is the positive's
/// 1-based rank by descending score, ties broken by ascending item id.
double group_ndcg(std::span<const float> scores, std::span<const float> labels,
                  std::span<const data::ItemId> items);

}  // namespace adarank::eval
