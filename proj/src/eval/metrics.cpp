#include "adarank/eval/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace adarank::eval {
namespace {

std::size_t positive_index(std::span<const float> scores, std::span<const float> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length (" + std::to_string(scores.size()) +
                                " vs " + std::to_string(labels.size()) + ")");
  }
  std::size_t count = 0, index = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1.0f) {
      ++count;
      index = i;
    } else if (labels[i] != 0.0f) {
      throw std::invalid_argument("labels must be 0 or 1");
    }
  }
  if (count != 1) {
    throw std::invalid_argument("group needs exactly one positive, found " + std::to_string(count));
  }
  return index;
}

}  // namespace

double group_auc(std::span<const float> scores, std::span<const float> labels) {
  const std::size_t pos = positive_index(scores, labels);
  if (scores.size() < 2) throw std::invalid_argument("group needs at least one negative");
  double credit = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == pos) continue;
    if (scores[i] < scores[pos]) {
      credit += 1.0;
    } else if (scores[i] == scores[pos]) {
      credit += 0.5;
    }
  }
  return credit / static_cast<double>(scores.size() - 1);
}

double group_ndcg(std::span<const float> scores, std::span<const float> labels,
                  std::span<const data::ItemId> items) {
  const std::size_t pos = positive_index(scores, labels);
  if (items.size() != scores.size()) throw std::invalid_argument("items and scores differ in length");
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == pos) continue;
    if (scores[i] > scores[pos] || (scores[i] == scores[pos] && items[i] < items[pos])) ++rank;
  }
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

}  // namespace adarank::eval
