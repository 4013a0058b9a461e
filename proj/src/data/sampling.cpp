#include "adarank/data/sampling.hpp"

#include <algorithm>
#include <unordered_set>

namespace adarank::data {
namespace {

class Picker {
 public:
  Picker(ItemId positive, std::span<const ItemId> excluded) {
    taken_.insert(positive);
    for (ItemId e : excluded) taken_.insert(e);
  }
  bool taken(ItemId item) const { return taken_.count(item) != 0; }
  void take(ItemId item) {
    taken_.insert(item);
    picked_.push_back(item);
  }
  std::size_t count() const { return picked_.size(); }
  const std::vector<ItemId>& picked() const { return picked_; }

  /// Draws up to `n` untaken items from `pool` uniformly without replacement.
  void uniform_from(Rng& rng, std::span<const ItemId> pool, std::size_t n) {
    std::vector<ItemId> open;
    for (ItemId item : pool) {
      if (!taken(item)) open.push_back(item);
    }
    for (std::size_t k = 0; k < n && !open.empty(); ++k) {
      const std::size_t j = rng.uniform_int(open.size());
      take(open[j]);
      open[j] = open.back();
      open.pop_back();
    }
  }

  /// Draws up to `n` untaken items with probability proportional to
  /// popularity, without replacement; zero-popularity items are reached
  /// uniformly once the popular ones run out.
  void popular_from(Rng& rng, std::span<const ItemId> pool, std::span<const std::uint64_t> popularity,
                    std::size_t n) {
    std::vector<ItemId> open;
    std::vector<double> weight;
    for (ItemId item : pool) {
      if (taken(item)) continue;
      open.push_back(item);
      weight.push_back(static_cast<double>(popularity[item]));
    }
    std::size_t drawn = 0;
    for (; drawn < n && !open.empty(); ++drawn) {
      double total = 0.0;
      for (double w : weight) total += w;
      if (total <= 0.0) break;
      const std::size_t j = rng.categorical(weight);
      take(open[j]);
      open.erase(open.begin() + static_cast<std::ptrdiff_t>(j));
      weight.erase(weight.begin() + static_cast<std::ptrdiff_t>(j));
    }
    if (drawn < n) uniform_from(rng, open, n - drawn);
  }

 private:
  std::unordered_set<ItemId> taken_;
  std::vector<ItemId> picked_;
};

std::array<ItemId, kNegatives> to_array(const std::vector<ItemId>& items) {
  if (items.size() != kNegatives) {
    throw DataError("could only find " + std::to_string(items.size()) + " distinct negatives");
  }
  std::array<ItemId, kNegatives> out{};
  std::copy(items.begin(), items.end(), out.begin());
  return out;
}

}  // namespace

std::vector<std::size_t> split_budget(std::size_t total, std::size_t parts) {
  if (parts == 0) throw DataError("split_budget: zero parts");
  std::vector<std::size_t> out(parts, total / parts);
  for (std::size_t i = 0; i < total % parts; ++i) ++out[i];
  return out;
}

std::array<ItemId, kNegatives> mixer_sample_negatives(Rng& rng, ItemId positive,
                                                      const Catalog& catalog, MixerTrace* trace,
                                                      std::span<const ItemId> excluded) {
  if (catalog.known_items().size() < kGroupSize) {
    throw DataError("catalog has " + std::to_string(catalog.known_items().size()) +
                    " items; at least 20 are needed");
  }
  if (!catalog.known(positive)) {
    throw DataError("positive item " + std::to_string(positive) + " has no category");
  }
  const auto own = catalog.categories(positive);
  const CategoryId anchor = own[rng.uniform_int(own.size())];
  const int d = static_cast<int>(rng.uniform_int(3)) + 1;

  std::vector<CategoryId> others;
  for (CategoryId c : catalog.nonempty_categories()) {
    if (c != anchor) others.push_back(c);
  }
  std::vector<CategoryId> involved{anchor};
  for (int k = 1; k < d && !others.empty(); ++k) {
    const std::size_t j = rng.uniform_int(others.size());
    involved.push_back(others[j]);
    others.erase(others.begin() + static_cast<std::ptrdiff_t>(j));
  }
  const bool popular = rng.bernoulli(0.5);
  const auto budget = split_budget(kNegatives, involved.size());

  Picker picker(positive, excluded);
  for (std::size_t k = 0; k < involved.size(); ++k) {
    const auto pool = catalog.items_in(involved[k]);
    if (popular) {
      picker.popular_from(rng, pool, catalog.popularity(), budget[k]);
    } else {
      picker.uniform_from(rng, pool, budget[k]);
    }
  }
  // Short categories: fill from the involved categories, then anywhere.
  if (picker.count() < kNegatives) {
    std::vector<ItemId> pool;
    for (CategoryId c : involved) {
      const auto items = catalog.items_in(c);
      pool.insert(pool.end(), items.begin(), items.end());
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    picker.uniform_from(rng, pool, kNegatives - picker.count());
  }
  if (picker.count() < kNegatives) {
    picker.uniform_from(rng, catalog.known_items(), kNegatives - picker.count());
  }
  if (trace) {
    trace->num_categories = d;
    trace->popularity_branch = popular;
    trace->categories = involved;
    trace->budget = budget;
  }
  return to_array(picker.picked());
}

RankWindow scale_window(RankWindow reference, std::size_t size) {
  constexpr std::size_t kReference = 2000;
  if (size >= kReference) return {std::min(reference.begin, size), std::min(reference.end, size)};
  return {reference.begin * size / kReference, reference.end * size / kReference};
}

std::array<ItemId, kNegatives> recall_sample_negatives(Rng& rng, UserId user,
                                                       std::span<const ItemId> history,
                                                       ItemId positive, RecallIndex& index,
                                                       std::span<const double> d,
                                                       RecallTrace* trace) {
  if (d.size() != 3) throw DataError("recall mixing vector must have 3 entries");
  if (history.empty()) throw DataError("recall sampling needs a nonempty history");
  if (index.ranking_size() < kGroupSize) throw DataError("recall index ranks fewer than 20 items");
  const auto counts = rng.multinomial(kNegatives, d);
  const std::size_t recent = std::min<std::size_t>(5, history.size());
  const ItemId anchor = history[history.size() - recent + rng.uniform_int(recent)];

  Picker picker(positive, {});
  auto from_window = [&](const std::vector<ItemId>& ranking, RankWindow reference, std::size_t n) {
    const RankWindow w = scale_window(reference, index.ranking_size());
    const std::size_t end = std::min(w.end, ranking.size());
    const std::size_t begin = std::min(w.begin, end);
    const std::size_t before = picker.count();
    picker.uniform_from(rng, std::span<const ItemId>(ranking).subspan(begin, end - begin), n);
    const std::size_t got = picker.count() - before;
    if (got < n) picker.uniform_from(rng, ranking, n - got);
  };
  from_window(index.popularity_order(), kPopularityWindow, counts[0]);
  from_window(index.mf_ranking(user), kMfWindow, counts[1]);
  from_window(index.i2i_ranking(anchor), kItemToItemWindow, counts[2]);
  if (trace) {
    trace->counts = {counts[0], counts[1], counts[2]};
    trace->anchor = anchor;
  }
  return to_array(picker.picked());
}

}  // namespace adarank::data
