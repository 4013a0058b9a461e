#pragma once

#include <array>
#include <span>
#include <vector>

#include "adarank/data/recall_index.hpp"
#include "adarank/data/types.hpp"
#include "adarank/numerics/rng.hpp"

namespace adarank::data {

/// What the distribution mixer decided for one group.
struct MixerTrace {
  int num_categories = 0;           // d in {1, 2, 3}
  bool popularity_branch = false;   // Bernoulli(0.5) outcome
  std::vector<CategoryId> categories;  // positive's category first
  std::vector<std::size_t> budget;     // negatives requested per category
};

/// Distribution-mixer negatives for one positive:
///  1. d ~ U{1,2,3}; the involved categories are one uniformly chosen
///     category of the positive plus d-1 distinct other categories;
///  2. one Bernoulli(0.5) picks popularity-proportional or uniform sampling
///     for the whole group;
///  3. the 19 slots are split near-evenly over the d categories, remainder
///     to the positive's category first.
/// Categories that run short are backfilled from the other involved
/// categories, then from the whole catalog. `excluded` items (e.g. a
/// user's history when that filter is on) are never drawn.
/// Throws DataError if the catalog has fewer than 20 known items.
std::array<ItemId, kNegatives> mixer_sample_negatives(Rng& rng, ItemId positive,
                                                      const Catalog& catalog,
                                                      MixerTrace* trace = nullptr,
                                                      std::span<const ItemId> excluded = {});

/// Near-even split of `total` over `parts`, remainder to the first parts.
std::vector<std::size_t> split_budget(std::size_t total, std::size_t parts);

/// Rank window [begin, end) into a ranking of `size` items. Windows are
/// given against a 2000-item reference; smaller rankings scale both bounds
/// by size / 2000 so the windows keep their relative position.
struct RankWindow {
  std::size_t begin;
  std::size_t end;
};
RankWindow scale_window(RankWindow reference, std::size_t size);

inline constexpr RankWindow kPopularityWindow{0, 1000};
inline constexpr RankWindow kMfWindow{1000, 2000};
inline constexpr RankWindow kItemToItemWindow{500, 1500};

struct RecallTrace {
  std::array<std::size_t, 3> counts{};  // multinomial(19, d)
  ItemId anchor = 0;                    // item2item anchor from recent history
};

/// Recall-model negatives: (x1, x2, x3) ~ multinomial(19, d); x1 drawn
/// uniformly from the popularity window, x2 from the user's MF window and
/// x3 from the item2item window around an item picked uniformly from the
/// last five history items. Duplicates are redrawn from the same window;
/// an exhausted window falls back to the whole catalog.
std::array<ItemId, kNegatives> recall_sample_negatives(Rng& rng, UserId user,
                                                       std::span<const ItemId> history,
                                                       ItemId positive, RecallIndex& index,
                                                       std::span<const double> d,
                                                       RecallTrace* trace = nullptr);

}  // namespace adarank::data
