#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adarank::data {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;
using CategoryId = std::uint16_t;

inline constexpr std::size_t kGroupSize = 20;
inline constexpr std::size_t kNegatives = kGroupSize - 1;

/// Malformed input data or an infeasible sampling request.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interaction {
  UserId user = 0;
  ItemId item = 0;
  std::int64_t timestamp = 0;
  std::vector<CategoryId> categories;
};

struct InteractionLog {
  std::vector<Interaction> records;
};

/// One user's items in chronological order.
struct UserSequence {
  UserId user = 0;
  std::vector<ItemId> items;
};

/// Where a group's negatives came from: the distribution mixer, or the
/// recall-model sampler with its (pop, mf, item2item) mixing vector.
struct Provenance {
  enum class Kind { kMixer, kRecall };
  Kind kind = Kind::kMixer;
  std::array<double, 3> mix{0.0, 0.0, 0.0};

  static Provenance mixer() { return {}; }
  static Provenance recall(std::array<double, 3> d) { return {Kind::kRecall, d}; }

  /// "mixer" or "recall(0.2,0.5,0.3)".
  std::string tag() const;
  static Provenance parse(const std::string& tag);
  bool operator==(const Provenance&) const = default;
};

/// One ranking task: a user history plus 1 positive and 19 negatives. The
/// positive is candidate 0.
struct CandidateGroup {
  UserId user = 0;
  std::vector<ItemId> history;
  ItemId positive = 0;
  std::array<ItemId, kNegatives> negatives{};
  Provenance provenance;

  std::array<ItemId, kGroupSize> candidates() const;
  static constexpr float label(std::size_t candidate) { return candidate == 0 ? 1.0f : 0.0f; }
  static std::array<float, kGroupSize> labels();
};

/// Checks that a group has 20 distinct candidates. Throws DataError.
void validate_group(const CandidateGroup& group);

/// Item metadata: categories from the log and popularity from training
/// interactions. Item ids index directly into the tables.
class Catalog {
 public:
  Catalog() = default;
  /// Categories per item (union over all records of that item).
  static Catalog from_log(const InteractionLog& log);

  std::size_t num_items() const noexcept { return categories_.size(); }
  std::size_t num_categories() const noexcept { return by_category_.size(); }
  /// Items that appear in the log, ascending.
  std::span<const ItemId> known_items() const noexcept { return known_; }
  bool known(ItemId item) const noexcept {
    return item < categories_.size() && !categories_[item].empty();
  }
  std::span<const CategoryId> categories(ItemId item) const { return categories_.at(item); }
  /// Items carrying the category, ascending.
  std::span<const ItemId> items_in(CategoryId category) const { return by_category_.at(category); }
  /// Categories with at least one item, ascending.
  std::vector<CategoryId> nonempty_categories() const;

  std::uint64_t popularity(ItemId item) const { return popularity_.at(item); }
  std::span<const std::uint64_t> popularity() const noexcept { return popularity_; }
  /// Counts item occurrences in the given training sequences.
  void set_popularity(std::span<const UserSequence> training);

 private:
  std::vector<std::vector<CategoryId>> categories_;
  std::vector<std::vector<ItemId>> by_category_;
  std::vector<ItemId> known_;
  std::vector<std::uint64_t> popularity_;
};

}  // namespace adarank::data
