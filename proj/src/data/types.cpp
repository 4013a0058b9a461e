#include "adarank/data/types.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace adarank::data {

std::string Provenance::tag() const {
  if (kind == Kind::kMixer) return "mixer";
  char buf[96];
  std::snprintf(buf, sizeof buf, "recall(%g,%g,%g)", mix[0], mix[1], mix[2]);
  return buf;
}

Provenance Provenance::parse(const std::string& tag) {
  if (tag == "mixer") return mixer();
  const std::string prefix = "recall(";
  if (tag.rfind(prefix, 0) == 0 && tag.back() == ')') {
    std::istringstream in(tag.substr(prefix.size(), tag.size() - prefix.size() - 1));
    std::array<double, 3> d{};
    char comma1 = 0, comma2 = 0;
    if (in >> d[0] >> comma1 >> d[1] >> comma2 >> d[2] && comma1 == ',' && comma2 == ',' &&
        in.peek() == std::char_traits<char>::eof()) {
      return recall(d);
    }
  }
  throw DataError("unknown provenance tag '" + tag + "'");
}

std::array<ItemId, kGroupSize> CandidateGroup::candidates() const {
  std::array<ItemId, kGroupSize> out{};
  out[0] = positive;
  std::copy(negatives.begin(), negatives.end(), out.begin() + 1);
  return out;
}

std::array<float, kGroupSize> CandidateGroup::labels() {
  std::array<float, kGroupSize> out{};
  out[0] = 1.0f;
  return out;
}

void validate_group(const CandidateGroup& group) {
  auto items = group.candidates();
  std::sort(items.begin(), items.end());
  if (std::adjacent_find(items.begin(), items.end()) != items.end()) {
    throw DataError("group for user " + std::to_string(group.user) +
                    " has duplicate candidates");
  }
}

Catalog Catalog::from_log(const InteractionLog& log) {
  Catalog catalog;
  ItemId max_item = 0;
  CategoryId max_category = 0;
  for (const auto& r : log.records) {
    max_item = std::max(max_item, r.item);
    for (CategoryId c : r.categories) max_category = std::max(max_category, c);
  }
  if (log.records.empty()) return catalog;
  catalog.categories_.resize(static_cast<std::size_t>(max_item) + 1);
  catalog.by_category_.resize(static_cast<std::size_t>(max_category) + 1);
  for (const auto& r : log.records) {
    auto& cats = catalog.categories_[r.item];
    for (CategoryId c : r.categories) {
      if (std::find(cats.begin(), cats.end(), c) == cats.end()) cats.push_back(c);
    }
  }
  for (ItemId item = 0; item < catalog.categories_.size(); ++item) {
    auto& cats = catalog.categories_[item];
    if (cats.empty()) continue;
    std::sort(cats.begin(), cats.end());
    catalog.known_.push_back(item);
    for (CategoryId c : cats) catalog.by_category_[c].push_back(item);
  }
  catalog.popularity_.assign(catalog.categories_.size(), 0);
  return catalog;
}

std::vector<CategoryId> Catalog::nonempty_categories() const {
  std::vector<CategoryId> out;
  for (std::size_t c = 0; c < by_category_.size(); ++c) {
    if (!by_category_[c].empty()) out.push_back(static_cast<CategoryId>(c));
  }
  return out;
}

void Catalog::set_popularity(std::span<const UserSequence> training) {
  popularity_.assign(categories_.size(), 0);
  for (const auto& seq : training) {
    for (ItemId item : seq.items) {
      if (item < popularity_.size()) ++popularity_[item];
    }
  }
}

}  // namespace adarank::data
