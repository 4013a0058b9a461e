#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adarank/data/types.hpp"

namespace adarank::data {

/// Reads the interaction TSV: `user<TAB>item<TAB>timestamp<TAB>c1,c2,...`.
/// Blank lines and lines starting with '#' are skipped. Throws DataError
/// naming the offending line, or when no record is found.
InteractionLog load_interactions(const std::filesystem::path& path);
InteractionLog parse_interactions(const std::string& text);

/// Writes the TSV; `header` lines are emitted as '#' comments first.
void write_interactions(const std::filesystem::path& path, const InteractionLog& log,
                        const std::vector<std::string>& header = {});

/// Groups records by user and orders each user's items by timestamp; equal
/// timestamps keep input order. Users with fewer than min_len records are
/// dropped. Output is sorted by user id.
std::vector<UserSequence> build_sequences(const InteractionLog& log, std::size_t min_len = 10);

/// A prediction target: the item at `position` of sequence `sequence`,
/// with items [0, position) as history.
struct TargetSeed {
  std::size_t sequence = 0;
  std::size_t position = 0;
};

struct LeaveOneOutSplit {
  std::vector<TargetSeed> train;
  std::vector<TargetSeed> valid;
  std::vector<TargetSeed> test;
};

/// Last item is the test target, the one before it the validation target,
/// and every position 1..n-3 (0-based) a training target.
LeaveOneOutSplit leave_one_out_split(const std::vector<UserSequence>& sequences);

/// Each sequence without its last two items (the training interactions).
std::vector<UserSequence> training_prefixes(const std::vector<UserSequence>& sequences);

}  // namespace adarank::data
