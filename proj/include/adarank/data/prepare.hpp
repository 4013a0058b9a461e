#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adarank/data/interactions.hpp"
#include "adarank/data/recall_index.hpp"
#include "adarank/data/types.hpp"

namespace adarank::data {

enum class SamplerKind { kMixer, kRecall };
enum class Split { kTrain, kValid, kTest };

const char* to_string(Split split);

struct PrepareConfig {
  SamplerKind sampler = SamplerKind::kMixer;
  /// Recall mixing vector for training and validation groups.
  std::array<double, 3> train_mix{0.2, 0.5, 0.3};
  /// Recall mixing vector for test groups.
  std::array<double, 3> test_mix{0.2, 0.5, 0.3};
  std::size_t min_len = 10;
  std::size_t max_seq_len = 50;
  /// Also keep the user's own history out of mixer negatives.
  bool exclude_seen = false;
  RecallConfig recall;
};

/// Everything the trainers and evaluators consume.
struct Dataset {
  std::vector<UserSequence> sequences;
  Catalog catalog;
  std::size_t num_users = 0;  // max user id + 1
  std::vector<CandidateGroup> train;
  std::vector<CandidateGroup> valid;
  std::vector<CandidateGroup> test;
};

/// The most recent max_len items before `position`.
std::vector<ItemId> history_window(const UserSequence& seq, std::size_t position, std::size_t max_len);

/// Mixer groups for the seeds. Group randomness comes from a substream keyed
/// by (seed, split, user, position), so the result does not depend on
/// iteration order.
std::vector<CandidateGroup> mixer_groups(std::span<const TargetSeed> seeds,
                                         const std::vector<UserSequence>& sequences,
                                         const Catalog& catalog, const PrepareConfig& config,
                                         std::uint64_t seed, Split split);

/// Recall-sampler groups for the seeds with mixing vector `mix`. `tag`
/// separates substreams of different test constructions.
std::vector<CandidateGroup> recall_groups(std::span<const TargetSeed> seeds,
                                          const std::vector<UserSequence>& sequences,
                                          RecallIndex& index, std::array<double, 3> mix,
                                          const PrepareConfig& config, std::uint64_t seed,
                                          const std::string& tag);

/// Sequences, catalog (popularity from training prefixes) and the
/// leave-one-out groups. For the recall sampler the trained index is
/// returned through `index_out` when given.
Dataset prepare_dataset(const InteractionLog& log, const PrepareConfig& config, std::uint64_t seed,
                        std::optional<RecallIndex>* index_out = nullptr);

/// Sequences and catalog only, without sampling any group.
Dataset load_base_dataset(const InteractionLog& log, std::size_t min_len);

/// Builds the recall index for a base dataset.
RecallIndex build_dataset_index(const Dataset& dataset, const RecallConfig& config,
                                std::uint64_t seed);

/// Prepared-group file: `user<TAB>pos<TAB>n1,...,n19<TAB>provenance` per
/// line, '#' header comments first.
void write_groups(const std::filesystem::path& path, std::span<const CandidateGroup> groups,
                  const std::vector<std::string>& header = {});

/// Reads a prepared-group file and rebuilds each history from the user
/// sequences. Training groups of a user must appear in position order
/// (targets 1, 2, ...); validation and test groups target the second to last
/// and last items. Throws DataError on malformed lines or mismatches.
std::vector<CandidateGroup> read_groups(const std::filesystem::path& path,
                                        const std::vector<UserSequence>& sequences, Split split,
                                        std::size_t max_seq_len);
std::vector<CandidateGroup> parse_groups(const std::string& text,
                                         const std::vector<UserSequence>& sequences, Split split,
                                         std::size_t max_seq_len);

}  // namespace adarank::data
