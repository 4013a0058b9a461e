#include "adarank/data/prepare.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "adarank/data/sampling.hpp"

namespace adarank::data {

const char* to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

std::vector<ItemId> history_window(const UserSequence& seq, std::size_t position,
                                   std::size_t max_len) {
  const std::size_t begin = position > max_len ? position - max_len : 0;
  return {seq.items.begin() + static_cast<std::ptrdiff_t>(begin),
          seq.items.begin() + static_cast<std::ptrdiff_t>(position)};
}

std::vector<CandidateGroup> mixer_groups(std::span<const TargetSeed> seeds,
                                         const std::vector<UserSequence>& sequences,
                                         const Catalog& catalog, const PrepareConfig& config,
                                         std::uint64_t seed, Split split) {
  std::vector<CandidateGroup> out;
  out.reserve(seeds.size());
  const std::string tag = std::string("mixer/") + to_string(split);
  for (const auto& s : seeds) {
    const UserSequence& seq = sequences.at(s.sequence);
    Rng rng = Rng::stream(seed, tag, seq.user, s.position);
    CandidateGroup g;
    g.user = seq.user;
    g.history = history_window(seq, s.position, config.max_seq_len);
    g.positive = seq.items[s.position];
    std::span<const ItemId> excluded;
    if (config.exclude_seen) excluded = std::span<const ItemId>(seq.items).first(s.position);
    g.negatives = mixer_sample_negatives(rng, g.positive, catalog, nullptr, excluded);
    g.provenance = Provenance::mixer();
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<CandidateGroup> recall_groups(std::span<const TargetSeed> seeds,
                                          const std::vector<UserSequence>& sequences,
                                          RecallIndex& index, std::array<double, 3> mix,
                                          const PrepareConfig& config, std::uint64_t seed,
                                          const std::string& tag) {
  std::vector<CandidateGroup> out;
  out.reserve(seeds.size());
  const std::string stream_tag = "recall/" + tag;
  for (const auto& s : seeds) {
    const UserSequence& seq = sequences.at(s.sequence);
    Rng rng = Rng::stream(seed, stream_tag, seq.user, s.position);
    CandidateGroup g;
    g.user = seq.user;
    g.history = history_window(seq, s.position, config.max_seq_len);
    g.positive = seq.items[s.position];
    g.negatives = recall_sample_negatives(rng, seq.user, g.history, g.positive, index, mix);
    g.provenance = Provenance::recall(mix);
    out.push_back(std::move(g));
  }
  return out;
}

Dataset load_base_dataset(const InteractionLog& log, std::size_t min_len) {
  Dataset ds;
  ds.sequences = build_sequences(log, min_len);
  ds.catalog = Catalog::from_log(log);
  const auto prefixes = training_prefixes(ds.sequences);
  ds.catalog.set_popularity(prefixes);
  UserId max_user = 0;
  for (const auto& r : log.records) max_user = std::max(max_user, r.user);
  ds.num_users = static_cast<std::size_t>(max_user) + 1;
  return ds;
}

RecallIndex build_dataset_index(const Dataset& dataset, const RecallConfig& config,
                                std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "recall/index");
  const auto prefixes = training_prefixes(dataset.sequences);
  return build_recall_index(prefixes, dataset.catalog, config, rng);
}

Dataset prepare_dataset(const InteractionLog& log, const PrepareConfig& config, std::uint64_t seed,
                        std::optional<RecallIndex>* index_out) {
  Dataset ds = load_base_dataset(log, config.min_len);
  const auto split = leave_one_out_split(ds.sequences);
  if (config.sampler == SamplerKind::kMixer) {
    ds.train = mixer_groups(split.train, ds.sequences, ds.catalog, config, seed, Split::kTrain);
    ds.valid = mixer_groups(split.valid, ds.sequences, ds.catalog, config, seed, Split::kValid);
    ds.test = mixer_groups(split.test, ds.sequences, ds.catalog, config, seed, Split::kTest);
  } else {
    RecallIndex index = build_dataset_index(ds, config.recall, seed);
    ds.train = recall_groups(split.train, ds.sequences, index, config.train_mix, config, seed, "train");
    ds.valid = recall_groups(split.valid, ds.sequences, index, config.train_mix, config, seed, "valid");
    ds.test = recall_groups(split.test, ds.sequences, index, config.test_mix, config, seed, "test");
    if (index_out) *index_out = std::move(index);
  }
  return ds;
}

void write_groups(const std::filesystem::path& path, std::span<const CandidateGroup> groups,
                  const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& h : header) out << "# " << h << '\n';
  for (const auto& g : groups) {
    out << g.user << '\t' << g.positive << '\t';
    for (std::size_t i = 0; i < kNegatives; ++i) {
      if (i) out << ',';
      out << g.negatives[i];
    }
    out << '\t' << g.provenance.tag() << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

namespace {

template <typename Int>
bool parse_int(std::string_view field, Int& out) {
  if (field.empty()) return false;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::vector<CandidateGroup> parse_groups(const std::string& text,
                                         const std::vector<UserSequence>& sequences, Split split,
                                         std::size_t max_seq_len) {
  std::unordered_map<UserId, std::size_t> by_user;
  for (std::size_t i = 0; i < sequences.size(); ++i) by_user[sequences[i].user] = i;
  std::unordered_map<UserId, std::size_t> next_train_position;

  std::vector<CandidateGroup> out;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto fail = [&](const std::string& why) {
      throw DataError("group line " + std::to_string(line_no) + ": " + why);
    };
    std::vector<std::string_view> fields;
    for (std::size_t start = 0;;) {
      const auto pos = line.find('\t', start);
      fields.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    if (fields.size() != 4) fail("expected 4 tab-separated fields");
    CandidateGroup g;
    if (!parse_int(fields[0], g.user)) fail("bad user id");
    if (!parse_int(fields[1], g.positive)) fail("bad positive item");
    std::size_t count = 0;
    std::string_view negs = fields[2];
    for (std::size_t start = 0;;) {
      const auto pos = negs.find(',', start);
      const auto field = negs.substr(start, pos == std::string_view::npos ? pos : pos - start);
      if (count >= kNegatives) fail("more than 19 negatives");
      if (!parse_int(field, g.negatives[count++])) fail("bad negative item");
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    if (count != kNegatives) fail("expected 19 negatives, got " + std::to_string(count));
    try {
      g.provenance = Provenance::parse(std::string(fields[3]));
    } catch (const DataError& e) {
      fail(e.what());
    }
    const auto it = by_user.find(g.user);
    if (it == by_user.end()) fail("user " + std::to_string(g.user) + " has no sequence");
    const UserSequence& seq = sequences[it->second];
    const std::size_t n = seq.items.size();
    std::size_t position = 0;
    switch (split) {
      case Split::kTrain: {
        auto [slot, fresh] = next_train_position.try_emplace(g.user, 1);
        position = slot->second++;
        if (position + 2 >= n) fail("more training groups than training targets for user");
        break;
      }
      case Split::kValid: position = n - 2; break;
      case Split::kTest: position = n - 1; break;
    }
    if (seq.items[position] != g.positive) {
      fail("positive " + std::to_string(g.positive) + " does not match the sequence item at position " +
           std::to_string(position));
    }
    g.history = history_window(seq, position, max_seq_len);
    try {
      validate_group(g);
    } catch (const DataError& e) {
      fail(e.what());
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<CandidateGroup> read_groups(const std::filesystem::path& path,
                                        const std::vector<UserSequence>& sequences, Split split,
                                        std::size_t max_seq_len) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_groups(buf.str(), sequences, split, max_seq_len);
}

}  // namespace adarank::data
