#include "adarank/data/interactions.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

namespace adarank::data {
namespace {

template <typename Int>
bool parse_int(std::string_view field, Int& out) {
  if (field.empty()) return false;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

InteractionLog parse_interactions(const std::string& text) {
  InteractionLog log;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, '\t');
    auto fail = [&](const std::string& why) {
      throw DataError("line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 4) fail("expected 4 tab-separated fields, got " + std::to_string(fields.size()));
    Interaction rec;
    if (!parse_int(fields[0], rec.user)) fail("user id is not a nonnegative integer");
    if (!parse_int(fields[1], rec.item)) fail("item id is not a nonnegative integer");
    if (!parse_int(fields[2], rec.timestamp)) fail("timestamp is not an integer");
    for (const auto cat : split(fields[3], ',')) {
      CategoryId c = 0;
      if (!parse_int(cat, c)) fail("category '" + std::string(cat) + "' is not a small nonnegative integer");
      rec.categories.push_back(c);
    }
    if (rec.categories.empty()) fail("empty category set");
    log.records.push_back(std::move(rec));
  }
  if (log.records.empty()) throw DataError("no interaction records found");
  return log;
}

InteractionLog load_interactions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_interactions(buf.str());
}

void write_interactions(const std::filesystem::path& path, const InteractionLog& log,
                        const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& h : header) out << "# " << h << '\n';
  for (const auto& r : log.records) {
    out << r.user << '\t' << r.item << '\t' << r.timestamp << '\t';
    for (std::size_t i = 0; i < r.categories.size(); ++i) {
      if (i) out << ',';
      out << r.categories[i];
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<UserSequence> build_sequences(const InteractionLog& log, std::size_t min_len) {
  std::map<UserId, std::vector<const Interaction*>> by_user;
  for (const auto& r : log.records) by_user[r.user].push_back(&r);
  std::vector<UserSequence> out;
  for (auto& [user, recs] : by_user) {
    if (recs.size() < min_len) continue;
    std::stable_sort(recs.begin(), recs.end(), [](const Interaction* a, const Interaction* b) {
      return a->timestamp < b->timestamp;
    });
    UserSequence seq{user, {}};
    seq.items.reserve(recs.size());
    for (const auto* r : recs) seq.items.push_back(r->item);
    out.push_back(std::move(seq));
  }
  return out;
}

LeaveOneOutSplit leave_one_out_split(const std::vector<UserSequence>& sequences) {
  LeaveOneOutSplit split;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const std::size_t n = sequences[s].items.size();
    if (n < 3) throw DataError("sequence of user " + std::to_string(sequences[s].user) + " is too short to split");
    for (std::size_t pos = 1; pos + 2 < n; ++pos) split.train.push_back({s, pos});
    split.valid.push_back({s, n - 2});
    split.test.push_back({s, n - 1});
  }
  return split;
}

std::vector<UserSequence> training_prefixes(const std::vector<UserSequence>& sequences) {
  std::vector<UserSequence> out;
  out.reserve(sequences.size());
  for (const auto& seq : sequences) {
    UserSequence prefix{seq.user, seq.items};
    prefix.items.resize(seq.items.size() >= 2 ? seq.items.size() - 2 : 0);
    out.push_back(std::move(prefix));
  }
  return out;
}

}  // namespace adarank::data
