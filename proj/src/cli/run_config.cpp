#include "adarank/cli/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace adarank::cli {
namespace {

const std::vector<std::string> kPathKeys{"out", "interactions", "data_dir", "checkpoint", "base_checkpoint"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("config key '" + key + "': '" + value + "' is not " + expected);
}

}  // namespace

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys{
      {"seed", "1", "master seed for every random stream"},
      {"out", "run", "output directory"},
      {"interactions", "", "interaction TSV (default <out>/interactions.tsv)"},
      {"data_dir", "", "directory with prepared group files (default <out>)"},
      {"checkpoint", "", "checkpoint to evaluate or inspect (default <out>/adapt.ckpt)"},
      {"base_checkpoint", "", "base checkpoint for finetune strategies and dual-distribution eval (default <out>/base.ckpt)"},
      {"num_users", "2000", "synthetic users"},
      {"num_items", "500", "synthetic items"},
      {"num_categories", "10", "synthetic categories"},
      {"dirichlet_alpha", "0.2", "concentration of each user's category preference"},
      {"zipf_s", "1.0", "Zipf exponent of item popularity within a category"},
      {"gen_min_len", "10", "shortest synthetic sequence"},
      {"gen_max_len", "30", "longest synthetic sequence"},
      {"multi_category_rate", "0.3", "share of items with a second category"},
      {"sampler", "mixer", "negative sampler: mixer or recall"},
      {"train_mix", "0.2,0.5,0.3", "recall mixing vector (pop,mf,i2i) for train and valid groups"},
      {"test_mix", "0.2,0.5,0.3", "recall mixing vector for test groups"},
      {"d_same", "0.2,0.5,0.3", "Same_Dis mixing vector for dual-distribution eval"},
      {"d_new", "0.4,0.1,0.5", "New_Dis mixing vector for dual-distribution eval"},
      {"min_len", "10", "users with fewer interactions are dropped"},
      {"max_seq_len", "50", "history truncation length"},
      {"exclude_seen", "false", "keep a user's own history out of mixer negatives"},
      {"recall_dim", "64", "embedding size of the recall models"},
      {"recall_mf_epochs", "10", "MF recall model epochs"},
      {"recall_i2i_epochs", "5", "item2item recall model epochs"},
      {"encoder", "gru", "sequential encoder: gru or mf"},
      {"dim", "64", "embedding size d"},
      {"hidden", "64", "predictor hidden width h"},
      {"dropout", "0.4", "dropout rate in training"},
      {"extractor", "np", "distribution extractor: np or avg"},
      {"input_mod", "film_scalar", "input modulation: film_scalar, film_vector, film_per_item, add_bias or none"},
      {"param_mod", "mem_net", "parameter modulation: mem_net, free_para, no_global, add_bias_1, add_bias_2 or none"},
      {"slots", "10", "pool slots L"},
      {"lr", "0.001", "Adam learning rate"},
      {"batch_size", "256", "groups per optimizer step"},
      {"max_epochs", "20", "epoch limit"},
      {"patience", "3", "epochs without validation GAUC gain before stopping"},
      {"clip_norm", "5.0", "global gradient norm limit"},
      {"max_steps", "0", "optimizer step limit, 0 for none"},
      {"strategy", "finetune_adaptor", "adapter training: scratch_joint, finetune_joint or finetune_adaptor"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_.emplace_back(k.key, k.default_value);
  explicit_.assign(values_.size(), false);
}

std::size_t RunConfig::index(const std::string& key) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i].first == key) return i;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::size_t i = index(key);
  values_[i].second = value;
  explicit_[i] = true;
}

const std::string& RunConfig::get(const std::string& key) const { return values_[index(key)].second; }

bool RunConfig::is_set_explicitly(const std::string& key) const { return explicit_[index(key)]; }

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::size_t number = 0;
  for (std::string line; std::getline(in, line);) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + " line " + std::to_string(number) + ": expected key=value");
    }
    try {
      set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + " line " + std::to_string(number) + ": " + e.what());
    }
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  merge_text(buf.str(), path.string());
}

namespace {

std::size_t as_size(const RunConfig& c, const char* key) {
  const std::string& v = c.get(key);
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad(key, v, "a non-negative integer");
  return out;
}

double as_double(const RunConfig& c, const char* key) {
  const std::string& v = c.get(key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) bad(key, v, "a number");
    return out;
  } catch (const std::logic_error&) {
    bad(key, v, "a number");
  }
}

bool as_bool(const RunConfig& c, const char* key) {
  const std::string& v = c.get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad(key, v, "true or false");
}

std::array<double, 3> as_mix(const RunConfig& c, const char* key) {
  const std::string& v = c.get(key);
  std::array<double, 3> out{};
  std::istringstream in(v);
  std::string part;
  std::size_t i = 0;
  while (std::getline(in, part, ',')) {
    if (i == 3) bad(key, v, "three comma-separated proportions");
    try {
      std::size_t used = 0;
      out[i] = std::stod(part, &used);
      if (used != part.size()) bad(key, v, "three comma-separated proportions");
    } catch (const std::logic_error&) {
      bad(key, v, "three comma-separated proportions");
    }
    if (out[i] < 0.0) bad(key, v, "non-negative proportions");
    ++i;
  }
  if (i != 3) bad(key, v, "three comma-separated proportions");
  const double sum = out[0] + out[1] + out[2];
  if (std::abs(sum - 1.0) > 1e-6) bad(key, v, "proportions summing to 1");
  return out;
}

template <typename F>
auto parse_enum(const RunConfig& c, const char* key, F parse) {
  try {
    return parse(c.get(key));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

std::uint64_t RunConfig::seed() const { return as_size(*this, "seed"); }

std::filesystem::path RunConfig::out() const {
  if (get("out").empty()) throw ConfigError("config key 'out' must not be empty");
  return get("out");
}

std::filesystem::path RunConfig::interactions_path() const {
  return get("interactions").empty() ? out() / "interactions.tsv" : std::filesystem::path(get("interactions"));
}

std::filesystem::path RunConfig::data_dir() const {
  return get("data_dir").empty() ? out() : std::filesystem::path(get("data_dir"));
}

std::filesystem::path RunConfig::checkpoint_path() const {
  return get("checkpoint").empty() ? out() / "adapt.ckpt" : std::filesystem::path(get("checkpoint"));
}

std::filesystem::path RunConfig::base_checkpoint_path() const {
  return get("base_checkpoint").empty() ? out() / "base.ckpt" : std::filesystem::path(get("base_checkpoint"));
}

data::SyntheticConfig RunConfig::synthetic() const {
  data::SyntheticConfig s;
  s.num_users = as_size(*this, "num_users");
  s.num_items = as_size(*this, "num_items");
  s.num_categories = as_size(*this, "num_categories");
  s.dirichlet_alpha = as_double(*this, "dirichlet_alpha");
  s.zipf_s = as_double(*this, "zipf_s");
  s.min_seq_len = as_size(*this, "gen_min_len");
  s.max_seq_len = as_size(*this, "gen_max_len");
  s.multi_category_rate = as_double(*this, "multi_category_rate");
  try {
    data::validate(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

data::PrepareConfig RunConfig::prepare() const {
  data::PrepareConfig p;
  const std::string& sampler = get("sampler");
  if (sampler == "mixer") {
    p.sampler = data::SamplerKind::kMixer;
  } else if (sampler == "recall") {
    p.sampler = data::SamplerKind::kRecall;
  } else {
    bad("sampler", sampler, "mixer or recall");
  }
  p.train_mix = as_mix(*this, "train_mix");
  p.test_mix = as_mix(*this, "test_mix");
  p.min_len = as_size(*this, "min_len");
  p.max_seq_len = as_size(*this, "max_seq_len");
  if (p.min_len < 3) bad("min_len", get("min_len"), "at least 3");
  if (p.max_seq_len == 0) bad("max_seq_len", get("max_seq_len"), "positive");
  p.exclude_seen = as_bool(*this, "exclude_seen");
  p.recall.dim = as_size(*this, "recall_dim");
  p.recall.mf_epochs = as_size(*this, "recall_mf_epochs");
  p.recall.i2i_epochs = as_size(*this, "recall_i2i_epochs");
  if (p.recall.dim == 0) bad("recall_dim", get("recall_dim"), "positive");
  return p;
}

std::array<double, 3> RunConfig::d_same() const { return as_mix(*this, "d_same"); }
std::array<double, 3> RunConfig::d_new() const { return as_mix(*this, "d_new"); }

model::RankerConfig RunConfig::ranker(std::size_t num_items, std::size_t num_users) const {
  model::RankerConfig r;
  r.num_items = num_items;
  r.num_users = num_users;
  r.dim = as_size(*this, "dim");
  r.hidden = as_size(*this, "hidden");
  r.encoder = parse_enum(*this, "encoder", model::parse_encoder);
  r.dropout = as_double(*this, "dropout");
  if (r.dim == 0) bad("dim", get("dim"), "positive");
  if (r.hidden == 0) bad("hidden", get("hidden"), "positive");
  if (!(r.dropout >= 0.0 && r.dropout < 1.0)) bad("dropout", get("dropout"), "in [0, 1)");
  return r;
}

model::AdaptorConfig RunConfig::adaptor() const {
  model::AdaptorConfig a;
  a.extractor = parse_enum(*this, "extractor", model::parse_extractor_mode);
  a.film = parse_enum(*this, "input_mod", model::parse_film_mode);
  a.pool = parse_enum(*this, "param_mod", model::parse_pool_mode);
  a.slots = as_size(*this, "slots");
  const bool pooled = a.pool == model::PoolMode::kMemNet || a.pool == model::PoolMode::kNoGlobal;
  if (pooled && a.slots == 0) bad("slots", get("slots"), "positive");
  return a;
}

train::TrainConfig RunConfig::training() const {
  train::TrainConfig t;
  t.lr = as_double(*this, "lr");
  t.batch_size = as_size(*this, "batch_size");
  t.max_epochs = as_size(*this, "max_epochs");
  t.patience = as_size(*this, "patience");
  t.clip_norm = as_double(*this, "clip_norm");
  t.max_steps = as_size(*this, "max_steps");
  t.seed = seed();
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  return t;
}

train::Strategy RunConfig::strategy() const { return parse_enum(*this, "strategy", train::parse_strategy); }

std::string RunConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> sorted;
  for (const auto& kv : values_) {
    if (std::find(kPathKeys.begin(), kPathKeys.end(), kv.first) == kPathKeys.end()) sorted.push_back(kv);
  }
  std::sort(sorted.begin(), sorted.end());
  std::string out;
  for (const auto& [k, v] : sorted) out += k + "=" + v + "\n";
  return out;
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(echo())));
  return buf;
}

std::vector<std::string> RunConfig::header() const {
  std::vector<std::string> out{"config_hash=" + hash()};
  std::istringstream in(echo());
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace adarank::cli
