#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "adarank/data/prepare.hpp"
#include "adarank/data/synthetic.hpp"
#include "adarank/model/adaptor.hpp"
#include "adarank/train/trainer.hpp"

namespace adarank::cli {

/// Bad key, bad value or an inconsistent combination. Exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeyInfo {
  const char* key;
  const char* default_value;
  const char* help;
};

/// Every accepted key with its default, in echo order.
const std::vector<KeyInfo>& config_keys();

/// Flat key=value run configuration. Values are kept as text and parsed on
/// access so the echo reproduces exactly what was set.
class RunConfig {
 public:
  RunConfig();

  /// Throws ConfigError on an unknown key.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool is_set_explicitly(const std::string& key) const;

  /// `key=value` lines; blank lines and '#' comments are skipped. Throws
  /// ConfigError naming the line on any problem.
  void merge_text(const std::string& text, const std::string& origin);
  void merge_file(const std::filesystem::path& path);

  // Typed views. Each throws ConfigError on a malformed value.
  std::uint64_t seed() const;
  std::filesystem::path out() const;
  std::filesystem::path interactions_path() const;
  std::filesystem::path data_dir() const;
  std::filesystem::path checkpoint_path() const;
  std::filesystem::path base_checkpoint_path() const;
  data::SyntheticConfig synthetic() const;
  data::PrepareConfig prepare() const;
  std::array<double, 3> d_same() const;
  std::array<double, 3> d_new() const;
  model::RankerConfig ranker(std::size_t num_items, std::size_t num_users) const;
  model::AdaptorConfig adaptor() const;
  train::TrainConfig training() const;
  train::Strategy strategy() const;

  /// Non-path keys as sorted `key=value` lines. Paths name where a run
  /// lives, not what it computes, so they stay out of the echo and hash.
  std::string echo() const;
  /// 16 hex digits of FNV-1a over echo().
  std::string hash() const;
  /// "config_hash=..." followed by the echo lines, for file headers.
  std::vector<std::string> header() const;

 private:
  std::vector<std::pair<std::string, std::string>> values_;
  std::vector<bool> explicit_;
  std::size_t index(const std::string& key) const;
};

}  // namespace adarank::cli
