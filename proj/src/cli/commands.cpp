#include "adarank/cli/commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>

#include "adarank/data/interactions.hpp"
#include "adarank/eval/evaluate.hpp"
#include "adarank/train/checkpoint.hpp"
#include "adarank/train/param_count.hpp"

namespace adarank::cli {
namespace {

namespace fs = std::filesystem;

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw ConfigError(what + " not found: " + path.string());
}

std::ofstream open_output(const fs::path& path) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

data::Dataset load_sequences(const RunConfig& config) {
  require_file(config.interactions_path(), "interaction file");
  return data::load_base_dataset(data::load_interactions(config.interactions_path()), config.prepare().min_len);
}

std::vector<data::CandidateGroup> load_split(const RunConfig& config, const data::Dataset& ds, data::Split split) {
  const fs::path path = config.data_dir() / (std::string(data::to_string(split)) + ".groups");
  require_file(path, "group file");
  return data::read_groups(path, ds.sequences, split, config.prepare().max_seq_len);
}

train::Checkpoint load_model(const fs::path& path, const std::string& what) {
  require_file(path, what);
  return train::load_checkpoint(path);
}

void write_training_outputs(const RunConfig& config, const train::TrainResult& result, const std::string& stem,
                            std::ostream& out) {
  const fs::path ckpt = config.out() / (stem + ".ckpt");
  const fs::path log = config.out() / (stem + "_log.tsv");
  fs::create_directories(config.out());
  train::save_checkpoint(ckpt, {result.model, config.echo()});
  auto f = open_output(log);
  train::write_log(f, result.log, config.header());
  char buf[200];
  std::snprintf(buf, sizeof buf, "best epoch %zu of %zu, valid GAUC %.4f, %zu steps\n", result.best_epoch,
                result.log.back().epoch, result.best_valid_gauc, result.steps);
  out << buf << "wrote " << ckpt.string() << " and " << log.string() << '\n';
}

}  // namespace

void cmd_generate(const RunConfig& config, std::ostream& out) {
  const auto synthetic = config.synthetic();
  const auto log = data::generate_synthetic(synthetic, config.seed());
  const fs::path path = config.out() / "interactions.tsv";
  fs::create_directories(config.out());
  data::write_interactions(path, log, config.header());
  out << "wrote " << log.records.size() << " interactions for " << synthetic.num_users << " users to "
      << path.string() << '\n';
}

void cmd_prepare(const RunConfig& config, std::ostream& out) {
  const auto prepare = config.prepare();
  require_file(config.interactions_path(), "interaction file");
  const auto ds = data::prepare_dataset(data::load_interactions(config.interactions_path()), prepare, config.seed());
  fs::create_directories(config.out());
  auto header = config.header();
  for (auto split : {data::Split::kTrain, data::Split::kValid, data::Split::kTest}) {
    const auto& groups = split == data::Split::kTrain ? ds.train : split == data::Split::kValid ? ds.valid : ds.test;
    const fs::path path = config.out() / (std::string(data::to_string(split)) + ".groups");
    data::write_groups(path, groups, header);
    out << data::to_string(split) << ": " << groups.size() << " groups -> " << path.string() << '\n';
  }
  out << ds.sequences.size() << " users kept\n";
}

void cmd_train_base(const RunConfig& config, std::ostream& out) {
  const auto tc = config.training();
  const auto ds = load_sequences(config);
  const auto rc = config.ranker(ds.catalog.num_items(), ds.num_users);
  const auto train = load_split(config, ds, data::Split::kTrain);
  const auto valid = load_split(config, ds, data::Split::kValid);
  write_training_outputs(config, train::train_base(rc, train, valid, tc), "base", out);
}

void cmd_train_adapt(const RunConfig& config, std::ostream& out) {
  const auto tc = config.training();
  const auto strategy = config.strategy();
  const auto ac = config.adaptor();
  std::optional<model::BaseRanker<float>> base;
  if (strategy != train::Strategy::kScratchJoint) {
    if (!fs::is_regular_file(config.base_checkpoint_path())) {
      throw ConfigError(std::string("strategy ") + train::to_string(strategy) + " needs a base checkpoint; " +
                        config.base_checkpoint_path().string() + " not found");
    }
    base = train::load_checkpoint(config.base_checkpoint_path()).model.ranker;
  }
  const auto ds = load_sequences(config);
  const auto rc = config.ranker(ds.catalog.num_items(), ds.num_users);
  if (base && !(base->config == rc)) {
    throw ConfigError("base checkpoint was trained with a different ranker config (dim, hidden, encoder, dropout or "
                      "vocabulary) than this run");
  }
  const auto train = load_split(config, ds, data::Split::kTrain);
  const auto valid = load_split(config, ds, data::Split::kValid);
  write_training_outputs(config, train::train_adapter(base, rc, ac, train, valid, tc, strategy), "adapt", out);
}

void cmd_eval(const RunConfig& config, const EvalOptions& options, std::ostream& out) {
  const auto ckpt = load_model(config.checkpoint_path(), "checkpoint");
  const bool adapted = options.adaptor && ckpt.model.adaptor.has_value();
  if (options.export_qual && !adapted) {
    throw ConfigError("--export-qual needs an adapted checkpoint evaluated with --adaptor=on");
  }
  if (options.dual_dist && !ckpt.model.adaptor) throw ConfigError("--dual-dist needs an adapted checkpoint");
  const auto ds = load_sequences(config);
  const auto test = load_split(config, ds, data::Split::kTest);
  fs::create_directories(config.out());

  std::vector<model::GroupDiagnostics> diagnostics;
  const auto report = eval::evaluate(ckpt.model, test, adapted, options.export_qual ? &diagnostics : nullptr);
  const auto rows = eval::report_rows(report, adapted ? "ada" : "base", "test");
  {
    auto f = open_output(config.out() / "metrics.tsv");
    eval::write_tsv(f, rows, config.header());
  }
  eval::write_table(out, rows);

  if (options.export_qual) {
    auto f = open_output(config.out() / "qual.tsv");
    for (const auto& h : config.header()) f << "# " << h << '\n';
    f << "# one row per test group in test.groups order\n";
    const auto& first = diagnostics.front();
    std::string cols;
    for (std::size_t i = 0; i < first.z.size(); ++i) cols += "z_" + std::to_string(i + 1) + '\t';
    for (std::size_t p = 0; p < first.alphas.size(); ++p) {
      for (std::size_t l = 0; l < first.alphas[p].size(); ++l) {
        cols += std::string("alpha_") + model::kPatchedParams[p] + "_" + std::to_string(l + 1) + '\t';
      }
    }
    cols.pop_back();
    f << cols << '\n';
    char buf[32];
    for (const auto& d : diagnostics) {
      std::string line;
      for (float v : d.z) {
        std::snprintf(buf, sizeof buf, "%.9g\t", v);
        line += buf;
      }
      for (const auto& a : d.alphas) {
        for (float v : a) {
          std::snprintf(buf, sizeof buf, "%.9g\t", v);
          line += buf;
        }
      }
      line.back() = '\n';
      f << line;
    }
    out << "wrote " << diagnostics.size() << " rows to " << (config.out() / "qual.tsv").string() << '\n';
  }

  if (options.dual_dist) {
    const auto base = load_model(config.base_checkpoint_path(), "base checkpoint");
    const auto prepare = config.prepare();
    auto index = data::build_dataset_index(ds, prepare.recall, config.seed());
    const auto dual = eval::dual_distribution_eval(base.model, ckpt.model, ds, index, prepare, config.seed(),
                                                   config.d_same(), config.d_new());
    const auto dual_rows = dual.rows();
    auto f = open_output(config.out() / "dual_dist.tsv");
    eval::write_tsv(f, dual_rows, config.header());
    out << '\n';
    eval::write_table(out, dual_rows);
  }
}

void cmd_inspect(const RunConfig& config, std::ostream& out) {
  const auto ckpt = load_model(config.checkpoint_path(), "checkpoint");
  const auto& m = ckpt.model;
  const auto got = train::count_params(m);
  const auto want = train::expected_params(m.ranker.config, m.adaptor ? &m.adaptor->config : nullptr);
  std::map<std::string, std::size_t> expected(want.breakdown.begin(), want.breakdown.end());

  std::vector<eval::ReportRow> rows;
  bool match = got.theta == want.theta && got.phi == want.phi && got.breakdown.size() == want.breakdown.size();
  for (const auto& [k, v] : got.breakdown) {
    const auto it = expected.find(k);
    match &= it != expected.end() && it->second == v;
    rows.push_back({"params", k, "counted", static_cast<double>(v)});
    rows.push_back({"params", k, "closed_form", it == expected.end() ? -1.0 : static_cast<double>(it->second)});
  }
  rows.push_back({"params", "theta", "counted", static_cast<double>(got.theta)});
  rows.push_back({"params", "phi", "counted", static_cast<double>(got.phi)});
  rows.push_back({"params", "theta", "closed_form", static_cast<double>(want.theta)});
  rows.push_back({"params", "phi", "closed_form", static_cast<double>(want.phi)});
  rows.push_back({"ratio", "phi_over_theta", "counted", static_cast<double>(got.phi) / static_cast<double>(got.theta)});
  if (m.adaptor) {
    rows.push_back({"params", "phi", "asymptotic_reference",
                    static_cast<double>(train::asymptotic_adaptor_size(m.ranker.config, m.adaptor->config))});
  }
  rows.push_back({"check", "counted_vs_closed_form", "all", match ? 1.0 : 0.0});
  auto f = open_output(config.out() / "params.tsv");
  eval::write_tsv(f, rows, config.header());
  eval::write_table(out, rows);
  if (!match) throw std::runtime_error("parameter walk disagrees with the closed-form counts");
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive ranking pipeline: generate, prepare, train-base, train-adapt, eval, inspect"};
  app.require_subcommand(1, 1);

  std::string config_file;
  std::map<std::string, std::string> overrides;
  EvalOptions eval_options;
  std::string adaptor_flag = "on";

  struct Sub {
    const char* name;
    const char* help;
  };
  const std::vector<Sub> subs{{"generate", "write a synthetic interaction log"},
                              {"prepare", "split sequences and sample candidate groups"},
                              {"train-base", "train the base ranker"},
                              {"train-adapt", "train the adapted ranker"},
                              {"eval", "evaluate a checkpoint on the test groups"},
                              {"inspect", "count checkpoint parameters"}};
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config_file, "key=value config file; flags override its keys");
    for (const auto& k : config_keys()) {
      std::string names = std::string("--") + k.key;
      std::string dashed = k.key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != k.key) names += ",--" + dashed;
      const std::string key = k.key;
      sub->add_option_function<std::string>(
          names, [&overrides, key](const std::string& v) { overrides[key] = v; },
          std::string(k.help) + " [" + k.default_value + "]")
          ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
    if (std::string(s.name) == "eval") {
      sub->add_option("--adaptor", adaptor_flag, "score with the adaptor: on or off")
          ->check(CLI::IsMember({"on", "off"}));
      sub->add_flag("--dual-dist", eval_options.dual_dist, "also run the Same_Dis / New_Dis comparison");
      sub->add_flag("--export-qual", eval_options.export_qual, "dump z and pool coefficients per test group");
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunConfig config;
    if (!config_file.empty()) config.merge_file(config_file);
    for (const auto& [k, v] : overrides) config.set(k, v);
    eval_options.adaptor = adaptor_flag == "on";
    if (command == "generate") cmd_generate(config, out);
    else if (command == "prepare") cmd_prepare(config, out);
    else if (command == "train-base") cmd_train_base(config, out);
    else if (command == "train-adapt") cmd_train_adapt(config, out);
    else if (command == "eval") cmd_eval(config, eval_options, out);
    else cmd_inspect(config, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << command << " failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace adarank::cli
