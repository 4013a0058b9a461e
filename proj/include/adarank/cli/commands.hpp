#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "adarank/cli/run_config.hpp"

namespace adarank::cli {

struct EvalOptions {
  bool adaptor = true;
  bool dual_dist = false;
  bool export_qual = false;
};

// Each command writes its artifacts under config.out() and a summary to
// `out`. Config problems throw ConfigError; anything else is a runtime
// failure.
void cmd_generate(const RunConfig& config, std::ostream& out);
void cmd_prepare(const RunConfig& config, std::ostream& out);
void cmd_train_base(const RunConfig& config, std::ostream& out);
void cmd_train_adapt(const RunConfig& config, std::ostream& out);
void cmd_eval(const RunConfig& config, const EvalOptions& options, std::ostream& out);
void cmd_inspect(const RunConfig& config, std::ostream& out);

/// Parses arguments (program name excluded) and runs one subcommand.
/// Returns 0 on success, 1 on a runtime failure, 2 on a config or usage
/// error; messages go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adarank::cli
