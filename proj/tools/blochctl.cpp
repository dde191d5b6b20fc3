// Command-line driver: free evolution, optimal tracking, temperature sweeps
// and the built-in oracle checks for the dissipative two-level system.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bloch/cli.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<double> n_mean;
  std::optional<double> theta;
  std::optional<double> gamma0;
  std::optional<double> tf;
  std::optional<std::size_t> steps;
  std::optional<std::string> out;
};

void add_common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON configuration file");
  cmd->add_option("--n", o.n_mean, "mean thermal occupation N");
  cmd->add_option("--theta", o.theta, "control-energy weight");
  cmd->add_option("--gamma0", o.gamma0, "spontaneous emission rate");
  cmd->add_option("--tf", o.tf, "final time");
  cmd->add_option("--steps", o.steps, "number of grid intervals");
  cmd->add_option("--out", o.out, "output CSV path");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace bloch::cli;

  CLI::App app{"Optimal population transfer in a dissipative two-level system"};
  app.require_subcommand(1);
  Overrides o;
  for (const char* name : {"free", "optimize", "sweep", "verify"}) {
    add_common_options(app.add_subcommand(name), o);
  }
  app.get_subcommand("free")->description("write the analytic free evolution");
  app.get_subcommand("optimize")->description("solve the tracking problem at one temperature");
  app.get_subcommand("sweep")->description("solve across n_sweep_values and summarise");
  app.get_subcommand("verify")->description("run the oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kConfigError;
  }

  RunConfig config;
  try {
    if (!o.config_path.empty()) {
      config = load_config(o.config_path);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  if (o.n_mean) config.system.n_mean = *o.n_mean;
  if (o.theta) config.weights.theta = *o.theta;
  if (o.gamma0) config.system.gamma0 = *o.gamma0;
  if (o.tf) config.tf = *o.tf;
  if (o.steps) config.steps = *o.steps;
  if (o.out) config.output_path = *o.out;

  const std::string command = app.get_subcommands().front()->get_name();
  return run_command(command, config, std::cout, std::cerr);
}
