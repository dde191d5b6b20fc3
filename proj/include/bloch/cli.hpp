#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bloch/core.hpp"
#include "bloch/optimizer.hpp"

namespace bloch::cli {

/// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 1,
  kSolverError = 2,
  kVerificationFailed = 3,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  SystemParams system{0.1, 0.01, 1.0};
  BlochState initial_state{0.70710678118654752, 0.70710678118654752, 1.0};
  double t0 = 0.0;
  double tf = 20.0;
  std::size_t steps = 4000;
  CostWeights weights{0.1};
  SweepSettings sweep{};
  /// Rotation rate of the reference trajectory; defaults to omega0.
  std::optional<double> omega_ref;
  std::vector<double> n_sweep_values{0.01, 0.2, 0.5, 1.0, 2.0, 10.0};
  std::filesystem::path output_path = "bloch_out.csv";

  TimeGrid grid() const { return {t0, tf, steps}; }
  TrackingProblem problem() const;
  /// Throws ConfigError naming the first violated field.
  void validate() const;
};

/// Parses a JSON document. Every key is optional; unknown keys are rejected.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Path of the controls file written next to an optimize trajectory.
std::filesystem::path controls_path(const std::filesystem::path& trajectory_path);

/// Warning text when |x0| exceeds the unit ball, empty otherwise.
std::string physicality_warning(const BlochState& x0);

struct SweepSummaryRow {
  double n_mean = 0.0;
  double temperature_kelvin_per_omega0 = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  double final_cost = 0.0;
  double tracking_error_integral = 0.0;
  double control_energy_integral = 0.0;
  double terminal_pg = 0.0;
  double terminal_pe = 0.0;
  double mean_decoherence_controlled = 0.0;
  double mean_decoherence_free = 0.0;
};

/// One summary row per N, ascending in N. Solves run concurrently.
std::vector<SweepSummaryRow> run_sweep(const RunConfig& config);

/// Fixed-width scientific text with 17 significant digits.
std::string format_number(double v);

int cmd_free(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_optimize(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Dispatches a subcommand by name, mapping failures to exit codes and
/// printing the physicality warning to `err` when it applies.
int run_command(const std::string& name, const RunConfig& config, std::ostream& out,
                std::ostream& err);

}  // namespace bloch::cli
