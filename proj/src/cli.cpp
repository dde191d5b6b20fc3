#include "bloch/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bloch/integrate.hpp"

namespace bloch::cli {

using nlohmann::json;

namespace {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] void unknown_key(const std::string& key) {
  throw ConfigError("unknown configuration key '" + key + "'");
}

double read_number(const json& j, const std::string& key) {
  if (!j.is_number()) {
    throw ConfigError("configuration key '" + key + "' must be a number");
  }
  return j.get<double>();
}

std::size_t read_count(const json& j, const std::string& key) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError("configuration key '" + key + "' must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

const json& read_object(const json& j, const std::string& key) {
  if (!j.is_object()) {
    throw ConfigError("configuration key '" + key + "' must be an object");
  }
  return j;
}

void parse_system(const json& j, SystemParams& p) {
  for (const auto& [key, value] : read_object(j, "system").items()) {
    const std::string name = "system." + key;
    if (key == "gamma0") {
      p.gamma0 = read_number(value, name);
    } else if (key == "n_mean") {
      p.n_mean = read_number(value, name);
    } else if (key == "omega0") {
      p.omega0 = read_number(value, name);
    } else {
      unknown_key(name);
    }
  }
}

void parse_grid(const json& j, RunConfig& c) {
  for (const auto& [key, value] : read_object(j, "grid").items()) {
    const std::string name = "grid." + key;
    if (key == "t0") {
      c.t0 = read_number(value, name);
    } else if (key == "tf") {
      c.tf = read_number(value, name);
    } else if (key == "steps") {
      c.steps = read_count(value, name);
    } else {
      unknown_key(name);
    }
  }
}

void parse_sweep(const json& j, SweepSettings& s) {
  for (const auto& [key, value] : read_object(j, "sweep").items()) {
    const std::string name = "sweep." + key;
    if (key == "max_iterations") {
      s.max_iterations = read_count(value, name);
    } else if (key == "cost_rel_tol") {
      s.cost_rel_tol = read_number(value, name);
    } else if (key == "control_abs_tol") {
      s.control_abs_tol = read_number(value, name);
    } else if (key == "relaxation_init") {
      s.relaxation_init = read_number(value, name);
    } else if (key == "relaxation_backtrack") {
      s.relaxation_backtrack = read_number(value, name);
    } else if (key == "history") {
      s.history = read_count(value, name);
    } else {
      unknown_key(name);
    }
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw OutputError("cannot open '" + path.string() + "' for writing");
  }
  return f;
}

void close_output(std::ofstream& f, const std::filesystem::path& path) {
  f.close();
  if (!f) {
    throw OutputError("failed writing '" + path.string() + "'");
  }
}

void write_row(std::ostream& os, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) {
      os << ',';
    }
    os << format_number(v);
    first = false;
  }
  os << '\n';
}

double mean_decoherence(const StateTrajectory& states) {
  const TimeGrid& grid = states.grid;
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.nodes(); ++k) {
    sum += grid.quadrature_weight(k) * decoherence_factor(states[k]);
  }
  return sum / (grid.tf() - grid.t0());
}

StateTrajectory free_states(const RunConfig& c) {
  const TimeGrid grid = c.grid();
  std::vector<BlochState> out(grid.nodes());
  for (std::size_t k = 0; k < grid.nodes(); ++k) {
    out[k] = free_evolution(c.initial_state, grid.time(k) - grid.t0(), c.system);
  }
  return {grid, std::move(out)};
}

SweepSummaryRow summarize(const RunConfig& base, double n_mean) {
  RunConfig c = base;
  c.system.n_mean = n_mean;
  SweepSummaryRow row;
  row.n_mean = n_mean;
  row.temperature_kelvin_per_omega0 = mean_occupation_to_temperature(n_mean, 1.0);
  row.mean_decoherence_free = mean_decoherence(free_states(c));
  try {
    const TrackingProblem problem = c.problem();
    const OptimalSolution sol = solve_tracking(problem, c.sweep);
    const CostTerms terms =
        cost_terms(sol.states, sample_targets(problem), sol.controls, problem.weights);
    const Populations end = populations(sol.states.back());
    row.converged = sol.converged;
    row.iterations = sol.iterations;
    row.final_cost = sol.final_cost();
    row.tracking_error_integral = terms.tracking;
    row.control_energy_integral = terms.control_energy;
    row.terminal_pg = end.ground;
    row.terminal_pe = end.excited;
    row.mean_decoherence_controlled = mean_decoherence(sol.states);
  } catch (const SolverError& e) {
    const double nan = std::nan("");
    row.converged = false;
    row.iterations = e.iteration();
    row.final_cost = nan;
    row.tracking_error_integral = nan;
    row.control_energy_integral = nan;
    row.terminal_pg = nan;
    row.terminal_pe = nan;
    row.mean_decoherence_controlled = nan;
  }
  return row;
}

// Smooth pseudo-random controls around the free field: a few low harmonics
// with random amplitudes and phases.
ControlTrajectory random_controls(const RunConfig& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(-0.3, 0.3);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  constexpr int harmonics = 3;
  double ax[harmonics], az[harmonics], px[harmonics], pz[harmonics];
  for (int j = 0; j < harmonics; ++j) {
    ax[j] = amp(rng);
    az[j] = amp(rng);
    px[j] = phase(rng);
    pz[j] = phase(rng);
  }
  const TimeGrid grid = c.grid();
  const double span = grid.tf() - grid.t0();
  std::vector<ControlInput> u(grid.nodes());
  for (std::size_t k = 0; k < grid.nodes(); ++k) {
    const double s = (grid.time(k) - grid.t0()) / span;
    ControlInput v{0.0, c.system.omega0};
    for (int j = 0; j < harmonics; ++j) {
      const double w = std::numbers::pi * (j + 1) * s;
      v.bx += ax[j] * std::sin(w + px[j]);
      v.bz += az[j] * std::cos(w + pz[j]);
    }
    u[k] = v;
  }
  return {grid, std::move(u)};
}

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

CheckResult check_integrator(const RunConfig& c) {
  const TimeGrid grid = c.grid();
  const SystemParams& p = c.system;
  const ControlInput u{0.0, p.omega0};
  CheckResult r{"integrator_closed_form", false, {}};
  try {
    const auto traj = integrate_forward(
        [&](double, const Vec3& x) { return bloch_rhs(x, u, p); }, c.initial_state, grid);
    double err = 0.0;
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
      err = std::max(
          err, max_abs(traj[k] - free_evolution(c.initial_state, grid.time(k) - grid.t0(), p)));
    }
    r.passed = err < 1e-8;
    r.detail = "max_error=" + format_number(err) + " tol=1e-8";
  } catch (const IntegrationError& e) {
    r.detail = e.what();
  }
  return r;
}

CheckResult check_adjoint(const RunConfig& c) {
  CheckResult r{"adjoint_vs_finite_difference", false, {}};
  const TimeGrid grid = c.grid();
  if (grid.steps() < 2) {
    r.detail = "grid has no interior node";
    return r;
  }
  std::mt19937_64 rng(20240601);
  const TrackingProblem problem = c.problem();
  const ControlTrajectory controls = random_controls(c, rng);
  std::uniform_int_distribution<std::size_t> pick(1, grid.steps() - 1);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto component = i % 2 == 0 ? ControlComponent::bx : ControlComponent::bz;
    const GradientCheck g = adjoint_gradient_check(problem, controls, pick(rng), component, 1e-6);
    worst = std::max(worst, g.relative_error());
  }
  r.passed = worst < 1e-4;
  r.detail = "max_relative_error=" + format_number(worst) + " tol=1e-4";
  return r;
}

}  // namespace

TrackingProblem RunConfig::problem() const {
  return {initial_state, system, weights, grid(),
          TargetParams{system.gamma0, omega_ref.value_or(system.omega0)}};
}

void RunConfig::validate() const {
  try {
    system.validate();
    weights.validate();
    sweep.validate();
    (void)grid();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!is_finite(initial_state)) {
    throw ConfigError("initial_state must be finite");
  }
  if (omega_ref && !std::isfinite(*omega_ref)) {
    throw ConfigError("target.omega_ref must be finite");
  }
  for (double n : n_sweep_values) {
    if (!(std::isfinite(n) && n >= 0.0)) {
      throw ConfigError("n_sweep_values entries must be non-negative");
    }
  }
  if (output_path.empty()) {
    throw ConfigError("output_path must not be empty");
  }
}

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  RunConfig c;
  for (const auto& [key, value] : read_object(doc, "<root>").items()) {
    if (key == "system") {
      parse_system(value, c.system);
    } else if (key == "initial_state") {
      if (!value.is_array() || value.size() != 3) {
        throw ConfigError("configuration key 'initial_state' must be an array of 3 numbers");
      }
      c.initial_state = {read_number(value[0], "initial_state"),
                         read_number(value[1], "initial_state"),
                         read_number(value[2], "initial_state")};
    } else if (key == "grid") {
      parse_grid(value, c);
    } else if (key == "weights") {
      for (const auto& [wkey, wvalue] : read_object(value, "weights").items()) {
        if (wkey != "theta") {
          unknown_key("weights." + wkey);
        }
        c.weights.theta = read_number(wvalue, "weights.theta");
      }
    } else if (key == "sweep") {
      parse_sweep(value, c.sweep);
    } else if (key == "target") {
      for (const auto& [tkey, tvalue] : read_object(value, "target").items()) {
        if (tkey != "omega_ref") {
          unknown_key("target." + tkey);
        }
        c.omega_ref = read_number(tvalue, "target.omega_ref");
      }
    } else if (key == "n_sweep_values") {
      if (!value.is_array()) {
        throw ConfigError("configuration key 'n_sweep_values' must be an array");
      }
      c.n_sweep_values.clear();
      for (const auto& n : value) {
        c.n_sweep_values.push_back(read_number(n, "n_sweep_values"));
      }
    } else if (key == "output_path") {
      if (!value.is_string()) {
        throw ConfigError("configuration key 'output_path' must be a string");
      }
      c.output_path = value.get<std::string>();
    } else {
      unknown_key(key);
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) {
    throw ConfigError("cannot read configuration file '" + path.string() + "'");
  }
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::filesystem::path controls_path(const std::filesystem::path& trajectory_path) {
  std::filesystem::path p = trajectory_path;
  const std::string ext = p.has_extension() ? p.extension().string() : ".csv";
  p.replace_filename(p.stem().string() + "_controls" + ext);
  return p;
}

std::string physicality_warning(const BlochState& x0) {
  const double n = norm(x0);
  if (n <= 1.0 + 1e-12) {
    return {};
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "warning: initial Bloch vector has norm %.12g > 1 and is not a physical state",
                n);
  return buf;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::vector<SweepSummaryRow> run_sweep(const RunConfig& config) {
  std::vector<double> values = config.n_sweep_values;
  std::sort(values.begin(), values.end());
  std::vector<SweepSummaryRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      rows[i] = summarize(config, values[i]);
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(values.size(), std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::jthread> pool;
  for (std::size_t i = 1; i < threads; ++i) {
    pool.emplace_back(worker);
  }
  worker();
  return rows;
}

int cmd_free(const RunConfig& config, std::ostream&, std::ostream&) {
  const StateTrajectory states = free_states(config);
  std::ofstream f = open_output(config.output_path);
  f << "t,x1,x2,x3,p_g,p_e,Lambda\n";
  for (std::size_t k = 0; k < states.size(); ++k) {
    const BlochState& x = states[k];
    const Populations pop = populations(x);
    write_row(f, {states.grid.time(k), x.x1, x.x2, x.x3, pop.ground, pop.excited,
                  decoherence_factor(x)});
  }
  close_output(f, config.output_path);
  return kSuccess;
}

int cmd_optimize(const RunConfig& config, std::ostream& out, std::ostream&) {
  const TrackingProblem problem = config.problem();
  const OptimalSolution sol = solve_tracking(problem, config.sweep);
  const StateTrajectory targets = sample_targets(problem);
  const StateTrajectory baseline = free_states(config);

  std::ofstream traj = open_output(config.output_path);
  traj << "t,x1,x2,x3,p_g,p_e,Lambda,pg_free,pe_free,pg_target,pe_target\n";
  for (std::size_t k = 0; k < sol.states.size(); ++k) {
    const BlochState& x = sol.states[k];
    const Populations pop = populations(x);
    const Populations free_pop = populations(baseline[k]);
    const Populations target_pop = populations(targets[k]);
    write_row(traj, {problem.grid.time(k), x.x1, x.x2, x.x3, pop.ground, pop.excited,
                     decoherence_factor(x), free_pop.ground, free_pop.excited, target_pop.ground,
                     target_pop.excited});
  }
  close_output(traj, config.output_path);

  const auto cpath = controls_path(config.output_path);
  std::ofstream ctrl = open_output(cpath);
  ctrl << "t,Bx,Bz\n";
  for (std::size_t k = 0; k < sol.controls.size(); ++k) {
    write_row(ctrl, {problem.grid.time(k), sol.controls[k].bx, sol.controls[k].bz});
  }
  close_output(ctrl, cpath);

  out << "converged=" << (sol.converged ? "true" : "false") << " iterations=" << sol.iterations
      << " final_cost=" << format_number(sol.final_cost())
      << " stationarity_residual=" << format_number(sol.stationarity_residual)
      << " status=" << to_string(sol.status) << '\n';
  return kSuccess;
}

int cmd_sweep(const RunConfig& config, std::ostream&, std::ostream&) {
  if (config.n_sweep_values.empty()) {
    throw ConfigError("n_sweep_values must not be empty");
  }
  const auto rows = run_sweep(config);
  std::ofstream f = open_output(config.output_path);
  f << "n_mean,temperature_kelvin_per_omega0,converged,iterations,final_cost,"
       "tracking_error_integral,control_energy_integral,terminal_pg,terminal_pe,"
       "mean_decoherence_controlled,mean_decoherence_free\n";
  for (const SweepSummaryRow& r : rows) {
    f << format_number(r.n_mean) << ',' << format_number(r.temperature_kelvin_per_omega0) << ','
      << (r.converged ? "true" : "false") << ',' << r.iterations << ',';
    write_row(f, {r.final_cost, r.tracking_error_integral, r.control_energy_integral,
                  r.terminal_pg, r.terminal_pe, r.mean_decoherence_controlled,
                  r.mean_decoherence_free});
  }
  close_output(f, config.output_path);
  return kSuccess;
}

int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream&) {
  std::vector<CheckResult> checks;
  checks.push_back(check_integrator(config));
  checks.push_back(check_adjoint(config));

  CheckResult stationarity{"stationarity", false, {}};
  CheckResult monotone{"monotone_cost", false, {}};
  try {
    const OptimalSolution sol = solve_tracking(config.problem(), config.sweep);
    stationarity.passed =
        sol.converged && sol.stationarity_residual < 10.0 * config.sweep.control_abs_tol;
    stationarity.detail = std::string("converged=") + (sol.converged ? "true" : "false") +
                          " residual=" + format_number(sol.stationarity_residual);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < sol.cost_history.size(); ++i) {
      worst = std::max(worst, sol.cost_history[i] - sol.cost_history[i - 1]);
    }
    monotone.passed = worst <= 1e-12;
    monotone.detail = "max_increase=" + format_number(std::max(worst, 0.0)) +
                      " iterations=" + std::to_string(sol.iterations);
  } catch (const SolverError& e) {
    stationarity.detail = e.what();
    monotone.detail = e.what();
  }
  checks.push_back(stationarity);
  checks.push_back(monotone);

  bool all = true;
  for (const CheckResult& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ' ' << c.detail << '\n';
    all = all && c.passed;
  }
  return all ? kSuccess : kVerificationFailed;
}

int run_command(const std::string& name, const RunConfig& config, std::ostream& out,
                std::ostream& err) {
  try {
    config.validate();
    if (const std::string w = physicality_warning(config.initial_state); !w.empty()) {
      err << w << '\n';
    }
    if (name == "free") {
      return cmd_free(config, out, err);
    }
    if (name == "optimize") {
      return cmd_optimize(config, out, err);
    }
    if (name == "sweep") {
      return cmd_sweep(config, out, err);
    }
    if (name == "verify") {
      return cmd_verify(config, out, err);
    }
    err << "error: unknown command '" << name << "'\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const OutputError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const SolverError& e) {
    err << "error: solver failed at " << e.what() << '\n';
    return kSolverError;
  } catch (const IntegrationError& e) {
    err << "error: " << e.what() << '\n';
    return kSolverError;
  }
}

}  // namespace bloch::cli
