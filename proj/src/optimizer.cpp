#include "bloch/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "bloch/integrate.hpp"

namespace bloch {

void CostWeights::validate() const {
  if (!(std::isfinite(theta) && theta > 0.0)) {
    throw std::invalid_argument("theta must be positive, got " + std::to_string(theta));
  }
}

void SweepSettings::validate() const {
  if (max_iterations == 0) {
    throw std::invalid_argument("max_iterations must be positive");
  }
  if (!(cost_rel_tol > 0.0)) {
    throw std::invalid_argument("cost_rel_tol must be positive");
  }
  if (!(control_abs_tol > 0.0)) {
    throw std::invalid_argument("control_abs_tol must be positive");
  }
  if (!(relaxation_init > 0.0 && relaxation_init <= 1.0)) {
    throw std::invalid_argument("relaxation_init must lie in (0, 1]");
  }
  if (!(relaxation_backtrack > 0.0 && relaxation_backtrack < 1.0)) {
    throw std::invalid_argument("relaxation_backtrack must lie in (0, 1)");
  }
}

void TrackingProblem::validate() const {
  if (!is_finite(x0)) {
    throw std::invalid_argument("initial_state must be finite");
  }
  system.validate();
  weights.validate();
  if (!(std::isfinite(target.gamma0) && target.gamma0 > 0.0)) {
    throw std::invalid_argument("target gamma0 must be positive");
  }
  if (!std::isfinite(target.omega_ref)) {
    throw std::invalid_argument("target omega_ref must be finite");
  }
}

const char* to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::converged:
      return "converged";
    case SolverStatus::max_iterations:
      return "max_iterations";
    case SolverStatus::backtracking_exhausted:
      return "backtracking_exhausted";
  }
  return "unknown";
}

SolverError::SolverError(std::size_t iteration, const std::string& what)
    : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what),
      iteration_(iteration) {}

Costate costate_rhs(const Costate& lam, const BlochState& x, const BlochState& x_target,
                    const ControlInput& u, const SystemParams& p) {
  const double gt = p.transverse_rate();
  const double gl = p.longitudinal_rate();
  return {-2.0 * (x.x1 - x_target.x1) + gt * lam.x1 + u.bz * lam.x2,
          -2.0 * (x.x2 - x_target.x2) - u.bz * lam.x1 + gt * lam.x2 + u.bx * lam.x3,
          -2.0 * (x.x3 - x_target.x3) - u.bx * lam.x2 + gl * lam.x3};
}

ControlInput control_from_costate(const BlochState& x, const Costate& lam, const CostWeights& w) {
  const double scale = 1.0 / (2.0 * w.theta);
  return {scale * (lam.x3 * x.x2 - lam.x2 * x.x3), scale * (lam.x2 * x.x1 - lam.x1 * x.x2)};
}

CostTerms cost_terms(const StateTrajectory& states, const StateTrajectory& targets,
                     const ControlTrajectory& controls, const CostWeights& w) {
  if (!(states.grid == targets.grid) || !(states.grid == controls.grid)) {
    throw std::invalid_argument("cost evaluation requires trajectories on one grid");
  }
  const TimeGrid& grid = states.grid;
  CostTerms terms;
  for (std::size_t k = 0; k < grid.nodes(); ++k) {
    const double wk = grid.quadrature_weight(k);
    const Vec3 e = states[k] - targets[k];
    const ControlInput& u = controls[k];
    terms.tracking += wk * dot(e, e);
    terms.control_energy += wk * (u.bx * u.bx + u.bz * u.bz);
  }
  terms.total = terms.tracking + w.theta * terms.control_energy;
  return terms;
}

double evaluate_cost(const StateTrajectory& states, const StateTrajectory& targets,
                     const ControlTrajectory& controls, const CostWeights& w) {
  return cost_terms(states, targets, controls, w).total;
}

StateTrajectory sample_targets(const TrackingProblem& problem) {
  const TimeGrid& grid = problem.grid;
  std::vector<BlochState> out(grid.nodes());
  for (std::size_t k = 0; k < grid.nodes(); ++k) {
    out[k] = target_trajectory(problem.x0, grid.time(k) - grid.t0(), problem.target.gamma0,
                               problem.target.omega_ref);
  }
  return {grid, std::move(out)};
}

ControlTrajectory free_controls(const TimeGrid& grid, const SystemParams& p) {
  return {grid, ControlInput{0.0, p.omega0}};
}

StateTrajectory propagate_state(const TrackingProblem& problem, const ControlTrajectory& controls) {
  const ControlInterpolant u(controls);
  const SystemParams& p = problem.system;
  return integrate_forward(
      [&](double t, const Vec3& x) { return bloch_rhs(x, u(t), p); }, problem.x0, problem.grid);
}

namespace {

// Cubic Hermite reading of a state trajectory using the node rates, so that
// half-step evaluations in the costate pass keep fourth-order accuracy.
class HermiteState {
 public:
  HermiteState(const StateTrajectory& states, const ControlTrajectory& controls,
               const SystemParams& p)
      : states_(states), rates_(states.size()) {
    for (std::size_t k = 0; k < states.size(); ++k) {
      rates_[k] = bloch_rhs(states[k], controls[k], p);
    }
  }

  BlochState operator()(double t) const {
    const TimeGrid& grid = states_.grid;
    const double h = grid.step();
    const double s = (t - grid.t0()) / h;
    const double k = std::clamp(std::floor(s), 0.0, static_cast<double>(grid.steps() - 1));
    const double f = s - k;
    const auto i = static_cast<std::size_t>(k);
    if (f <= 1e-9) {
      return states_[i];
    }
    if (f >= 1.0 - 1e-9) {
      return states_[i + 1];
    }
    const double f2 = f * f;
    const double f3 = f2 * f;
    const double h00 = 2.0 * f3 - 3.0 * f2 + 1.0;
    const double h10 = f3 - 2.0 * f2 + f;
    const double h01 = -2.0 * f3 + 3.0 * f2;
    const double h11 = f3 - f2;
    return h00 * states_[i] + (h10 * h) * rates_[i] + h01 * states_[i + 1] +
           (h11 * h) * rates_[i + 1];
  }

 private:
  const StateTrajectory& states_;
  std::vector<Vec3> rates_;
};

}  // namespace

CostateTrajectory propagate_costate(const TrackingProblem& problem, const StateTrajectory& states,
                                    const ControlTrajectory& controls) {
  const ControlInterpolant u(controls);
  const HermiteState x(states, controls, problem.system);
  const SystemParams& p = problem.system;
  const TargetParams& tp = problem.target;
  const double t0 = problem.grid.t0();
  return integrate_backward(
      [&](double t, const Vec3& lam) {
        const BlochState ref = target_trajectory(problem.x0, t - t0, tp.gamma0, tp.omega_ref);
        return costate_rhs(lam, x(t), ref, u(t), p);
      },
      Costate{}, problem.grid);
}

namespace {

using ControlSamples = std::vector<ControlInput>;

// Inner product weighted by the trapezoidal rule, so that the pointwise
// quantity 2 theta (u - u_cand) is the gradient of the discretised cost.
double weighted_dot(const TimeGrid& grid, const ControlSamples& a, const ControlSamples& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sum += grid.quadrature_weight(k) * (a[k].bx * b[k].bx + a[k].bz * b[k].bz);
  }
  return sum;
}

void axpy(double a, const ControlSamples& x, ControlSamples& y) {
  for (std::size_t k = 0; k < y.size(); ++k) {
    y[k] = y[k] + a * x[k];
  }
}

ControlSamples difference(const ControlSamples& a, const ControlSamples& b) {
  ControlSamples out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    out[k] = a[k] - b[k];
  }
  return out;
}

double max_abs_difference(const ControlSamples& a, const ControlSamples& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    m = std::max(m, max_abs(a[k] - b[k]));
  }
  return m;
}

struct CurvaturePair {
  ControlSamples s;
  ControlSamples y;
  double rho;
};

// Candidate controls from the stationarity condition at every node.
ControlSamples candidate_controls(const StateTrajectory& states, const CostateTrajectory& costates,
                                  const CostWeights& w) {
  ControlSamples out(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    out[k] = control_from_costate(states[k], costates[k], w);
  }
  return out;
}

// Two-loop recursion. Without curvature pairs this returns the relaxed
// update direction u_cand - u = -gradient / (2 theta).
ControlSamples search_direction(const TimeGrid& grid, const ControlSamples& gradient,
                                const std::deque<CurvaturePair>& pairs, double theta) {
  ControlSamples q = gradient;
  std::vector<double> alpha(pairs.size());
  for (std::size_t i = pairs.size(); i-- > 0;) {
    alpha[i] = pairs[i].rho * weighted_dot(grid, pairs[i].s, q);
    axpy(-alpha[i], pairs[i].y, q);
  }
  double scale = 1.0 / (2.0 * theta);
  if (!pairs.empty()) {
    const CurvaturePair& last = pairs.back();
    scale = 1.0 / (last.rho * weighted_dot(grid, last.y, last.y));
  }
  for (auto& v : q) {
    v = scale * v;
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double beta = pairs[i].rho * weighted_dot(grid, pairs[i].y, q);
    axpy(alpha[i] - beta, pairs[i].s, q);
  }
  for (auto& v : q) {
    v = -1.0 * v;
  }
  return q;
}

}  // namespace

OptimalSolution solve_tracking(const TrackingProblem& problem, const SweepSettings& settings,
                               const std::optional<ControlTrajectory>& initial_controls) {
  problem.validate();
  settings.validate();
  const TimeGrid& grid = problem.grid;
  const CostWeights& w = problem.weights;
  const double two_theta = 2.0 * w.theta;

  ControlTrajectory controls =
      initial_controls ? *initial_controls : free_controls(grid, problem.system);
  if (!(controls.grid == grid)) {
    throw std::invalid_argument("initial controls must live on the problem grid");
  }
  const StateTrajectory targets = sample_targets(problem);

  auto forward = [&](const ControlTrajectory& u, std::size_t iteration) {
    try {
      return propagate_state(problem, u);
    } catch (const IntegrationError& e) {
      throw SolverError(iteration, e.what());
    }
  };
  auto backward = [&](const StateTrajectory& x, const ControlTrajectory& u,
                      std::size_t iteration) {
    try {
      return propagate_costate(problem, x, u);
    } catch (const IntegrationError& e) {
      throw SolverError(iteration, e.what());
    }
  };

  StateTrajectory states = forward(controls, 0);
  CostateTrajectory costates = backward(states, controls, 0);
  double cost = evaluate_cost(states, targets, controls, w);

  OptimalSolution sol{controls, states, costates, {cost}, false, 0, 0.0,
                      SolverStatus::max_iterations};

  ControlSamples candidate = candidate_controls(states, costates, w);
  ControlSamples gradient = difference(controls.samples, candidate);
  for (auto& g : gradient) {
    g = two_theta * g;
  }
  std::deque<CurvaturePair> pairs;

  for (std::size_t it = 1; it <= settings.max_iterations; ++it) {
    ControlSamples direction = search_direction(grid, gradient, pairs, w.theta);
    if (weighted_dot(grid, direction, gradient) >= 0.0) {
      pairs.clear();
      direction = difference(candidate, controls.samples);
    }

    // Monotone acceptance: shrink the step until the cost does not increase.
    // A failed quasi-Newton direction falls back to the plain relaxed update
    // once before giving up.
    double step = settings.relaxation_init;
    bool accepted = false;
    bool fallback_used = pairs.empty();
    ControlTrajectory trial = controls;
    StateTrajectory trial_states = states;
    double trial_cost = cost;
    while (true) {
      for (std::size_t k = 0; k < trial.size(); ++k) {
        trial[k] = controls[k] + step * direction[k];
      }
      trial_states = forward(trial, it);
      trial_cost = evaluate_cost(trial_states, targets, trial, w);
      if (trial_cost <= cost) {
        accepted = true;
        break;
      }
      step *= settings.relaxation_backtrack;
      if (step < 1e-12) {
        if (fallback_used) {
          break;
        }
        fallback_used = true;
        pairs.clear();
        direction = difference(candidate, controls.samples);
        step = settings.relaxation_init;
      }
    }
    if (!accepted) {
      sol.status = SolverStatus::backtracking_exhausted;
      break;
    }

    const double control_change = max_abs_difference(trial.samples, controls.samples);
    const double cost_change = std::abs(cost - trial_cost) / std::max(std::abs(cost), 1e-300);

    const ControlSamples s = difference(trial.samples, controls.samples);
    controls = std::move(trial);
    states = std::move(trial_states);
    cost = trial_cost;
    costates = backward(states, controls, it);
    candidate = candidate_controls(states, costates, w);
    ControlSamples next_gradient = difference(controls.samples, candidate);
    for (auto& g : next_gradient) {
      g = two_theta * g;
    }
    const ControlSamples y = difference(next_gradient, gradient);
    const double sy = weighted_dot(grid, s, y);
    if (sy > 1e-12 * std::sqrt(weighted_dot(grid, s, s) * weighted_dot(grid, y, y))) {
      pairs.push_back({s, y, 1.0 / sy});
      if (pairs.size() > settings.history) {
        pairs.pop_front();
      }
    }
    gradient = std::move(next_gradient);

    sol.cost_history.push_back(cost);
    sol.iterations = it;
    // The step-size tests alone fire early once the cost flattens out; a
    // converged solution must also satisfy the stationarity condition.
    const double residual = max_abs_difference(controls.samples, candidate);
    const bool stalled =
        cost_change < settings.cost_rel_tol || control_change < settings.control_abs_tol;
    if (stalled && residual < 10.0 * settings.control_abs_tol) {
      sol.converged = true;
      sol.status = SolverStatus::converged;
      break;
    }
  }

  sol.controls = std::move(controls);
  sol.states = std::move(states);
  sol.costates = std::move(costates);
  sol.stationarity_residual = stationarity_residual(sol, w);
  return sol;
}

double stationarity_residual(const OptimalSolution& solution, const CostWeights& w) {
  double r = 0.0;
  for (std::size_t k = 0; k < solution.controls.size(); ++k) {
    const ControlInput u = control_from_costate(solution.states[k], solution.costates[k], w);
    r = std::max(r, max_abs(solution.controls[k] - u));
  }
  return r;
}

double GradientCheck::relative_error() const {
  return std::abs(adjoint - finite_difference) / std::max(std::abs(finite_difference), 1e-8);
}

GradientCheck adjoint_gradient_check(const TrackingProblem& problem,
                                     const ControlTrajectory& controls, std::size_t node,
                                     ControlComponent component, double step) {
  const TimeGrid& grid = problem.grid;
  if (node == 0 || node >= grid.steps()) {
    throw std::invalid_argument("gradient check node must be interior to the grid");
  }
  if (!(step > 0.0)) {
    throw std::invalid_argument("finite-difference step must be positive");
  }
  const CostWeights& w = problem.weights;
  const StateTrajectory targets = sample_targets(problem);
  const StateTrajectory states = propagate_state(problem, controls);
  const CostateTrajectory costates = propagate_costate(problem, states, controls);

  const BlochState& x = states[node];
  const Costate& lam = costates[node];
  const ControlInput& u = controls[node];
  const double weight = grid.quadrature_weight(node);
  const bool is_bx = component == ControlComponent::bx;

  GradientCheck out;
  const double numerator = is_bx ? lam.x3 * x.x2 - lam.x2 * x.x3 : lam.x2 * x.x1 - lam.x1 * x.x2;
  out.adjoint = weight * (2.0 * w.theta * (is_bx ? u.bx : u.bz) - numerator);

  auto perturbed_cost = [&](double delta) {
    ControlTrajectory c = controls;
    (is_bx ? c[node].bx : c[node].bz) += delta;
    return evaluate_cost(propagate_state(problem, c), targets, c, w);
  };
  out.finite_difference = (perturbed_cost(step) - perturbed_cost(-step)) / (2.0 * step);
  return out;
}

}  // namespace bloch
