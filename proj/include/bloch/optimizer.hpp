#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bloch/core.hpp"

namespace bloch {

/// Weight theta of the control energy in J = int |x - x_ref|^2 + theta |u|^2 dt.
struct CostWeights {
  double theta = 0.1;
  void validate() const;
};

/// Iteration controls of the forward-backward sweep.
struct SweepSettings {
  std::size_t max_iterations = 500;
  double cost_rel_tol = 1e-8;
  double control_abs_tol = 1e-6;
  double relaxation_init = 1.0;       ///< first trial step of every line search
  double relaxation_backtrack = 0.5;  ///< step shrink factor after a cost increase
  std::size_t history = 10;           ///< curvature pairs kept for the quasi-Newton update

  void validate() const;
};

/// Parameters of the reference trajectory (the N = 0, uncontrolled motion).
struct TargetParams {
  double gamma0 = 0.1;
  double omega_ref = 1.0;
};

struct TrackingProblem {
  BlochState x0;
  SystemParams system;
  CostWeights weights;
  TimeGrid grid;
  TargetParams target;

  void validate() const;
};

enum class SolverStatus {
  converged,
  max_iterations,
  backtracking_exhausted,
};

const char* to_string(SolverStatus status);

struct OptimalSolution {
  ControlTrajectory controls;
  StateTrajectory states;
  CostateTrajectory costates;
  std::vector<double> cost_history;  ///< initial cost followed by every accepted iterate
  bool converged = false;
  std::size_t iterations = 0;
  double stationarity_residual = 0.0;
  SolverStatus status = SolverStatus::max_iterations;

  double final_cost() const { return cost_history.back(); }
};

/// Propagation failed inside the solver; carries the iteration index.
class SolverError : public std::runtime_error {
 public:
  SolverError(std::size_t iteration, const std::string& what);
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Costate rate d(lambda)/dt = -2 (x - x_ref) - A(u)^T lambda.
Costate costate_rhs(const Costate& lam, const BlochState& x, const BlochState& x_target,
                    const ControlInput& u, const SystemParams& p);

/// Stationary point of the Pontryagin Hamiltonian in u:
/// Bx = (l3 x2 - l2 x3) / 2theta, Bz = (l2 x1 - l1 x2) / 2theta.
ControlInput control_from_costate(const BlochState& x, const Costate& lam, const CostWeights& w);

struct CostTerms {
  double tracking = 0.0;        ///< int |x - x_ref|^2 dt
  double control_energy = 0.0;  ///< int |u|^2 dt
  double total = 0.0;           ///< tracking + theta * control_energy
};

/// Trapezoidal quadrature of the tracking cost on the shared grid. Throws
/// std::invalid_argument if the trajectories live on different grids.
CostTerms cost_terms(const StateTrajectory& states, const StateTrajectory& targets,
                     const ControlTrajectory& controls, const CostWeights& w);

double evaluate_cost(const StateTrajectory& states, const StateTrajectory& targets,
                     const ControlTrajectory& controls, const CostWeights& w);

/// Reference trajectory sampled on the problem grid (time measured from t0).
StateTrajectory sample_targets(const TrackingProblem& problem);

/// The uncontrolled field u = (0, omega0) on every node.
ControlTrajectory free_controls(const TimeGrid& grid, const SystemParams& p);

StateTrajectory propagate_state(const TrackingProblem& problem, const ControlTrajectory& controls);

/// Backward costate pass from lambda(tf) = 0 along the given state trajectory.
CostateTrajectory propagate_costate(const TrackingProblem& problem, const StateTrajectory& states,
                                    const ControlTrajectory& controls);

/// Forward-backward sweep for the tracking problem. Starts from
/// `initial_controls`, or from free_controls() when none are given.
OptimalSolution solve_tracking(const TrackingProblem& problem, const SweepSettings& settings,
                               const std::optional<ControlTrajectory>& initial_controls = {});

/// max_k |u_k - control_from_costate(x_k, lambda_k)|_inf.
double stationarity_residual(const OptimalSolution& solution, const CostWeights& w);

enum class ControlComponent { bx, bz };

struct GradientCheck {
  double adjoint = 0.0;
  double finite_difference = 0.0;

  double relative_error() const;
};

/// Derivative of the discretised cost with respect to one control sample,
/// from the costate and from a central difference of width `step`.
GradientCheck adjoint_gradient_check(const TrackingProblem& problem,
                                     const ControlTrajectory& controls, std::size_t node,
                                     ControlComponent component, double step);

}  // namespace bloch
