#include "bloch/core.hpp"

#include <cmath>
#include <string>

namespace bloch {

void SystemParams::validate() const {
  if (!(std::isfinite(gamma0) && gamma0 > 0.0)) {
    throw std::invalid_argument("gamma0 must be positive, got " + std::to_string(gamma0));
  }
  if (!(std::isfinite(n_mean) && n_mean >= 0.0)) {
    throw std::invalid_argument("n_mean must be non-negative, got " + std::to_string(n_mean));
  }
  if (!(std::isfinite(omega0) && omega0 > 0.0)) {
    throw std::invalid_argument("omega0 must be positive, got " + std::to_string(omega0));
  }
}

TimeGrid::TimeGrid(double t0, double tf, std::size_t steps) : t0_(t0), tf_(tf), steps_(steps) {
  if (!std::isfinite(t0) || !std::isfinite(tf) || !(tf > t0)) {
    throw std::invalid_argument("time grid requires finite tf > t0");
  }
  if (steps == 0) {
    throw std::invalid_argument("time grid requires steps >= 1");
  }
}

BlochState bloch_rhs(const BlochState& x, const ControlInput& u, const SystemParams& p) {
  const double gt = p.transverse_rate();
  const double gl = p.longitudinal_rate();
  return {-gt * x.x1 + u.bz * x.x2,
          -u.bz * x.x1 - gt * x.x2 + u.bx * x.x3,
          -u.bx * x.x2 - gl * x.x3 - p.gamma0};
}

std::array<Vec3, 3> drift_matrix(const ControlInput& u, const SystemParams& p) {
  const double gt = p.transverse_rate();
  return {Vec3{-gt, u.bz, 0.0},
          Vec3{-u.bz, -gt, u.bx},
          Vec3{0.0, -u.bx, -p.longitudinal_rate()}};
}

BlochState free_evolution(const BlochState& x0, double t, const SystemParams& p) {
  const double decay = std::exp(-p.transverse_rate() * t);
  const double s = std::sin(p.omega0 * t);
  const double c = std::cos(p.omega0 * t);
  const double x3_inf = 1.0 / (2.0 * p.n_mean + 1.0);
  return {decay * (x0.x2 * s + x0.x1 * c),
          decay * (x0.x2 * c - x0.x1 * s),
          std::exp(-p.longitudinal_rate() * t) * (x3_inf + x0.x3) - x3_inf};
}

BlochState stationary_state(const SystemParams& p) {
  return {0.0, 0.0, -1.0 / (2.0 * p.n_mean + 1.0)};
}

Populations populations(const BlochState& x) {
  return {0.5 * (1.0 + x.x3), 0.5 * (1.0 - x.x3)};
}

double decoherence_factor(const BlochState& x) { return 0.5 * std::hypot(x.x1, x.x2); }

BlochState target_trajectory(const BlochState& x0, double t, double gamma0, double omega_ref) {
  const double decay = std::exp(-0.5 * gamma0 * t);
  const double s = std::sin(omega_ref * t);
  const double c = std::cos(omega_ref * t);
  return {decay * (x0.x2 * s + x0.x1 * c),
          decay * (x0.x2 * c - x0.x1 * s),
          std::exp(-gamma0 * t) * (x0.x3 + 1.0) - 1.0};
}

EigenBasis eigen_basis(const ControlInput& u) {
  if (u.bx == 0.0 && u.bz == 0.0) {
    throw std::domain_error("degenerate Hamiltonian");
  }
  EigenBasis e;
  e.delta_e = std::hypot(u.bx, u.bz);
  e.eta = std::atan2(u.bx, u.bz);
  const double c = std::cos(0.5 * e.eta);
  const double s = std::sin(0.5 * e.eta);
  e.plus = {c, s};
  e.minus = {-s, c};
  return e;
}

double mean_occupation_to_temperature(double n_mean, double omega0) {
  if (std::isnan(n_mean) || n_mean < 0.0) {
    throw std::domain_error("mean occupation must be non-negative");
  }
  if (n_mean == 0.0) {
    return 0.0;
  }
  return constants::reduced_planck * omega0 /
         (constants::boltzmann * std::log1p(1.0 / n_mean));
}

}  // namespace bloch
