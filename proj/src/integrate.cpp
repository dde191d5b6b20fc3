#include "bloch/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace bloch {

IntegrationError::IntegrationError(std::size_t step)
    : std::runtime_error("integration diverged at step " + std::to_string(step)), step_(step) {}

ControlInput ControlInterpolant::operator()(double t) const {
  const TimeGrid& grid = controls_->grid;
  const double s = (t - grid.t0()) / grid.step();
  const auto last = static_cast<double>(grid.steps() - 1);
  const double k = std::clamp(std::floor(s), 0.0, last);
  const double frac = s - k;
  const auto i = static_cast<std::size_t>(k);
  const ControlInput& a = (*controls_)[i];
  const ControlInput& b = (*controls_)[i + 1];
  if (frac <= 1e-9) {
    return a;
  }
  if (frac >= 1.0 - 1e-9) {
    return b;
  }
  return a + frac * (b - a);
}

namespace {

Vec3 rk4_step(const VectorField& f, double t, const Vec3& y, double h) {
  const Vec3 k1 = f(t, y);
  const Vec3 k2 = f(t + 0.5 * h, y + (0.5 * h) * k1);
  const Vec3 k3 = f(t + 0.5 * h, y + (0.5 * h) * k2);
  const Vec3 k4 = f(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory<Vec3> integrate_forward(const VectorField& field, const Vec3& y0, const TimeGrid& grid) {
  std::vector<Vec3> out(grid.nodes());
  out[0] = y0;
  const double h = grid.step();
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    out[k + 1] = rk4_step(field, grid.time(k), out[k], h);
    if (!is_finite(out[k + 1])) {
      throw IntegrationError(k);
    }
  }
  return {grid, std::move(out)};
}

Trajectory<Vec3> integrate_backward(const VectorField& field, const Vec3& y_final,
                                    const TimeGrid& grid) {
  std::vector<Vec3> out(grid.nodes());
  out[grid.steps()] = y_final;
  const double h = grid.step();
  for (std::size_t k = grid.steps(); k > 0; --k) {
    out[k - 1] = rk4_step(field, grid.time(k), out[k], -h);
    if (!is_finite(out[k - 1])) {
      throw IntegrationError(k - 1);
    }
  }
  return {grid, std::move(out)};
}

}  // namespace bloch
