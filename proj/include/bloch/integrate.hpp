#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>

#include "bloch/core.hpp"

namespace bloch {

/// Rate function dy/dt = f(t, y). Fields that depend on sampled controls look
/// them up through ControlInterpolant so node and half-step evaluations agree
/// with the piecewise-linear control model.
using VectorField = std::function<Vec3(double t, const Vec3& y)>;

/// A non-finite value appeared while stepping.
class IntegrationError : public std::runtime_error {
 public:
  explicit IntegrationError(std::size_t step);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Piecewise-linear reading of node-sampled controls.
class ControlInterpolant {
 public:
  explicit ControlInterpolant(const ControlTrajectory& controls) : controls_(&controls) {}
  ControlInput operator()(double t) const;

 private:
  const ControlTrajectory* controls_;
};

/// Classical fixed-step RK4 from node 0 to node `steps`. Sample 0 is y0.
Trajectory<Vec3> integrate_forward(const VectorField& field, const Vec3& y0, const TimeGrid& grid);

/// Classical fixed-step RK4 from node `steps` down to node 0 with negative
/// step. The last sample is y_final.
Trajectory<Vec3> integrate_backward(const VectorField& field, const Vec3& y_final,
                                    const TimeGrid& grid);

}  // namespace bloch
