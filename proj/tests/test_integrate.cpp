#include <doctest.h>

#include <cmath>
#include <limits>

#include "bloch/integrate.hpp"

using namespace bloch;

namespace {

const SystemParams kFree{0.1, 0.0, 1.0};

VectorField free_field(const SystemParams& p) {
  return [p](double, const Vec3& x) { return bloch_rhs(x, {0.0, p.omega0}, p); };
}

// Largest node-wise deviation from the closed-form free evolution.
double max_error_vs_closed_form(const Trajectory<Vec3>& traj, const BlochState& x0,
                                const SystemParams& p) {
  double err = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    err = std::max(err, max_abs(traj[k] - free_evolution(x0, traj.grid.time(k), p)));
  }
  return err;
}

}  // namespace

TEST_CASE("forward RK4 matches the closed-form free evolution") {
  const BlochState x0{1, 0, 0};
  const TimeGrid grid(0.0, 10.0, 10000);
  const auto traj = integrate_forward(free_field(kFree), x0, grid);
  CHECK(traj.size() == grid.nodes());
  CHECK(traj[0] == x0);
  CHECK(max_error_vs_closed_form(traj, x0, kFree) < 1e-8);
}

TEST_CASE("zero field gives a constant trajectory") {
  const Vec3 y0{0.2, -0.4, 0.9};
  const TimeGrid grid(0.0, 3.0, 17);
  const auto zero = [](double, const Vec3&) { return Vec3{}; };
  const auto fwd = integrate_forward(zero, y0, grid);
  for (const auto& y : fwd.samples) {
    CHECK(y == y0);
  }
  const auto bwd = integrate_backward(zero, Vec3{}, grid);
  for (const auto& y : bwd.samples) {
    CHECK(y == Vec3{});
  }
}

TEST_CASE("RK4 convergence order") {
  const BlochState x0{0.6, -0.5, 0.8};
  const SystemParams p{0.1, 0.5, 1.0};
  double previous = 0.0;
  for (std::size_t steps : {100u, 200u, 400u}) {
    const double err =
        max_error_vs_closed_form(integrate_forward(free_field(p), x0, {0.0, 10.0, steps}), x0, p);
    if (previous > 0.0) {
      const double ratio = previous / err;
      CHECK(ratio > 12.0);
      CHECK(ratio < 20.0);
      CHECK(std::log2(ratio) >= 3.5);
    }
    previous = err;
  }
}

TEST_CASE("backward integration inverts forward integration") {
  const BlochState x0{0.7, 0.7, 1.0};
  const TimeGrid grid(0.0, 10.0, 10000);
  const auto fwd = integrate_forward(free_field(kFree), x0, grid);
  const auto bwd = integrate_backward(free_field(kFree), fwd.back(), grid);
  CHECK(bwd.back() == fwd.back());
  CHECK(max_abs(bwd.front() - x0) < 1e-8);
  // Forward tolerance 1e-8; the round trip stays within ten times that.
  for (std::size_t k = 0; k < grid.nodes(); k += 250) {
    CHECK(max_abs(bwd[k] - fwd[k]) < 1e-7);
  }
}

TEST_CASE("backward endpoint is copied exactly") {
  const Vec3 terminal{0.1 + 0.2, 1.0 / 3.0, -7.25};
  const auto traj = integrate_backward(free_field(kFree), terminal, {0.0, 1.0, 9});
  CHECK(traj.back() == terminal);
}

TEST_CASE("integration is deterministic") {
  const TimeGrid grid(0.0, 20.0, 4000);
  const BlochState x0{0.3, 0.1, -0.2};
  const SystemParams p{0.1, 2.0, 1.0};
  const auto a = integrate_forward(free_field(p), x0, grid);
  const auto b = integrate_forward(free_field(p), x0, grid);
  CHECK(a.samples == b.samples);
}

TEST_CASE("divergence reports the failing step") {
  const TimeGrid grid(0.0, 1.0, 10);
  const auto field = [](double t, const Vec3& y) {
    if (t > 0.45) {
      return Vec3{std::numeric_limits<double>::infinity(), 0.0, 0.0};
    }
    return y;
  };
  try {
    (void)integrate_forward(field, {1, 0, 0}, grid);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.step() == 4);
    CHECK(std::string(e.what()).find("integration diverged") != std::string::npos);
  }
  CHECK_THROWS_AS(integrate_backward(field, {1, 0, 0}, grid), IntegrationError);
}

TEST_CASE("control interpolation is piecewise linear") {
  const TimeGrid grid(1.0, 3.0, 4);
  const ControlTrajectory u(grid, {{0, 0}, {1, 2}, {3, 2}, {3, -2}, {0, 0}});
  const ControlInterpolant at(u);
  CHECK(at(1.0) == ControlInput{0, 0});
  CHECK(at(1.5) == ControlInput{1, 2});
  CHECK(at(1.75).bx == doctest::Approx(2.0));
  CHECK(at(2.25).bz == doctest::Approx(0.0));
  CHECK(at(3.0) == ControlInput{0, 0});
}
