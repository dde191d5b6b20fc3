#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bloch/core.hpp"

using namespace bloch;
using doctest::Approx;

namespace {

constexpr double pi = std::numbers::pi;

BlochState random_state(std::mt19937_64& rng, double scale = 1.5) {
  std::uniform_real_distribution<double> d(-scale, scale);
  return {d(rng), d(rng), d(rng)};
}

SystemParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> g(0.01, 0.5);
  std::uniform_real_distribution<double> n(0.0, 10.0);
  return {g(rng), n(rng), 1.0};
}

void check_close(const Vec3& a, const Vec3& b, double tol) {
  CHECK(std::abs(a.x1 - b.x1) <= tol);
  CHECK(std::abs(a.x2 - b.x2) <= tol);
  CHECK(std::abs(a.x3 - b.x3) <= tol);
}

}  // namespace

TEST_CASE("bloch_rhs worked examples") {
  SUBCASE("stationary point with zero transverse drive") {
    const Vec3 r = bloch_rhs({0, 0, -1.0 / 3.0}, {0, 0.7}, {0.1, 1.0, 1.0});
    CHECK(std::abs(r.x1) < 1e-15);
    CHECK(std::abs(r.x2) < 1e-15);
    CHECK(std::abs(r.x3) < 1e-15);
  }
  SUBCASE("x = (1,0,0), u = (0,1), N = 0") {
    const Vec3 r = bloch_rhs({1, 0, 0}, {0, 1}, {0.1, 0.0, 1.0});
    CHECK(r.x1 == Approx(-0.05));
    CHECK(r.x2 == Approx(-1.0));
    CHECK(r.x3 == Approx(-0.1));
  }
  SUBCASE("origin feels only the pump term") {
    const Vec3 r = bloch_rhs({0, 0, 0}, {0, 0}, {0.1, 0.0, 1.0});
    CHECK(r == Vec3{0, 0, -0.1});
  }
}

TEST_CASE("bloch_rhs agrees with the drift-matrix form") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const BlochState x = random_state(rng);
    const ControlInput u{std::uniform_real_distribution<double>(-2, 2)(rng),
                         std::uniform_real_distribution<double>(-2, 2)(rng)};
    const SystemParams p = random_params(rng);
    const auto a = drift_matrix(u, p);
    const Vec3 expected{dot(a[0], x), dot(a[1], x), dot(a[2], x) - p.gamma0};
    check_close(bloch_rhs(x, u, p), expected, 1e-13);
  }
}

TEST_CASE("bloch_rhs is affine in the state") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coeff(-2.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const BlochState x = random_state(rng);
    const BlochState y = random_state(rng);
    const ControlInput u{coeff(rng), coeff(rng)};
    const SystemParams p = random_params(rng);
    const double a = coeff(rng);
    const Vec3 lhs = bloch_rhs(a * x + (1.0 - a) * y, u, p);
    const Vec3 rhs = a * bloch_rhs(x, u, p) + (1.0 - a) * bloch_rhs(y, u, p);
    check_close(lhs, rhs, 1e-12);
  }
}

TEST_CASE("stationary state is a fixed point for every Bz") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> bz(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const SystemParams p = random_params(rng);
    check_close(bloch_rhs(stationary_state(p), {0.0, bz(rng)}, p), {}, 1e-15);
  }
}

TEST_CASE("stationary_state") {
  CHECK(stationary_state({0.1, 0.0, 1.0}) == BlochState{0, 0, -1});
  CHECK(stationary_state({0.1, 1.0, 1.0}).x3 == Approx(-1.0 / 3.0));
  CHECK(std::abs(stationary_state({0.1, 1e12, 1.0}).x3) < 1e-12);
}

TEST_CASE("free_evolution closed form") {
  const SystemParams p{0.1, 0.0, 1.0};
  SUBCASE("identity at t = 0") {
    const BlochState x0{0.3, -0.2, 0.9};
    check_close(free_evolution(x0, 0.0, p), x0, 1e-15);
  }
  SUBCASE("half period from (1,0,0)") {
    const BlochState x = free_evolution({1, 0, 0}, pi, p);
    CHECK(std::abs(x.x1 - -0.85464) < 1e-4);
    CHECK(std::abs(x.x2) < 1e-4);
    CHECK(std::abs(x.x3 - -0.26955) < 1e-4);
  }
  SUBCASE("relaxes to the ground-state inversion at N = 0") {
    check_close(free_evolution({0, 0, 1}, 500.0, p), {0, 0, -1}, 1e-12);
  }
}

TEST_CASE("free_evolution transverse decay law") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> time(0.0, 50.0);
  for (int i = 0; i < 200; ++i) {
    const BlochState x0 = random_state(rng);
    const SystemParams p = random_params(rng);
    const double t = time(rng);
    const BlochState x = free_evolution(x0, t, p);
    const double lhs = x.x1 * x.x1 + x.x2 * x.x2;
    const double rhs = (x0.x1 * x0.x1 + x0.x2 * x0.x2) * std::exp(-p.longitudinal_rate() * t);
    CHECK(std::abs(lhs - rhs) <= 1e-14 * std::max(1.0, rhs));
    CHECK(decoherence_factor(x) ==
          Approx(decoherence_factor(x0) * std::exp(-p.transverse_rate() * t)).epsilon(1e-12));
  }
}

TEST_CASE("free_evolution solves the uncontrolled ODE") {
  // Central differences of the closed form against the rate function; the
  // error must shrink as h^2.
  std::mt19937_64 rng(23);
  for (int i = 0; i < 20; ++i) {
    const BlochState x0 = random_state(rng);
    const SystemParams p = random_params(rng);
    const double t = std::uniform_real_distribution<double>(0.5, 20.0)(rng);
    const ControlInput u{0.0, p.omega0};
    auto fd_error = [&](double h) {
      const Vec3 d =
          (1.0 / (2.0 * h)) * (free_evolution(x0, t + h, p) - free_evolution(x0, t - h, p));
      return max_abs(d - bloch_rhs(free_evolution(x0, t, p), u, p));
    };
    const double e1 = fd_error(1e-2);
    const double e2 = fd_error(5e-3);
    CHECK(e1 < 1e-4);
    // A fully relaxed state leaves only rounding noise to compare.
    if (e1 > 1e-10) {
      CHECK(e2 < e1);
      CHECK(e1 / e2 == Approx(4.0).epsilon(0.05));
    }
  }
}

TEST_CASE("populations") {
  auto pop = populations({0, 0, -1});
  CHECK(pop.ground == 0.0);
  CHECK(pop.excited == 1.0);
  pop = populations({0.4, 0.1, 0.0});
  CHECK(pop.ground == 0.5);
  CHECK(pop.excited == 0.5);
  pop = populations(stationary_state({0.1, 1.0, 1.0}));
  CHECK(pop.ground == Approx(1.0 / 3.0));
  CHECK(pop.excited == Approx(2.0 / 3.0));

  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto p = populations(random_state(rng, 1e3));
    CHECK(p.ground + p.excited == Approx(1.0).epsilon(1e-15));
  }
  std::uniform_real_distribution<double> n(0.0, 50.0);
  for (int i = 0; i < 100; ++i) {
    const double nm = n(rng);
    const auto s = populations(stationary_state({0.1, nm, 1.0}));
    CHECK(s.ground == Approx(0.5 * (1.0 - 1.0 / (2.0 * nm + 1.0))).epsilon(1e-14));
    CHECK(s.excited == Approx(0.5 * (1.0 + 1.0 / (2.0 * nm + 1.0))).epsilon(1e-14));
  }
}

TEST_CASE("decoherence_factor") {
  const double r = std::sqrt(2.0) / 2.0;
  CHECK(decoherence_factor({r, r, 0.3}) == Approx(0.5));
  CHECK(decoherence_factor({0, 0, 0.8}) == 0.0);
  const BlochState x = free_evolution({r, r, 1.0}, 10.0, {0.1, 0.0, 1.0});
  CHECK(decoherence_factor(x) == Approx(0.5 * std::exp(-0.5)).epsilon(1e-12));
  CHECK(decoherence_factor(x) == Approx(0.30327).epsilon(1e-4));
}

TEST_CASE("target_trajectory") {
  const BlochState x0{0.5, -0.3, 0.7};
  check_close(target_trajectory(x0, 0.0, 0.1, 1.0), x0, 1e-15);
  CHECK(target_trajectory({0, 0, 1}, 10.0, 0.1, 1.0).x3 == Approx(2.0 * std::exp(-1.0) - 1.0));
  CHECK(target_trajectory({0, 0, 1}, 10.0, 0.1, 1.0).x3 == Approx(-0.26424).epsilon(1e-4));
  for (double t : {0.0, 0.7, 3.0, 12.5, 40.0}) {
    check_close(target_trajectory(x0, t, 0.1, 1.0), free_evolution(x0, t, {0.1, 0.0, 1.0}),
                1e-15);
  }
}

TEST_CASE("eigen_basis") {
  SUBCASE("diagonal Hamiltonian") {
    const EigenBasis e = eigen_basis({0, 1});
    CHECK(e.delta_e == 1.0);
    CHECK(e.eta == 0.0);
    CHECK(e.plus == std::array<double, 2>{1.0, 0.0});
    CHECK(e.minus[0] == 0.0);
    CHECK(e.minus[1] == 1.0);
  }
  SUBCASE("equal fields") {
    const EigenBasis e = eigen_basis({1, 1});
    CHECK(e.delta_e == Approx(std::sqrt(2.0)));
    CHECK(e.eta == Approx(pi / 4));
  }
  SUBCASE("pure transverse field") {
    const EigenBasis e = eigen_basis({1, 0});
    CHECK(e.eta == Approx(pi / 2));
    CHECK(e.plus[0] == Approx(std::cos(pi / 4)));
    CHECK(e.plus[1] == Approx(std::sin(pi / 4)));
  }
  SUBCASE("eigenvectors are orthonormal eigenvectors of H") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-3, 3);
    for (int i = 0; i < 50; ++i) {
      const ControlInput u{d(rng), d(rng)};
      const EigenBasis e = eigen_basis(u);
      // H = 1/2 [[bz, bx], [bx, -bz]]
      const double hp0 = 0.5 * (u.bz * e.plus[0] + u.bx * e.plus[1]);
      const double hp1 = 0.5 * (u.bx * e.plus[0] - u.bz * e.plus[1]);
      CHECK(hp0 == Approx(0.5 * e.delta_e * e.plus[0]).epsilon(1e-12).scale(1));
      CHECK(hp1 == Approx(0.5 * e.delta_e * e.plus[1]).epsilon(1e-12).scale(1));
      CHECK(e.plus[0] * e.minus[0] + e.plus[1] * e.minus[1] == Approx(0.0).scale(1));
    }
  }
  CHECK_THROWS_WITH_AS(eigen_basis({0, 0}), "degenerate Hamiltonian", std::domain_error);
}

TEST_CASE("mean_occupation_to_temperature") {
  CHECK(mean_occupation_to_temperature(10.0, 1.0) == Approx(8.0182e-11).epsilon(0.01));
  CHECK(mean_occupation_to_temperature(1.0, 1.0) ==
        Approx(1.0545887e-34 / (1.380662e-23 * std::log(2.0))));
  CHECK(mean_occupation_to_temperature(1.0, 2.0) ==
        Approx(2.0 * mean_occupation_to_temperature(1.0, 1.0)));
  CHECK(mean_occupation_to_temperature(0.0, 1.0) == 0.0);
  CHECK(mean_occupation_to_temperature(1e-6, 1.0) < 1e-12);
  CHECK_THROWS_AS(mean_occupation_to_temperature(-0.1, 1.0), std::domain_error);
}

TEST_CASE("type invariants") {
  CHECK_THROWS_AS(TimeGrid(1.0, 1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid(0.0, 1.0, 0), std::invalid_argument);
  const TimeGrid g(0.0, 20.0, 4000);
  CHECK(g.time(0) == 0.0);
  CHECK(g.time(4000) == 20.0);
  CHECK(g.time(1234) == 1234 * 20.0 / 4000);
  CHECK(g.nodes() == 4001);

  CHECK_THROWS_AS((Trajectory<ControlInput>(g, std::vector<ControlInput>(10))),
                  std::invalid_argument);

  CHECK_NOTHROW(SystemParams{0.1, 0.0, 1.0}.validate());
  CHECK_THROWS_WITH_AS(SystemParams({0.0, 0.0, 1.0}).validate(),
                       doctest::Contains("gamma0"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(SystemParams({0.1, -1.0, 1.0}).validate(),
                       doctest::Contains("n_mean"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(SystemParams({0.1, 0.0, 0.0}).validate(),
                       doctest::Contains("omega0"), std::invalid_argument);

  const double r = std::sqrt(2.0) / 2.0;
  CHECK(is_physical({0, 0, 1}));
  CHECK_FALSE(is_physical({r, r, 1.0}));
  CHECK_FALSE(is_physical({std::sqrt(2.0), std::sqrt(2.0), 1.0}));
}
