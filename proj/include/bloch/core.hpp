#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bloch {

/// Three-component real vector. Used for Bloch states, their rates, and
/// costates.
struct Vec3 {
  double x1 = 0.0;
  double x2 = 0.0;
  double x3 = 0.0;

  constexpr double operator[](std::size_t i) const {
    return i == 0 ? x1 : (i == 1 ? x2 : x3);
  }

  constexpr Vec3& operator+=(const Vec3& o) {
    x1 += o.x1;
    x2 += o.x2;
    x3 += o.x3;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x1 -= o.x1;
    x2 -= o.x2;
    x3 -= o.x3;
    return *this;
  }
  constexpr Vec3& operator*=(double a) {
    x1 *= a;
    x2 *= a;
    x3 *= a;
    return *this;
  }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x1, -a.x2, -a.x3}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) {
  return a.x1 * b.x1 + a.x2 * b.x2 + a.x3 * b.x3;
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double max_abs(const Vec3& a) {
  return std::max({std::abs(a.x1), std::abs(a.x2), std::abs(a.x3)});
}
inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x1) && std::isfinite(a.x2) && std::isfinite(a.x3);
}

/// Bloch vector (x1, x2, x3): x1, x2 carry the coherences, x3 = rho00 - rho11.
/// Vectors outside the unit ball are representable; see is_physical().
using BlochState = Vec3;
/// Lagrange multiplier of the tracking problem.
using Costate = Vec3;

inline bool is_physical(const BlochState& x) { return dot(x, x) <= 1.0; }

/// External fields u = (Bx, Bz), in units of omega0.
struct ControlInput {
  double bx = 0.0;
  double bz = 0.0;

  friend constexpr ControlInput operator+(ControlInput a, const ControlInput& b) {
    return {a.bx + b.bx, a.bz + b.bz};
  }
  friend constexpr ControlInput operator-(ControlInput a, const ControlInput& b) {
    return {a.bx - b.bx, a.bz - b.bz};
  }
  friend constexpr ControlInput operator*(double s, ControlInput a) {
    return {s * a.bx, s * a.bz};
  }
  friend constexpr bool operator==(const ControlInput&, const ControlInput&) = default;
};

inline double max_abs(const ControlInput& u) {
  return std::max(std::abs(u.bx), std::abs(u.bz));
}

/// Physical constants of the dissipative two-level system.
struct SystemParams {
  double gamma0 = 0.1;  ///< spontaneous emission rate
  double n_mean = 0.0;  ///< mean thermal occupation N of the reservoir mode
  double omega0 = 1.0;  ///< transition frequency, the unit of frequency

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Transverse relaxation rate (2N+1) gamma0 / 2.
  double transverse_rate() const { return 0.5 * (2.0 * n_mean + 1.0) * gamma0; }
  /// Longitudinal relaxation rate (2N+1) gamma0.
  double longitudinal_rate() const { return (2.0 * n_mean + 1.0) * gamma0; }
};

/// Uniform discretisation of [t0, tf] into `steps` intervals.
class TimeGrid {
 public:
  TimeGrid(double t0, double tf, std::size_t steps);

  double t0() const { return t0_; }
  double tf() const { return tf_; }
  std::size_t steps() const { return steps_; }
  std::size_t nodes() const { return steps_ + 1; }
  double step() const { return (tf_ - t0_) / static_cast<double>(steps_); }
  double time(std::size_t k) const {
    return t0_ + static_cast<double>(k) * (tf_ - t0_) / static_cast<double>(steps_);
  }
  /// Composite trapezoidal weight of node k.
  double quadrature_weight(std::size_t k) const {
    return (k == 0 || k == steps_) ? 0.5 * step() : step();
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double t0_;
  double tf_;
  std::size_t steps_;
};

/// Samples on every node of a TimeGrid.
template <typename Sample>
struct Trajectory {
  TimeGrid grid;
  std::vector<Sample> samples;

  Trajectory(TimeGrid g, std::vector<Sample> s) : grid(g), samples(std::move(s)) {
    if (samples.size() != grid.nodes()) {
      throw std::invalid_argument("trajectory sample count does not match grid node count");
    }
  }
  Trajectory(TimeGrid g, const Sample& fill) : grid(g), samples(g.nodes(), fill) {}

  std::size_t size() const { return samples.size(); }
  const Sample& operator[](std::size_t k) const { return samples[k]; }
  Sample& operator[](std::size_t k) { return samples[k]; }
  const Sample& front() const { return samples.front(); }
  const Sample& back() const { return samples.back(); }
};

using StateTrajectory = Trajectory<BlochState>;
using CostateTrajectory = Trajectory<Costate>;
using ControlTrajectory = Trajectory<ControlInput>;

/// Right-hand side of the controlled Bloch equations, dx/dt = A(u) x + b.
BlochState bloch_rhs(const BlochState& x, const ControlInput& u, const SystemParams& p);

/// Rows of the drift matrix A(u); b = (0, 0, -gamma0).
std::array<Vec3, 3> drift_matrix(const ControlInput& u, const SystemParams& p);

/// Closed-form solution with Bx = 0, Bz = omega0, evaluated at time t >= 0.
BlochState free_evolution(const BlochState& x0, double t, const SystemParams& p);

/// Fixed point (0, 0, -1/(2N+1)) of the uncontrolled dynamics.
BlochState stationary_state(const SystemParams& p);

struct Populations {
  double ground = 0.0;   ///< p_g = rho00
  double excited = 0.0;  ///< p_e = rho11
};

Populations populations(const BlochState& x);

/// Lambda = |(x1, x2)| / 2.
double decoherence_factor(const BlochState& x);

/// Zero-temperature, uncontrolled reference: transverse components rotate at
/// omega_ref and decay at gamma0/2; x3 relaxes towards -1 at rate gamma0.
BlochState target_trajectory(const BlochState& x0, double t, double gamma0, double omega_ref);

/// Instantaneous eigenbasis of H_C = (Bz sigma_z + Bx sigma_x) / 2.
struct EigenBasis {
  double delta_e = 0.0;  ///< sqrt(Bx^2 + Bz^2)
  double eta = 0.0;      ///< mixing angle atan2(Bx, Bz)
  std::array<double, 2> plus{};   ///< coefficients of |lambda+> on (|0>, |1>)
  std::array<double, 2> minus{};  ///< coefficients of |lambda-> on (|0>, |1>)
};

/// Throws std::domain_error("degenerate Hamiltonian") for a zero field.
EigenBasis eigen_basis(const ControlInput& u);

namespace constants {
inline constexpr double boltzmann = 1.380662e-23;     // J/K
inline constexpr double reduced_planck = 1.0545887e-34;  // J s
}  // namespace constants

/// Temperature (K) at which the reservoir mode of angular frequency omega0 has
/// mean occupation n_mean. Returns 0 for n_mean == 0; throws std::domain_error
/// for negative occupation.
double mean_occupation_to_temperature(double n_mean, double omega0);

}  // namespace bloch
