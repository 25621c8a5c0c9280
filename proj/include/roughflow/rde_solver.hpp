#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "roughflow/driver.hpp"
#include "roughflow/geometry.hpp"
#include "roughflow/matrix.hpp"
#include "roughflow/rough_path.hpp"
#include "roughflow/torus_field.hpp"
#include "roughflow/variation.hpp"

namespace roughflow {

/// Time-dependent velocity field u(t, x) on 𝕋², evaluated in batches.
class Drift {
 public:
  using Batch = std::function<void(double, std::span<const Vec2>, std::span<Vec2>)>;

  /// The zero field.
  Drift();
  Drift(Batch batch, double sup_norm, double log_lipschitz);

  static Drift zero() { return Drift(); }
  static Drift constant(Vec2 c);
  static Drift analytic(std::function<Vec2(double, Vec2)> f, double sup_norm, double log_lipschitz);
  /// Steady field interpolated from grid samples; the log-Lipschitz constant
  /// is estimated on sampled pairs.
  static Drift grid(const VelocityGrid& u, InterpolationMethod method = InterpolationMethod::CubicBSpline);
  /// Steady grid field convolved with the bump of radius eta.
  static Drift mollified_grid(const VelocityGrid& u, double eta,
                              InterpolationMethod method = InterpolationMethod::CubicBSpline);

  void evaluate(double t, std::span<const Vec2> x, std::span<Vec2> out) const;
  Vec2 operator()(double t, Vec2 x) const;

  double sup_norm() const noexcept { return sup_norm_; }
  double log_lipschitz() const noexcept { return log_lipschitz_; }
  bool is_zero() const noexcept { return zero_; }

  /// u + delta.
  Drift shifted(Vec2 delta) const;
  /// s -> -u(pivot - s, ·), the drift of the time-reversed equation.
  Drift time_reversed(double pivot) const;

 private:
  Batch batch_;
  double sup_norm_ = 0.0;
  double log_lipschitz_ = 0.0;
  bool zero_ = true;
};

/// max |u(t,x) - u(t,y)| / γ(d(x,y)) over `samples` random pairs at time t,
/// half of them at distances below 0.1.
double estimate_log_lipschitz(const Drift& u, double t, std::size_t samples = 4000,
                              std::uint64_t seed = 11);

/// Regular lattice (2πi/n, 2πj/n), i-major.
std::vector<Vec2> lattice(std::size_t per_side);

/// Flow RDE dφ = u(t, φ) dt + ε σ_j(φ) dZ^j on the grid of the driver's
/// rough path (that grid is the step grid).
struct FlowProblem {
  Drift drift;
  DriverPair driver;
  std::vector<Vec2> initial;
  std::vector<double> weights;  ///< carried values; empty means all ones
  std::size_t store_every = 1;  ///< snapshot stride in steps (final time always stored)
};

struct ParticleFlow {
  enum class Direction { Forward, Backward };

  std::vector<Vec2> labels;
  std::vector<double> weights;
  std::vector<std::size_t> nodes;  ///< step-grid node of each snapshot
  std::vector<double> times;
  std::vector<std::vector<Vec2>> positions;  ///< wrapped to [0, 2π)²
  Direction direction = Direction::Forward;

  std::size_t snapshots() const noexcept { return times.size(); }
  const std::vector<Vec2>& final_positions() const { return positions.back(); }
};

/// One Davie step over segment k of the driver grid:
/// x ← x + u Δt + ε σ_j Z^j + ε² (Dσ_j σ_i) 𝕫^{ij}, wrapped.
/// Throws StepGuardViolation when Σ_j ‖σ_j‖_∞ |Z^j| exceeds π.
void davie_step(std::span<Vec2> positions, std::span<const Vec2> drift_values, std::size_t k,
                const DriverPair& driver);

/// Davie step with the drift evaluated at the segment's left node.
void davie_step(std::span<Vec2> positions, std::size_t k, const FlowProblem& problem);

ParticleFlow solve_flow(const FlowProblem& problem);

/// Values φ_t^{-1}(points) for the step-grid node t_node, obtained by solving
/// the reversed equation on [0, t]. points defaults to the problem's initial set.
ParticleFlow solve_inverse_flow(const FlowProblem& problem, std::size_t t_node,
                                std::span<const Vec2> points = {});

/// max_i d(φ_t^{-1}(φ_t(x_i)), x_i).
double inverse_composition_defect(const FlowProblem& problem, std::size_t t_node);

/// Generic RDE dY = σ(Y) dZ on R^d with the same one-step scheme.
struct VectorFieldRde {
  std::size_t dim = 1;
  /// σ(y) as a d x M matrix.
  std::function<Matrix(std::span<const double>)> fields;
  /// Dσ_j(y) as a d x d matrix.
  std::function<Matrix(std::span<const double>, std::size_t)> jacobian;
};

/// Nodes x d trajectory.
std::vector<double> solve_rde(const VectorFieldRde& rde, const RoughPath& rp, std::span<const double> y0);

struct NonlocalOptions {
  std::size_t resolution = 64;            ///< Biot-Savart grid N
  std::size_t particles_per_side = 128;   ///< N_p = particles_per_side², >= N
  InterpolationMethod interpolation = InterpolationMethod::CubicBSpline;
  std::size_t store_every = 1;
};

/// Self-consistent flow whose drift is the Biot-Savart velocity of the
/// pushed-forward vorticity (deposit, spectral inversion of the mean-free
/// part, interpolation at the particles).
ParticleFlow solve_nonlocal_flow(const std::function<double(Vec2)>& w0, const DriverPair& driver,
                                 const NonlocalOptions& options);
ParticleFlow solve_nonlocal_flow(const GridField& w0, const DriverPair& driver,
                                 const NonlocalOptions& options);

/// Velocity of the particle vorticity at one snapshot.
VelocityGrid particle_velocity(std::span<const Vec2> positions, std::span<const double> weights,
                               std::size_t resolution);

struct FlowVariation {
  double path_variation = 0.0;       ///< max_i ‖φ(x_i)‖^q_q
  double remainder_variation = 0.0;  ///< max_i ‖R^φ(x_i)‖^{q/2}_{q/2,loc}
};

/// q-variation of sampled trajectories (every `stride`-th particle) and of
/// their remainders φ_{s,t} - ε σ(φ_s) Z_{s,t}, over the snapshot grid.
FlowVariation flow_variation_diagnostic(const ParticleFlow& flow, const DriverPair& driver,
                                        double q, double threshold, std::size_t stride = 64);

/// Largest μ with ‖σ‖_{C²}^{q/2} μ^{1/2} < 1/2 (infinite for σ = 0).
double default_localization_threshold(const DriverPair& driver, double q);

struct OccupancyResult {
  double chi_square = 0.0;
  double dof = 0.0;
  double z = 0.0;              ///< (χ² - dof) / sqrt(2 dof)
  double max_deviation = 0.0;  ///< max_cell |count - mean| / sd
};

/// Box counts of positions on a boxes x boxes partition against the
/// multinomial expectation.
OccupancyResult occupancy_test(std::span<const Vec2> positions, std::size_t boxes);

/// e · z0^{exp(-t)}, the Osgood envelope for the γ modulus.
double osgood_envelope(double z0, double t);

/// Frozen constant for the flow stability estimate.
inline constexpr double kFlowStabilityConstant = 1.0;

struct FlowStability {
  double distance = 0.0;        ///< sup_t max_i d(Y¹_t(x_i), Y²_t(x_i))
  double initial = 0.0;         ///< ‖y1 - y2‖
  double sigma = 0.0;           ///< Σ_j ‖σ¹_j - σ²_j‖_{C³}
  double driver = 0.0;          ///< ω_{Z¹-Z²}(0,T)^{1/(2q)}
  double drift = 0.0;           ///< ‖u1 - u2‖_∞ T (sampled)
  double gamma_integral = 0.0;  ///< ∫ γ(distance(r)) dr
  double rhs = 0.0;             ///< C * sum of the terms
  double constant = kFlowStabilityConstant;
};

/// Solves both problems (same initial labels, nested step grids) and evaluates
/// the stability estimate. q must exceed the driver's p.
FlowStability compare_flows(const FlowProblem& a, const FlowProblem& b, double q,
                            double constant = kFlowStabilityConstant);

}  // namespace roughflow
