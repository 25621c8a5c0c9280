#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "roughflow/driver.hpp"
#include "roughflow/rde_solver.hpp"
#include "roughflow/torus_field.hpp"
#include "roughflow/variation.hpp"

namespace roughflow {

struct EulerOptions {
  std::size_t resolution = 64;           ///< N
  std::size_t particles_per_side = 128;  ///< N_p = particles_per_side²
  InterpolationMethod interpolation = InterpolationMethod::CubicBSpline;
  std::size_t store_every = 1;
};

/// Lagrangian rough Euler solution: the pushforward of w₀ along the advecting
/// flow, with the deposited vorticity at every snapshot.
struct EulerTrajectory {
  ParticleFlow flow;
  std::vector<GridField> vorticity;  ///< deposited at each snapshot
  std::size_t resolution = 0;
  double initial_mean = 0.0;       ///< mean of the particle weights
  double initial_sup = 0.0;        ///< max |w₀| over the particles
  double max_mean_drift = 0.0;     ///< max_t |mean(w_t) - mean(w₀)| on the grid
  double max_grid_sup = 0.0;       ///< max_t ‖w_t‖_∞ on the grid
  double max_particle_sup = 0.0;   ///< max_t max_i |w_i|
};

/// Requires driver.sign() == -1 (the advecting flow dx = u dt - σ_j dZ^j).
EulerTrajectory solve_rough_euler(const std::function<double(Vec2)>& w0, const DriverPair& driver,
                                  const EulerOptions& options);
EulerTrajectory solve_rough_euler(const GridField& w0, const DriverPair& driver,
                                  const EulerOptions& options);

struct ViscousOptions {
  std::size_t resolution = 64;
  double max_dt = 1e-2;         ///< substep cap; each driver segment is split evenly
  std::size_t store_every = 1;  ///< snapshot stride in driver segments
  double cfl = 1.0;             ///< (‖u‖_∞ + ‖σŻ‖_∞) dt / h must stay below this
};

struct ViscousTrajectory {
  std::vector<double> times;
  std::vector<std::size_t> nodes;
  std::vector<GridField> vorticity;
  double initial_sup = 0.0;
  double max_sup_ratio = 0.0;  ///< max_t ‖w_t‖_∞ / ‖w₀‖_∞ (reported, not enforced)
};

/// Pseudo-spectral solve of ∂_t w + (u - σ_j Ż^j)·∇w = ν Δw with u = K_BS * w,
/// 2/3 dealiasing and integrating-factor RK4. Ż is the slope of the
/// piecewise-linear driver on each segment. Throws StepGuardViolation on CFL
/// violation and InvalidArgument for ν <= 0.
ViscousTrajectory solve_viscous_reference(const GridField& w0, const DriverPair& driver, double nu,
                                          const ViscousOptions& options);

/// cos(k·x) or sin(k·x).
struct TestFunction {
  int k1 = 0, k2 = 0;
  bool sine = false;

  double value(Vec2 x) const;
  Vec2 gradient(Vec2 x) const;
  Mat2 hessian(Vec2 x) const;
  double wavenumber() const;
};

/// The frozen family: 14 wavevectors with 1 <= |k| <= 8, about four per
/// octave, each with cosine and sine.
const std::vector<TestFunction>& default_test_family();

/// ∫ w ψ dx / 4π² as a particle average, for each test function.
std::vector<double> particle_pairings(std::span<const Vec2> positions, std::span<const double> weights,
                                      const std::vector<TestFunction>& family);

/// max_ψ |⟨a - b, ψ⟩| / (1 + |k|) from two sets of pairings.
double dual_norm_proxy(std::span<const double> a, std::span<const double> b,
                       const std::vector<TestFunction>& family, int order = 1);

/// Weak-form remainder of a Lagrangian solution on its snapshot grid:
/// w♮_{s,t}(ψ) = w_{s,t}(ψ) - μ_{s,t}(ψ) - w_s(A¹*_{s,t}ψ) - w_s(A²*_{s,t}ψ).
class WeakRemainder {
 public:
  WeakRemainder(const ParticleFlow& flow, const DriverPair& driver, std::size_t resolution,
                std::vector<TestFunction> family = default_test_family(),
                double richardson_tolerance = 1e-2);

  std::size_t snapshots() const noexcept { return times_.size(); }
  std::span<const double> times() const noexcept { return times_; }
  const std::vector<TestFunction>& family() const noexcept { return family_; }

  /// w_s(ψ_f) for every test function at snapshot a.
  std::span<const double> pairings(std::size_t a) const;

  /// w♮_{s,t}(ψ_f) for snapshot indices a <= b.
  double value(std::size_t a, std::size_t b, std::size_t f) const;
  /// μ_{s,t}(ψ_f).
  double drift(std::size_t a, std::size_t b, std::size_t f) const;
  /// max_f |w♮_{s,t}(ψ_f)| / (1 + |k_f|)³.
  double norm(std::size_t a, std::size_t b) const;
  /// max_f |w♮_{s,t}(ψ_f)| (unnormalized).
  double sup(std::size_t a, std::size_t b) const;

  /// max |δw♮_{s,u,t} - w_{s,u}(A²*_{u,t}ψ) - w†_{s,u}(A¹*_{u,t}ψ)| over all triples (subsampled).
  double additivity_defect(std::size_t max_triples = 20000) const;
  /// |μ_{0,T}| difference between the trapezoid on all snapshots and on every other one.
  double quadrature_gap() const noexcept { return quadrature_gap_; }

  /// ω_Z + |t - s|^p on the snapshot grid.
  const Control& base_control() const noexcept { return base_; }
  /// ω_A = ‖σ‖^p_{C³} ω_Z on the snapshot grid.
  const Control& driver_control() const noexcept { return omega_a_; }
  double p() const noexcept { return p_; }
  double sup_weight() const noexcept { return sup_weight_; }

  /// Localized (p/3)-variation of w♮ over the whole snapshot range.
  double localized_variation(double threshold) const;

  /// Right side of the a priori remainder estimate at a pair (unit constant).
  double apriori_rhs(std::size_t a, std::size_t b) const;

 private:
  void remainder_row(std::size_t a, std::size_t b, const std::vector<double>& z, const Matrix& zz,
                     std::vector<double>& out) const;

  std::vector<TestFunction> family_;
  std::vector<double> times_;
  std::vector<std::size_t> nodes_;
  RoughPath sub_;
  int sign_ = -1;
  std::size_t m_ = 0;
  double p_ = 2.5;
  double sup_weight_ = 0.0;
  std::vector<double> P_;   // snapshots x F
  std::vector<double> Q_;   // snapshots x F x M
  std::vector<double> R_;   // snapshots x F x M x M
  std::vector<double> mu_;  // cumulative drift, snapshots x F
  double quadrature_gap_ = 0.0;
  std::vector<double> norm_;  // snapshots x snapshots
  std::vector<double> sup_;   // snapshots x snapshots
  Control base_, omega_a_;
};

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
  std::vector<double> x, y;  ///< the positive pairs used
};

/// Least-squares fit of log y against log x over positive pairs.
ScalingFit loglog_fit(std::span<const double> x, std::span<const double> y);

/// Over the dyadic windows of each lag h (in snapshots), geometric means of
/// ‖w♮‖_{p/3,[s,t]} and of the a priori right side; returns the log-log fit of
/// the former against the latter.
ScalingFit remainder_scaling(const WeakRemainder& rem, double floor = 1e-13);

struct SolutionVariation {
  double omega_w = 0.0;        ///< ‖w‖^p_{p,[0,T]} in the W^{-1,1} proxy
  double constant = 0.0;       ///< measured K over localized pairs
  double omega_a = 0.0;        ///< ω_A(0,T)
  double omega_natural = 0.0;  ///< localized ‖w♮‖^{p/3}_{p/3,[0,T]}
};

/// Measures ω_w(s,t) and the smallest K with
/// ω_w <= K (1 + ‖w‖_∞)^{2p} (|t-s|^p + ω_A + ω♮) on localized pairs.
SolutionVariation solution_variation_diagnostic(const WeakRemainder& rem, const ParticleFlow& flow,
                                                double threshold);

}  // namespace roughflow
