#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "roughflow/geometry.hpp"
#include "roughflow/sigma_field.hpp"

namespace roughflow {

/// Real periodic field sampled at the nodes (2πi/N, 2πj/N) of 𝕋², stored
/// row-major with i along x₁. N must be a power of two.
class GridField {
 public:
  GridField() = default;
  explicit GridField(std::size_t n, double fill = 0.0);
  GridField(std::size_t n, std::vector<double> values);
  static GridField sample(std::size_t n, const std::function<double(Vec2)>& f);

  std::size_t resolution() const noexcept { return n_; }
  double spacing() const noexcept { return kTwoPi / static_cast<double>(n_); }
  Vec2 node(std::size_t i, std::size_t j) const {
    return {spacing() * static_cast<double>(i), spacing() * static_cast<double>(j)};
  }
  double& at(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }
  double at(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Average over the torus (normalized measure).
  double mean() const;
  double sup_norm() const;
  /// ∫|f| dx / 4π², the L¹ norm for the normalized torus measure.
  double l1_norm() const;

  GridField& operator+=(const GridField& o);
  GridField& operator-=(const GridField& o);
  GridField& operator*=(double a);
  friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
  friend GridField operator+(GridField a, const GridField& b) { return a += b; }

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

using VorticityGrid = GridField;

struct VelocityGrid {
  GridField u1, u2;
  double sup_norm() const;
};

/// u = ∇⊥Δ⁻¹w spectrally: û(k) = i (k₂, -k₁) ŵ(k) / |k|², û(0) = 0.
/// Requires |mean(w)| <= mean_tolerance.
VelocityGrid biot_savart(const GridField& w, double mean_tolerance = 1e-10);
/// Biot-Savart of the mean-free part of w.
VelocityGrid biot_savart_mean_free(const GridField& w);

/// Spectral derivatives; the Nyquist modes are dropped (fields are treated
/// as band-limited below N/2).
GridField derivative(const GridField& f, int axis);
GridField divergence(const VelocityGrid& u);
GridField curl(const VelocityGrid& u);
/// Trigonometric interpolant of f resampled on an m x m grid (m >= N, power
/// of two); the Nyquist modes are read as cosines.
GridField resample(const GridField& f, std::size_t m);
/// Sharp truncation to |k₁|, |k₂| < cutoff.
GridField band_limit(const GridField& f, std::size_t cutoff);

/// log-Lipschitz modulus: r(1 - log r) on (0, 1/e), r + 1/e on [1/e, ∞), 0 at 0.
double gamma_modulus(double r);

/// Periodic Biot-Savart kernel K = ∇⊥G with ΔG = δ₀ - 1/4π² on 𝕋².
Vec2 biot_savart_kernel(Vec2 z);

struct KernelLogLipschitzCheck {
  double lhs = 0.0;       ///< ∫ |K(x - y) - K(x' - y)| dy
  double rhs = 0.0;       ///< constant * γ(d(x, x'))
  double constant = 0.0;  ///< frozen calibration constant
  double distance = 0.0;  ///< geodesic distance d(x, x')
};

/// Calibrated constant for the kernel log-Lipschitz inequality.
inline constexpr double kKernelLogLipschitzConstant = 2.1;

/// Evaluates both sides of ∫|K(x-y) - K(x'-y)| dy <= C γ(|x - x'|) using graded
/// polar quadrature around each singularity; `resolution` sets the node count.
KernelLogLipschitzCheck kernel_log_lipschitz_check(Vec2 x, Vec2 x_prime,
                                                   std::size_t resolution = 256);

/// Convolution with the normalized C^∞ bump of radius eta (unit-ball support).
/// Throws when eta is below the grid spacing or outside (0, 1].
GridField mollify(const GridField& f, double eta);

/// ‖f‖_{W^{1,1}} = ‖f‖_{L¹} + ‖∇f‖_{L¹} (normalized measure, spectral gradient).
double w11_norm(const GridField& f);

enum class InterpolationMethod { Spectral, CubicBSpline };

/// Periodic interpolant of a grid field. Spectral mode evaluates the
/// trigonometric interpolant exactly (O(N²) per point); cubic B-spline mode
/// interpolates nodal values with a 4x4 stencil.
class Interpolator {
 public:
  Interpolator() = default;
  Interpolator(const GridField& f, InterpolationMethod method);

  double operator()(Vec2 x) const;
  void evaluate(std::span<const Vec2> points, std::span<double> out) const;
  InterpolationMethod method() const noexcept { return method_; }

 private:
  std::size_t n_ = 0;
  InterpolationMethod method_ = InterpolationMethod::CubicBSpline;
  std::vector<double> coefficients_;           // B-spline coefficients
  std::vector<std::complex<double>> spectrum_;  // normalized DFT
};

std::vector<double> interpolate(const GridField& f, std::span<const Vec2> points,
                                InterpolationMethod method = InterpolationMethod::Spectral);

/// Area-weighted cloud-in-cell deposition: each particle carries mass
/// weight * 4π²/count, spread bilinearly to the four surrounding nodes.
/// Conserves Σ mass exactly. Requires count >= N².
GridField deposit(std::span<const Vec2> positions, std::span<const double> weights,
                  std::size_t resolution);

/// max |div σ| of the sampled field, computed spectrally on an N x N grid.
double sigma_divergence_defect(const SigmaField& sigma, std::size_t resolution);

/// CSV rows `i,j,value`.
void write_grid_csv(std::ostream& out, const GridField& f);
GridField read_grid_csv(std::istream& in);

}  // namespace roughflow
