#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "roughflow/rough_path.hpp"
#include "roughflow/variation.hpp"

namespace roughflow {

/// Path X with values in V = R^vdim controlled by a rough path Z:
/// X_{s,t} = X'_s Z_{s,t} + R^X_{s,t}, where X'_s ∈ L(R^M, V) is stored
/// row-major as vdim x M.
class ControlledPath {
 public:
  ControlledPath(RoughPath rp, std::vector<double> values, std::size_t vdim,
                 std::vector<double> derivative);

  const RoughPath& path() const noexcept { return rp_; }
  std::size_t size() const noexcept { return rp_.size(); }
  std::size_t vdim() const noexcept { return vdim_; }
  std::size_t dim() const noexcept { return rp_.dim(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> value(std::size_t k) const;
  std::span<const double> derivative() const noexcept { return derivative_; }
  std::span<const double> derivative(std::size_t k) const;

  /// R^X_{t_i, t_j}.
  std::vector<double> remainder(std::size_t i, std::size_t j) const;

  /// ‖R^X‖^{p/2}_{p/2,loc} over the node range [first, last].
  double remainder_variation(const Localization& loc, std::size_t first = 0,
                             std::size_t last = static_cast<std::size_t>(-1)) const;
  /// ‖X'‖^p_p over the node range [first, last].
  double derivative_variation(std::size_t first = 0,
                              std::size_t last = static_cast<std::size_t>(-1)) const;

 private:
  RoughPath rp_;
  std::size_t vdim_;
  std::vector<double> values_;
  std::vector<double> derivative_;
};

/// Two-index germ h_{s,t} ∈ R^vdim on node pairs.
using Germ = std::function<std::vector<double>(std::size_t, std::size_t)>;

struct SewingOptions {
  double zeta = 0.75;               ///< coherence exponent, < 1
  double coherence_constant = 1.0;  ///< |δh_{s,u,t}| <= c ω(s,t)^{1/ζ}
  double tolerance = 1e-12;         ///< absolute slack in the coherence check
  std::size_t max_triples = 20000;  ///< sampled triples (all when fewer exist)
  std::uint64_t seed = 7;
};

struct SewingResult {
  std::vector<double> path;   ///< I(h)_{t_k} - I(h)_{t_0}, nodes x vdim
  std::size_t vdim = 1;
  double max_local_error = 0.0;      ///< max |I_{s,t} - h_{s,t}| over localized pairs
  double error_constant = 0.0;       ///< max |I_{s,t} - h_{s,t}| / ω(s,t)^{1/ζ}
  double refinement_gap = 0.0;       ///< |I_{0,T}(grid) - I_{0,T}(every other node)|
  double max_coherence_defect = 0.0; ///< over sampled triples
};

/// Discrete sewing: I(h) is the compensated left-to-right sum of h over
/// consecutive nodes. Throws GermRejected when a sampled localized triple
/// violates the coherence bound.
SewingResult sew(std::size_t nodes, std::size_t vdim, const Germ& germ, const Control& omega,
                 const Localization& loc, const SewingOptions& options = {});

/// (∫ Y dZ, Y) for Y controlled by Z with values in L(R^M, V).
///
/// Y.vdim() must be vdim*M (row-major V x M) and Y' is read as a
/// vdim x M x M tensor: Y'^{a,j,i} pairs with Z^i. The germ is
/// Y_s Z_{s,t} + Y'_s 𝕫_{s,t}.
ControlledPath rough_integral(const ControlledPath& Y, std::size_t vdim);

struct RoughIntegralDiagnostic {
  double max_germ_error = 0.0;  ///< max |∫_s^t Y dZ - germ_{s,t}| over localized pairs
  double constant = 0.0;        ///< measured K in the local error bound
};

/// Measures K in |∫_s^t Y dZ - Y_s Z_{s,t} - Y'_s 𝕫_{s,t}|
///   <= K (ω_R(s,t)^{2/p} ω_Z(s,t)^{1/p} + ω_{Y'}(s,t)^{1/p} ω_Z(s,t)^{2/p}).
/// O(n²) pairs with best-control rows; meant for grids of at most a few hundred nodes.
RoughIntegralDiagnostic rough_integral_diagnostic(const ControlledPath& Y, std::size_t vdim,
                                                  const Localization& loc);

struct IntegralDifference {
  double measured = 0.0;  ///< ‖∫X dZ¹ - ∫Y dZ²‖^p_p
  double bound = 0.0;     ///< stability right-hand side, unit constant
  double ratio = 0.0;     ///< measured / bound (0 when both vanish)
};

/// Evaluates the stability estimate for rough integrals in integrand and
/// driver. Both integrands must live on the same grid.
IntegralDifference integral_difference_bound(const ControlledPath& X, const ControlledPath& Y,
                                             std::size_t vdim);

}  // namespace roughflow
