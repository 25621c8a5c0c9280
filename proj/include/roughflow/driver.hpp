#pragma once

#include <cstddef>
#include <vector>

#include "roughflow/rough_path.hpp"
#include "roughflow/sigma_field.hpp"

namespace roughflow {

/// Diffusion fields σ_1..σ_M together with the rough path driving them.
///
/// sign = +1 gives dφ = u dt + σ_j dZ^j; sign = -1 gives the advecting flow
/// dφ = u dt - σ_j dZ^j used by the Euler solver.
class DriverPair {
 public:
  /// Validates M = rp.dim(), sign ∈ {-1, +1} and div σ_j = 0 on a
  /// `check_resolution`² grid.
  DriverPair(std::vector<SigmaField> sigmas, RoughPath rp, int sign = 1,
             std::size_t check_resolution = 32);

  const std::vector<SigmaField>& sigmas() const noexcept { return sigmas_; }
  const SigmaField& sigma(std::size_t j) const { return sigmas_.at(j); }
  const RoughPath& path() const noexcept { return path_; }
  int sign() const noexcept { return sign_; }
  std::size_t dim() const noexcept { return sigmas_.size(); }

  /// Σ_j ‖σ_j‖_{C^order}.
  double c_norm(int order) const;
  /// max_j max |div σ_j| on the check grid.
  double divergence_defect() const noexcept { return divergence_defect_; }
  bool all_zero() const;

  DriverPair with_path(RoughPath rp) const;
  DriverPair with_sigmas(std::vector<SigmaField> sigmas) const;
  DriverPair with_sign(int sign) const;

 private:
  std::vector<SigmaField> sigmas_;
  RoughPath path_;
  int sign_;
  double divergence_defect_ = 0.0;
};

/// Σ_j ‖σ¹_j - σ²_j‖_{C^order}.
double sigma_distance(const DriverPair& a, const DriverPair& b, int order = 3);

}  // namespace roughflow
