#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roughflow/matrix.hpp"
#include "roughflow/variation.hpp"

namespace roughflow {

/// Level-2 rough path (Z, 𝕫) on a finite time grid.
///
/// The first level is stored at every node. The second level is stored only
/// for consecutive node pairs; 𝕫 over an arbitrary pair is composed with
/// Chen's relation, so the stored object satisfies it by construction.
/// Index convention: 𝕫^{i,j}_{s,t} = ∫_s^t Z^i_{s,r} dZ^j_r.
///
/// Immutable after construction.
class RoughPath {
 public:
  /// `values` is (times.size() x dim) row-major; `segment_levels` has one
  /// dim x dim matrix per consecutive pair.
  RoughPath(std::vector<double> times, std::vector<double> values, std::size_t dim,
            std::vector<Matrix> segment_levels, double p = 2.5);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return times_.size(); }
  std::size_t segments() const noexcept { return times_.size() - 1; }
  double p() const noexcept { return p_; }
  double horizon() const noexcept { return times_.back() - times_.front(); }

  std::span<const double> times() const noexcept { return times_; }
  double time(std::size_t k) const { return times_.at(k); }
  std::span<const double> value(std::size_t k) const;
  std::span<const double> values() const noexcept { return values_; }
  const Matrix& segment_level(std::size_t k) const { return levels_.at(k); }

  /// Node index of time t; throws InvalidArgument when t is not a grid node.
  std::size_t node_index(double t) const;

  /// Z_{t_i, t_j}.
  std::vector<double> increment(std::size_t i, std::size_t j) const;
  /// 𝕫_{t_i, t_j} for i <= j, composed via Chen (O(j - i)).
  Matrix second_level(std::size_t i, std::size_t j) const;

  /// Sub-path on the node range [first, last].
  RoughPath restricted(std::size_t first, std::size_t last) const;
  /// Restriction to a strictly increasing subset of nodes; second levels are
  /// composed, so the Lévy area of skipped segments is retained.
  RoughPath restricted_to(std::span<const std::size_t> nodes) const;
  /// Every `stride`-th node (the last node must be reachable).
  RoughPath subsampled(std::size_t stride) const;
  /// Each segment split into `factor` linear pieces; the antisymmetric part
  /// of a segment's second level is carried by its first piece.
  RoughPath refined(std::size_t factor) const;
  /// Driver (-Z, 𝕫): both indices negated, so the second level is unchanged.
  RoughPath negated() const;
  /// (a Z, a² 𝕫).
  RoughPath scaled(double a) const;
  /// Copy whose second level over the pair (i, j) is shifted by `delta`.
  /// The result no longer satisfies Chen at triples involving (i, j).
  RoughPath with_pair_perturbation(std::size_t i, std::size_t j, const Matrix& delta) const;

  /// Homogeneous p-variation control ω_Z = ‖Z‖^p_{p} + ‖𝕫‖^{p/2}_{p/2} on subintervals.
  const Control& control() const;

  /// max_k ‖Sym(𝕫_k) - ½ ΔZ_k ⊗ ΔZ_k‖ over stored segments (0 for geometric data).
  double geometric_defect() const;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  std::size_t dim_;
  std::vector<Matrix> levels_;
  double p_;
  std::map<std::pair<std::size_t, std::size_t>, Matrix> perturbations_;
  mutable std::shared_ptr<Control> control_;
};

/// Canonical (segment-exact) lift of the piecewise-linear interpolation of
/// samples (times.size() x dim, row-major).
RoughPath lift_piecewise_linear(std::span<const double> samples, std::span<const double> times,
                                std::size_t dim, double p = 2.5);

/// 𝕫_{s,t} - 𝕫_{s,u} - 𝕫_{u,t} - Z_{s,u} ⊗ Z_{u,t} at grid times s <= u <= t.
Matrix chen_defect(const RoughPath& rp, double s, double u, double t);
/// ω_{Z¹-Z²}: ‖Z¹-Z²‖^p_p + ‖𝕫¹-𝕫²‖^{p/2}_{p/2} on subintervals of a common
/// grid, with p taken from `a`.
Control difference_control(const RoughPath& a, const RoughPath& b);

/// Same with node indices.
Matrix chen_defect_nodes(const RoughPath& rp, std::size_t s, std::size_t u, std::size_t t);
/// |defect| / (|Z_{s,u}||Z_{u,t}| + |𝕫_{s,t}|), or the absolute defect when
/// the denominator vanishes.
double relative_chen_defect(const RoughPath& rp, std::size_t s, std::size_t u, std::size_t t);

/// ‖Sym(𝕫_{s,t}) - ½ Z_{s,t} ⊗ Z_{s,t}‖ for the node pair (i, j).
double symmetry_defect(const RoughPath& rp, std::size_t i, std::size_t j);

struct FbmSample {
  std::vector<double> times;   ///< n + 1 uniform nodes on [0, T]
  std::vector<double> values;  ///< (n + 1) x dim, B_0 = 0
  std::size_t dim = 1;
  double hurst = 0.5;
};

/// Exact fractional Brownian motion samples (circulant embedding), independent
/// components, reproducible from `seed`. Requires H in (1/3, 1/2] and n >= 2.
FbmSample sample_fbm(double hurst, std::size_t n, double horizon, std::uint64_t seed,
                     std::size_t dim = 1);

/// Geometric lift of s -> Z_{t-s} on [0, t] for the pivot node time t.
RoughPath reverse_rough_path(const RoughPath& rp, double pivot);

/// CSV with header `t,Z_1..Z_M,A_11..A_MM`; row k carries the second level of
/// the segment ending at t_k (zeros on the first row).
void write_rough_path_csv(std::ostream& out, const RoughPath& rp);
/// Loads and re-validates (monotone times, finite values, Chen and geometric
/// symmetry within tolerance).
RoughPath read_rough_path_csv(std::istream& in, double p = 2.5);

}  // namespace roughflow
