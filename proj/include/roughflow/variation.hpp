#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace roughflow {

/// Norm of a two-index quantity g_{s,t} on grid node pairs i <= j.
using PairNorm = std::function<double(std::size_t, std::size_t)>;

/// A control ω(s,t) evaluated on grid node pairs.
///
/// Controls are cheap to copy; the evaluator is shared. Evaluators built from
/// partition suprema cache whole rows internally and are safe to query from
/// several threads.
class Control {
 public:
  enum class Kind { IntervalPower, RoughPathVariation, BestControl, Sum, Scaled, Tabulated, Custom };

  Control() = default;
  Control(std::size_t nodes, Kind kind, std::function<double(std::size_t, std::size_t)> evaluator);

  /// ω(t_i, t_j) for i <= j; ω(t_i, t_i) = 0.
  double operator()(std::size_t i, std::size_t j) const;

  std::size_t size() const noexcept { return nodes_; }
  Kind kind() const noexcept { return kind_; }
  bool valid() const noexcept { return static_cast<bool>(eval_); }

  /// scale * |t_j - t_i|^exponent.
  static Control interval_power(std::span<const double> times, double exponent, double scale = 1.0);
  /// Dense table, row-major nodes x nodes (only i <= j is read).
  static Control tabulated(std::size_t nodes, std::vector<double> table);

  Control scaled(double factor) const;
  friend Control operator+(const Control& a, const Control& b);

 private:
  std::size_t nodes_ = 0;
  Kind kind_ = Kind::Custom;
  std::shared_ptr<const std::function<double(std::size_t, std::size_t)>> eval_;
};

/// Localization pair (ω̄, L): only cells with ω̄(s,t) <= L are admissible.
struct Localization {
  Control base;
  double threshold = std::numeric_limits<double>::infinity();

  Localization() = default;
  Localization(Control base_control, double L);

  /// Unconstrained localization on `nodes` grid points.
  static Localization none(std::size_t nodes);

  bool admissible(std::size_t i, std::size_t j) const {
    return !base.valid() || base(i, j) <= threshold;
  }
};

struct PVarResult {
  double value = 0.0;                  ///< sup over partitions of Σ|g|^p
  std::vector<std::size_t> partition;  ///< maximizing partition (node indices)
};

/// ‖g‖_p^p over grid-subordinate partitions of a scalar path.
PVarResult p_variation(std::span<const double> values, double p);
/// Same for an R^dim-valued path stored row-major (nodes x dim), Euclidean norm.
PVarResult p_variation(std::span<const double> values, std::size_t dim, double p);

/// Localized p-variation of a two-index function over the node range [first, last].
/// Throws InfeasibleLocalization when no admissible partition exists.
PVarResult localized_p_variation(std::size_t nodes, const PairNorm& norm, double p,
                                 const Localization& loc, std::size_t first = 0,
                                 std::size_t last = std::numeric_limits<std::size_t>::max());

/// Localized p-variation over [first, j] for every j >= first in one sweep.
/// Entries for j with no admissible partition are -infinity.
std::vector<double> localized_variation_row(std::size_t nodes, const PairNorm& norm, double p,
                                            const Localization& loc, std::size_t first);

/// The smallest control dominating |g_{s,t}|^p on localized pairs:
/// (s,t) -> ‖g‖^p_{p,(ω̄,L),[s,t]}. Rows are computed lazily and cached.
Control best_control(std::size_t nodes, PairNorm norm, double p, Localization loc);

/// Largest superadditivity violation ω(s,u) + ω(u,t) - ω(s,t) over all grid triples
/// (0 when the control is superadditive).
double superadditivity_defect(const Control& control);

/// Superadditivity tolerance: 1e-12 absolute plus 1e-10 relative to ω(s,t).
bool is_superadditive(const Control& control);

struct GronwallConstants {
  double L = 1.0;        ///< localization threshold for ω1
  double C = 1.0;        ///< >= 1
  double C_prime = 0.0;  ///< > 0 in the lemma; 0 is accepted
  double k = 2.0;        ///< k > k_prime
  double k_prime = 1.0;  ///< >= 1
};

/// α = min(1, 1/(L (2 C e²)^k)).
double gronwall_alpha(const GronwallConstants& c);

/// Right-hand side of the rough Gronwall lemma for controls on a common grid
/// (time 0 is node 0, time T is the last node).
double rough_gronwall_bound(double G0, const Control& omega1, const Control& omega2,
                            const Control& omega3, const GronwallConstants& c);

/// Largest violation of the lemma's increment hypothesis by the sampled path G,
/// over pairs with ω1(s,t) <= L. Non-positive means the hypothesis holds.
double gronwall_hypothesis_defect(std::span<const double> G, const Control& omega1,
                                  const Control& omega2, const Control& omega3,
                                  const GronwallConstants& c);

}  // namespace roughflow
