#pragma once

#include <string>
#include <vector>

#include "roughflow/geometry.hpp"

namespace roughflow {

/// Divergence-free vector field on 𝕋² from a closed-form catalog.
///
/// A field is a finite sum of terms:
///   constant  σ(x) = c
///   mode      σ(x) = ∇⊥[a cos(k·x + φ)] = a sin(k·x + φ) (k₂, -k₁)
/// with integer wavevector k. Every term is smooth and exactly divergence-free.
class SigmaField {
 public:
  struct Term {
    enum class Kind { Constant, Mode } kind = Kind::Constant;
    Vec2 constant{};
    double amplitude = 0.0;
    int k1 = 0, k2 = 0;
    double phase = 0.0;
  };

  SigmaField() = default;
  explicit SigmaField(std::vector<Term> terms) : terms_(std::move(terms)) {}

  static SigmaField zero() { return SigmaField(); }
  static SigmaField constant(Vec2 c);
  static SigmaField mode(double amplitude, int k1, int k2, double phase = 0.0);
  /// Parses a catalog id: "zero", "const:c1,c2", "mode:a,k1,k2[,phase]", or
  /// several of these joined by '+'.
  static SigmaField parse(const std::string& id);

  Vec2 operator()(Vec2 x) const;
  Mat2 jacobian(Vec2 x) const;

  /// Σ_{j<=order} sup_x |D^j σ| (Frobenius), summed over terms; exact for a
  /// single term and an upper bound otherwise.
  double c_norm(int order) const;
  double sup_norm() const { return c_norm(0); }

  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  const std::vector<Term>& terms() const noexcept { return terms_; }
  std::string id() const;

  SigmaField scaled(double a) const;
  friend SigmaField operator+(const SigmaField& a, const SigmaField& b);
  /// a - b with identical terms cancelled.
  friend SigmaField difference(const SigmaField& a, const SigmaField& b);

 private:
  std::vector<Term> terms_;
};

}  // namespace roughflow
