#pragma once

#include <cmath>
#include <numbers>

namespace roughflow {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  Vec2& operator*=(double a) {
    x *= a;
    y *= a;
    return *this;
  }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return a += b; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return a -= b; }
  friend Vec2 operator*(double a, Vec2 v) { return v *= a; }
  friend Vec2 operator-(Vec2 v) { return {-v.x, -v.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Row-major 2x2 matrix; (r, c) = ∂ f_r / ∂ x_c for Jacobians.
struct Mat2 {
  double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

  Vec2 operator*(Vec2 v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
  Mat2& operator+=(const Mat2& o) {
    a11 += o.a11;
    a12 += o.a12;
    a21 += o.a21;
    a22 += o.a22;
    return *this;
  }
};

/// Reduce a coordinate to [0, 2π).
inline double wrap_coordinate(double v) {
  double r = std::fmod(v, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

inline Vec2 wrap(Vec2 p) { return {wrap_coordinate(p.x), wrap_coordinate(p.y)}; }

/// Shortest representative of a displacement on the torus, in [-π, π).
inline double periodic_delta(double d) {
  return d - kTwoPi * std::floor((d + std::numbers::pi) / kTwoPi);
}

inline Vec2 periodic_delta(Vec2 d) { return {periodic_delta(d.x), periodic_delta(d.y)}; }

/// Geodesic distance on 𝕋² = [0, 2π)².
inline double torus_distance(Vec2 a, Vec2 b) { return norm(periodic_delta(a - b)); }

}  // namespace roughflow
