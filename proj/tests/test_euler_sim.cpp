#include <doctest.h>

#include <cmath>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/euler_sim.hpp"

using namespace roughflow;

namespace {

RoughPath zero_path(std::size_t n, std::size_t dim = 1) {
  std::vector<double> t(n + 1), v((n + 1) * dim, 0.0);
  for (std::size_t k = 0; k <= n; ++k) t[k] = static_cast<double>(k) / static_cast<double>(n);
  return lift_piecewise_linear(v, t, dim);
}

}  // namespace

TEST_CASE("test function derivatives") {
  const TestFunction f{2, -1, true};
  const Vec2 x{0.7, 2.2};
  const double h = 1e-5;
  const Vec2 g = f.gradient(x);
  CHECK(g.x == doctest::Approx((f.value({x.x + h, x.y}) - f.value({x.x - h, x.y})) / (2 * h)).epsilon(1e-8));
  CHECK(g.y == doctest::Approx((f.value({x.x, x.y + h}) - f.value({x.x, x.y - h})) / (2 * h)).epsilon(1e-8));
  const Mat2 H = f.hessian(x);
  CHECK(H.a12 == doctest::Approx(2.0 * 1.0 * std::sin(2 * 0.7 - 2.2)));
  CHECK(f.wavenumber() == doctest::Approx(std::sqrt(5.0)));
  CHECK(default_test_family().size() == 28);
}

TEST_CASE("particle pairings on the lattice") {
  const auto pts = lattice(32);
  std::vector<double> w(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) w[k] = std::cos(pts[k].x) + 2.0 * std::sin(pts[k].x + pts[k].y);
  const std::vector<TestFunction> fam{{1, 0, false}, {1, 1, true}, {0, 1, false}};
  const auto p = particle_pairings(pts, w, fam);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(1.0));
  CHECK(std::abs(p[2]) <= 1e-14);
  const std::vector<double> q{0.5, 0.0, 0.0};
  CHECK(dual_norm_proxy(p, q, fam, 1) == doctest::Approx(1.0 / (1.0 + std::sqrt(2.0))));
}

TEST_CASE("steady shear is preserved without noise") {
  const DriverPair d({SigmaField::zero()}, zero_path(16), -1);
  EulerOptions o;
  o.resolution = 32;
  o.particles_per_side = 64;
  o.store_every = 8;
  const auto w0 = [](Vec2 x) { return std::cos(x.x) + 0.5 * std::sin(2 * x.x); };
  const EulerTrajectory tr = solve_rough_euler(w0, d, o);
  CHECK(tr.vorticity.size() == 3);
  CHECK((tr.vorticity.back() - tr.vorticity.front()).l1_norm() <= 1e-12);
  CHECK(tr.max_mean_drift <= 1e-14);
  CHECK(tr.max_particle_sup <= tr.initial_sup);
  CHECK_THROWS_AS(solve_rough_euler(w0, d.with_sign(1), o), InvalidArgument);
}

TEST_CASE("rough euler conserves the mean and the particle sup") {
  const FbmSample s = sample_fbm(0.4, 64, 1.0, 3, 1);
  const RoughPath rp = lift_piecewise_linear(s.values, s.times, 1, 2.6);
  const DriverPair d({SigmaField::mode(0.3, 1, 1)}, rp, -1);
  EulerOptions o;
  o.resolution = 16;
  o.particles_per_side = 32;
  o.store_every = 16;
  const EulerTrajectory tr = solve_rough_euler([](Vec2 x) { return std::cos(x.x) * std::cos(x.y) + 0.1; }, d, o);
  CHECK(tr.initial_mean == doctest::Approx(0.1));
  CHECK(tr.max_mean_drift <= 1e-12);
  CHECK(tr.max_particle_sup == doctest::Approx(tr.initial_sup).epsilon(1e-14));
}

TEST_CASE("viscous reference decays a single mode") {
  const double nu = 0.05;
  const DriverPair d({SigmaField::zero()}, zero_path(8), -1);
  ViscousOptions o;
  o.resolution = 16;
  o.max_dt = 0.05;
  o.store_every = 8;
  const GridField w0 = GridField::sample(16, [](Vec2 x) { return std::cos(x.x + x.y); });
  const ViscousTrajectory tr = solve_viscous_reference(w0, d, nu, o);
  GridField expect = w0;
  expect *= std::exp(-2.0 * nu);
  CHECK((tr.vorticity.back() - expect).sup_norm() <= 1e-10);
  CHECK_THROWS_AS(solve_viscous_reference(w0, d, 0.0, o), InvalidArgument);
}

TEST_CASE("viscous reference advects with a constant noise") {
  // w_t(x) = e^{-νt} cos(x₁ + z(t)) for σ = (1, 0), transported by -σż
  std::vector<double> t(33), z(33);
  for (std::size_t k = 0; k <= 32; ++k) {
    t[k] = k / 32.0;
    z[k] = 0.5 * std::sin(2.0 * t[k]);
  }
  const RoughPath rp = lift_piecewise_linear(z, t, 1);
  const DriverPair d({SigmaField::constant({1.0, 0.0})}, rp, -1);
  ViscousOptions o;
  o.resolution = 16;
  o.max_dt = 1.0 / 256;
  o.store_every = 32;
  const double nu = 0.01;
  const GridField w0 = GridField::sample(16, [](Vec2 x) { return std::cos(x.x); });
  const ViscousTrajectory tr = solve_viscous_reference(w0, d, nu, o);
  const GridField expect = GridField::sample(16, [&](Vec2 x) { return std::exp(-nu) * std::cos(x.x + z[32]); });
  CHECK((tr.vorticity.back() - expect).sup_norm() <= 1e-6);
}

TEST_CASE("log-log fit of an exact power law") {
  const std::vector<double> x{1, 2, 4, 8, 0}, y{3, 3 * std::pow(2, 1.5), 3 * std::pow(4, 1.5), 3 * std::pow(8, 1.5), 1};
  const ScalingFit f = loglog_fit(x, y);
  CHECK(f.points == 4);
  CHECK(f.slope == doctest::Approx(1.5));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("weak remainder of a smooth noise") {
  const FbmSample s = sample_fbm(0.4, 64, 1.0, 21, 1);
  const RoughPath rp = lift_piecewise_linear(s.values, s.times, 1, 2.6);
  const DriverPair d({SigmaField::constant({0.5, 0.0})}, rp, -1);
  EulerOptions o;
  o.resolution = 16;
  o.particles_per_side = 32;
  o.store_every = 4;
  const EulerTrajectory tr = solve_rough_euler([](Vec2 x) { return std::cos(x.x) + 0.3 * std::cos(x.y); }, d, o);
  const WeakRemainder rem(tr.flow, d, 16);
  CHECK(rem.snapshots() == 17);
  CHECK(rem.additivity_defect() <= 1e-9);
  CHECK(rem.value(3, 3, 0) == 0.0);
  CHECK(std::isfinite(rem.localized_variation(1.0)));
  CHECK(rem.apriori_rhs(0, 16) > rem.apriori_rhs(0, 8));
  const ScalingFit f = remainder_scaling(rem);
  CHECK(f.points >= 3);
}
