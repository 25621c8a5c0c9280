#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/rde_solver.hpp"

using namespace roughflow;

namespace {

RoughPath fbm_lift(std::size_t n, std::size_t dim, std::uint64_t seed, double H = 0.4) {
  const FbmSample s = sample_fbm(H, n, 1.0, seed, dim);
  return lift_piecewise_linear(s.values, s.times, dim, 1.0 / H + 0.1);
}

FlowProblem problem(const std::vector<SigmaField>& sig, const RoughPath& rp, Drift drift = Drift::zero()) {
  FlowProblem p{std::move(drift), DriverPair(sig, rp, 1), lattice(8), {}, 1};
  return p;
}

}  // namespace

TEST_CASE("scalar linear RDE matches the one-step product") {
  const RoughPath rp = fbm_lift(128, 1, 3);
  VectorFieldRde rde;
  rde.fields = [](std::span<const double> y) {
    Matrix m(1, 1);
    m(0, 0) = y[0];
    return m;
  };
  rde.jacobian = [](std::span<const double>, std::size_t) { return Matrix(1, 1, 1.0); };
  const std::vector<double> y0{2.0};
  const auto y = solve_rde(rde, rp, y0);
  double expect = 2.0;
  for (std::size_t k = 0; k < rp.segments(); ++k) {
    const double z = rp.increment(k, k + 1)[0];
    expect *= 1.0 + z + 0.5 * z * z;
    CHECK(y[k + 1] == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(std::abs(y.back() - 2.0 * std::exp(rp.increment(0, 128)[0])) <= 0.1 * y.back());
}

TEST_CASE("constant noise translates the lattice") {
  const RoughPath rp = fbm_lift(64, 2, 4);
  const std::vector<SigmaField> sig{SigmaField::constant({0.5, 0.0}), SigmaField::constant({0.1, 0.3})};
  const ParticleFlow f = solve_flow(problem(sig, rp, Drift::constant({0.2, -0.1})));
  const auto z = rp.increment(0, 64);
  const Vec2 shift{0.2 + 0.5 * z[0] + 0.1 * z[1], -0.1 + 0.3 * z[1]};
  for (std::size_t i = 0; i < f.labels.size(); ++i)
    CHECK(torus_distance(f.final_positions()[i], f.labels[i] + shift) <= 1e-12);
  CHECK(f.snapshots() == 65);
}

TEST_CASE("davie step guard") {
  const RoughPath rp = fbm_lift(16, 1, 5);
  const std::vector<SigmaField> sig{SigmaField::constant({100.0, 0.0})};
  CHECK_THROWS_AS(solve_flow(problem(sig, rp)), StepGuardViolation);
}

TEST_CASE("driver pair validation") {
  const RoughPath rp = fbm_lift(16, 2, 6);
  CHECK_THROWS_AS(DriverPair({SigmaField::zero()}, rp, 1), InvalidArgument);
  CHECK_THROWS_AS(DriverPair({SigmaField::zero(), SigmaField::zero()}, rp, 0), InvalidArgument);
  const DriverPair d({SigmaField::mode(0.2, 1, 0), SigmaField::zero()}, rp, -1);
  CHECK(d.divergence_defect() <= 1e-12);
  CHECK(d.c_norm(0) == doctest::Approx(0.2));
  CHECK(sigma_distance(d, d) == 0.0);
}

TEST_CASE("inverse flow composition defect shrinks with the mesh") {
  const FbmSample s = sample_fbm(0.4, 512, 1.0, 7, 2);
  const RoughPath fine = lift_piecewise_linear(s.values, s.times, 2, 2.6);
  const std::vector<SigmaField> sig{SigmaField::mode(0.3, 1, 0), SigmaField::mode(0.2, 1, 1, 0.4)};
  const double coarse = inverse_composition_defect(problem(sig, fine.subsampled(8)), 64);
  const double finer = inverse_composition_defect(problem(sig, fine), 512);
  CHECK(finer < coarse);
  CHECK(finer < 0.05);
}

TEST_CASE("occupancy statistics") {
  const auto grid = lattice(64);
  const OccupancyResult r = occupancy_test(grid, 8);
  CHECK(r.chi_square == doctest::Approx(0.0));
  CHECK(r.dof == 63.0);
  CHECK(r.z < 0.0);
  std::vector<Vec2> clumped(grid.size(), Vec2{0.1, 0.1});
  CHECK(occupancy_test(clumped, 8).z > 100.0);
}

TEST_CASE("osgood envelope") {
  CHECK(osgood_envelope(0.01, 0.0) == doctest::Approx(std::numbers::e * 0.01));
  CHECK(osgood_envelope(0.01, 1.0) == doctest::Approx(std::numbers::e * std::pow(0.01, std::exp(-1.0))));
}

TEST_CASE("flow comparison of identical problems") {
  const RoughPath rp = fbm_lift(64, 1, 8);
  const FlowProblem p = problem({SigmaField::mode(0.3, 1, 1)}, rp);
  const FlowStability st = compare_flows(p, p, 2.8);
  CHECK(st.distance == 0.0);
  CHECK(st.rhs == 0.0);
}

TEST_CASE("perturbed flows satisfy the stability estimate") {
  const RoughPath rp = fbm_lift(128, 1, 9);
  const FlowProblem a = problem({SigmaField::mode(0.3, 1, 1)}, rp);
  FlowProblem b = problem({SigmaField::mode(0.32, 1, 1)}, rp);
  for (auto& x : b.initial) x = wrap(x + Vec2{0.01, 0.0});
  const FlowStability st = compare_flows(a, b, 2.8);
  CHECK(st.distance > 0.0);
  CHECK(st.distance <= st.rhs);
  CHECK(st.initial == doctest::Approx(0.01));
  CHECK(st.sigma == doctest::Approx(0.02 * SigmaField::mode(1.0, 1, 1).c_norm(3)));
}

TEST_CASE("log-lipschitz estimate of a smooth drift") {
  const Drift u = Drift::analytic([](double, Vec2 x) { return Vec2{std::sin(x.y), 0.0}; }, 1.0, 1.0);
  const double L = estimate_log_lipschitz(u, 0.0);
  CHECK(L > 0.0);
  CHECK(L <= 1.0 + 1e-12);
}
