#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "roughflow/error.hpp"
#include "roughflow/rde_solver.hpp"
#include "roughflow/sigma_field.hpp"
#include "roughflow/torus_field.hpp"

using namespace roughflow;

namespace {

GridField trig_field(std::size_t n) {
  return GridField::sample(n, [](Vec2 x) {
    return std::cos(x.x + 2 * x.y) + 0.5 * std::sin(3 * x.x - x.y) - 0.25 * std::cos(2 * x.y);
  });
}

}  // namespace

TEST_CASE("biot-savart of a single mode") {
  const GridField w = GridField::sample(32, [](Vec2 x) { return std::cos(x.x); });
  const VelocityGrid u = biot_savart(w);
  for (std::size_t i = 0; i < 32; ++i) {
    const Vec2 x = w.node(i, 5);
    CHECK(std::abs(u.u1.at(i, 5)) <= 1e-13);
    CHECK(u.u2.at(i, 5) == doctest::Approx(std::sin(x.x)));
  }
}

TEST_CASE("velocity is divergence free with curl equal to the vorticity") {
  const GridField w = trig_field(32);
  const VelocityGrid u = biot_savart(w);
  CHECK(divergence(u).sup_norm() <= 1e-12);
  CHECK((curl(u) - w).sup_norm() <= 1e-12);
}

TEST_CASE("biot-savart requires mean zero") {
  CHECK_THROWS_AS(biot_savart(GridField(16, 1.0)), InvalidArgument);
  const VelocityGrid u = biot_savart_mean_free(GridField(16, 1.0));
  CHECK(u.sup_norm() == 0.0);
}

TEST_CASE("deposition conserves mass") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pos(0.0, kTwoPi), wt(-1.0, 2.0);
  std::vector<Vec2> x(4096);
  std::vector<double> w(4096);
  double mean = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = {pos(rng), pos(rng)};
    w[k] = wt(rng);
    mean += w[k] / 4096.0;
  }
  CHECK(deposit(x, w, 32).mean() == doctest::Approx(mean).epsilon(1e-13));
  CHECK_THROWS_AS(deposit(std::span<const Vec2>(x).first(100), std::span<const double>(w).first(100), 32),
                  InvalidArgument);
}

TEST_CASE("deposition from the lattice reproduces nodal values") {
  const GridField f = trig_field(16);
  const auto pts = lattice(16);
  std::vector<double> w(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) w[k] = f.values()[k];
  CHECK((deposit(pts, w, 16) - f).sup_norm() <= 1e-13);
}

TEST_CASE("spectral interpolation is exact on trigonometric polynomials") {
  const GridField f = trig_field(16);
  const std::vector<Vec2> pts{{0.3, 1.7}, {5.9, 0.01}, {3.3, 3.3}};
  const auto v = interpolate(f, pts, InterpolationMethod::Spectral);
  const auto b = interpolate(trig_field(64), pts, InterpolationMethod::CubicBSpline);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double exact =
        std::cos(pts[k].x + 2 * pts[k].y) + 0.5 * std::sin(3 * pts[k].x - pts[k].y) - 0.25 * std::cos(2 * pts[k].y);
    CHECK(v[k] == doctest::Approx(exact).epsilon(1e-12));
    CHECK(std::abs(b[k] - exact) <= 1e-3);
  }
}

TEST_CASE("resampling keeps band-limited fields") {
  const GridField f = trig_field(16);
  CHECK((resample(f, 64) - trig_field(64)).sup_norm() <= 1e-12);
  CHECK_THROWS_AS(resample(trig_field(64), 16), InvalidArgument);
  CHECK(std::abs(band_limit(f, 3).at(0, 0) - 0.75) <= 1e-12);
  CHECK(band_limit(f, 2).sup_norm() <= 1e-12);
}

TEST_CASE("norms on the normalized torus") {
  const GridField f = GridField::sample(64, [](Vec2 x) { return std::cos(x.x); });
  CHECK(f.l1_norm() == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-3));
  CHECK(f.mean() == doctest::Approx(0.0).epsilon(1e-14));
  // ‖∇cos x‖_{L¹} = ‖sin x‖_{L¹}
  CHECK(w11_norm(f) == doctest::Approx(4.0 / std::numbers::pi).epsilon(1e-3));
}

TEST_CASE("gamma modulus") {
  CHECK(gamma_modulus(0.0) == 0.0);
  CHECK(gamma_modulus(0.1) == doctest::Approx(0.1 * (1.0 - std::log(0.1))));
  CHECK(gamma_modulus(1.0) == doctest::Approx(1.0 + 1.0 / std::numbers::e));
  const double r = 1.0 / std::numbers::e;
  CHECK(gamma_modulus(r * (1 - 1e-12)) == doctest::Approx(gamma_modulus(r)).epsilon(1e-10));
  CHECK_THROWS_AS(gamma_modulus(-1.0), InvalidArgument);
}

TEST_CASE("kernel is log-lipschitz") {
  for (double d : {1e-3, 1e-2, 0.1, 0.5}) {
    const auto c = kernel_log_lipschitz_check({0.5, 0.7}, {0.5 + d, 0.7});
    CHECK(c.distance == doctest::Approx(d));
    CHECK(c.lhs <= c.rhs);
    CHECK(c.lhs > 0.0);
  }
}

TEST_CASE("grid csv round trip") {
  const GridField f = trig_field(8);
  std::ostringstream out;
  write_grid_csv(out, f);
  CHECK(out.str().rfind("i,j,value\n", 0) == 0);
  std::istringstream in(out.str());
  CHECK((read_grid_csv(in) - f).sup_norm() == 0.0);
  std::istringstream bad("i,j,value\n0,0,1\n");
  CHECK_THROWS_AS(read_grid_csv(bad), FormatError);
}

TEST_CASE("sigma catalog") {
  const SigmaField s = SigmaField::parse("mode:0.3,1,1,0.7+const:0.1,-0.2");
  CHECK(s.terms().size() == 2);
  CHECK(sigma_divergence_defect(s, 32) <= 1e-12);
  const Vec2 x{0.4, 1.1};
  const Vec2 v = s(x);
  CHECK(v.x == doctest::Approx(0.3 * std::sin(1.5 + 0.7) + 0.1));
  CHECK(v.y == doctest::Approx(-0.3 * std::sin(1.5 + 0.7) - 0.2));
  // ‖a sin(k·x) k⊥‖_{C³} = a (|k| + |k|² + |k|³ + |k|⁴)
  const double k = std::sqrt(2.0);
  CHECK(SigmaField::mode(0.3, 1, 1).c_norm(3) == doctest::Approx(0.3 * (k + 2 + 2 * k + 4)));
  CHECK(SigmaField::parse(s.id()).id() == s.id());
  CHECK_THROWS_AS(SigmaField::parse("mode:1"), InvalidArgument);
}

TEST_CASE("sigma difference merges matching terms") {
  const SigmaField a = SigmaField::parse("mode:0.3,1,1+const:0.5,0");
  const SigmaField b = SigmaField::parse("mode:0.25,1,1+const:0.5,0");
  const SigmaField d = difference(a, b);
  REQUIRE(d.terms().size() == 1);
  CHECK(d.terms()[0].amplitude == doctest::Approx(0.05));
  CHECK(d.c_norm(3) == doctest::Approx(0.05 * SigmaField::mode(1.0, 1, 1).c_norm(3)));
  CHECK(difference(a, a).is_zero());
  const SigmaField e = difference(SigmaField::parse("mode:0.3,2,0"), SigmaField::parse("mode:0.3,1,1"));
  CHECK(e.terms().size() == 2);
}
