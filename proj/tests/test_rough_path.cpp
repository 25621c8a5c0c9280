#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "roughflow/error.hpp"
#include "roughflow/rough_path.hpp"

using namespace roughflow;

TEST_CASE("lift of an L-shaped path") {
  // (0,0) -> (1,0) -> (1,1)
  const std::vector<double> x{0, 0, 1, 0, 1, 1}, t{0, 1, 2};
  const RoughPath rp = lift_piecewise_linear(x, t, 2);
  const Matrix a = rp.second_level(0, 2);
  CHECK(a(0, 0) == doctest::Approx(0.5));
  CHECK(a(1, 1) == doctest::Approx(0.5));
  CHECK(a(0, 1) == doctest::Approx(1.0));
  CHECK(a(1, 0) == doctest::Approx(0.0));
  CHECK(rp.geometric_defect() <= 1e-15);
}

TEST_CASE("chen relation and geometric symmetry on random lifts") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const FbmSample s = sample_fbm(0.35 + 0.0075 * static_cast<double>(seed), 48, 1.0, seed, 3);
    const RoughPath rp = lift_piecewise_linear(s.values, s.times, 3, 2.9);
    for (std::size_t u = 1; u < 47; u += 5) {
      CHECK(relative_chen_defect(rp, 0, u, 48) <= 1e-12);
      CHECK(symmetry_defect(rp, u, 48) <= 1e-12);
    }
  }
}

TEST_CASE("frozen fbm samples") {
  const FbmSample s = sample_fbm(0.4, 8, 1.0, 1, 2);
  CHECK(s.values[2] == doctest::Approx(-0.51276985935143504).epsilon(1e-14));
  CHECK(s.values[3] == doctest::Approx(0.70400347526762908).epsilon(1e-14));
  CHECK(s.values[5] == doctest::Approx(0.15277348957916215).epsilon(1e-14));
  const FbmSample again = sample_fbm(0.4, 8, 1.0, 1, 2);
  CHECK(again.values == s.values);
}

TEST_CASE("fbm covariance by Monte Carlo") {
  // Var B_T = T^{2H}; Cov(B_{0,T/2}, B_{T/2,T}) = T^{2H} (1 - 2^{1-2H}) / 2.
  const double H = 0.4, T = 2.0;
  const std::size_t runs = 2000;
  double var = 0.0, cov = 0.0;
  for (std::size_t r = 0; r < runs; ++r) {
    const FbmSample s = sample_fbm(H, 32, T, 1000 + r);
    const double a = s.values[16], b = s.values[32] - s.values[16];
    var += s.values[32] * s.values[32];
    cov += a * b;
  }
  var /= runs;
  cov /= runs;
  const double v = std::pow(T, 2 * H), c = v * (1.0 - std::pow(2.0, 1.0 - 2 * H)) / 2.0;
  // four standard errors
  CHECK(std::abs(var - v) <= 4.0 * v * std::sqrt(2.0 / runs));
  const double half = std::pow(T / 2.0, 2 * H);
  CHECK(std::abs(cov - c) <= 4.0 * std::sqrt(half * half + c * c) / std::sqrt(static_cast<double>(runs)));
  CHECK(c < 0.0);
}

TEST_CASE("fbm rejects out-of-range parameters") {
  CHECK_THROWS_AS(sample_fbm(0.3, 8, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_fbm(0.6, 8, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_fbm(0.4, 1, 1.0, 1), InvalidArgument);
}

TEST_CASE("subsampling and refinement keep the second level at common nodes") {
  const FbmSample s = sample_fbm(0.4, 64, 1.0, 5, 2);
  const RoughPath rp = lift_piecewise_linear(s.values, s.times, 2);
  const RoughPath sub = rp.subsampled(4), fine = rp.refined(3);
  CHECK(sub.size() == 17);
  CHECK(fine.size() == 193);
  const Matrix a = rp.second_level(8, 40), b = sub.second_level(2, 10), c = fine.second_level(24, 120);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(b(i, j) == doctest::Approx(a(i, j)).epsilon(1e-12));
      CHECK(c(i, j) == doctest::Approx(a(i, j)).epsilon(1e-12));
    }
  const std::vector<std::size_t> nodes{0, 3, 10, 64};
  const Matrix d = rp.restricted_to(nodes).second_level(1, 3);
  CHECK(d(0, 1) == doctest::Approx(rp.second_level(3, 64)(0, 1)).epsilon(1e-12));
}

TEST_CASE("negation, scaling and reversal") {
  const FbmSample s = sample_fbm(0.45, 32, 1.0, 9, 2);
  const RoughPath rp = lift_piecewise_linear(s.values, s.times, 2);
  const Matrix a = rp.second_level(0, 32);
  CHECK(rp.negated().second_level(0, 32)(0, 1) == doctest::Approx(a(0, 1)));
  CHECK(rp.negated().increment(0, 32)[0] == doctest::Approx(-rp.increment(0, 32)[0]));
  CHECK(rp.scaled(2.0).second_level(0, 32)(1, 0) == doctest::Approx(4.0 * a(1, 0)));
  const RoughPath rev = reverse_rough_path(rp, rp.time(20));
  CHECK(rev.size() == 21);
  CHECK(rev.increment(0, 20)[1] == doctest::Approx(-rp.increment(0, 20)[1]));
  CHECK(rev.geometric_defect() <= 1e-12);
}

TEST_CASE("pair perturbation breaks chen") {
  const FbmSample s = sample_fbm(0.4, 16, 1.0, 2, 2);
  const RoughPath rp = lift_piecewise_linear(s.values, s.times, 2);
  Matrix delta(2, 2);
  delta(0, 1) = 0.1;
  delta(1, 0) = -0.1;
  const RoughPath bad = rp.with_pair_perturbation(0, 16, delta);
  CHECK(std::abs(chen_defect_nodes(bad, 0, 8, 16)(0, 1) - 0.1) <= 1e-12);
  CHECK(difference_control(rp, rp)(0, 16) == 0.0);
  CHECK(difference_control(rp, rp.scaled(1.1))(0, 16) > 0.0);
}

TEST_CASE("rough path csv round trip and validation") {
  const FbmSample s = sample_fbm(0.4, 8, 1.0, 1, 2);
  const RoughPath rp = lift_piecewise_linear(s.values, s.times, 2);
  std::ostringstream out;
  write_rough_path_csv(out, rp);
  const std::string text = out.str();
  CHECK(text.rfind("t,Z_1,Z_2,A_11,A_12,A_21,A_22\n", 0) == 0);
  std::istringstream in(text);
  const RoughPath back = read_rough_path_csv(in);
  CHECK(std::vector<double>(back.values().begin(), back.values().end()) ==
        std::vector<double>(rp.values().begin(), rp.values().end()));
  CHECK(back.second_level(0, 8)(0, 1) == doctest::Approx(rp.second_level(0, 8)(0, 1)).epsilon(1e-14));

  std::string broken = text;
  broken.replace(broken.find("0.13146646432964523"), 19, "0.93146646432964523");
  std::istringstream bad(broken);
  CHECK_THROWS_AS(read_rough_path_csv(bad), FormatError);
  std::istringstream header("t,Z_1\n0,nan\n");
  CHECK_THROWS_AS(read_rough_path_csv(header), FormatError);
}

TEST_CASE("rough path control is superadditive") {
  const FbmSample s = sample_fbm(0.4, 32, 1.0, 4, 2);
  const RoughPath rp = lift_piecewise_linear(s.values, s.times, 2, 2.6);
  CHECK(is_superadditive(rp.control()));
  CHECK(rp.control()(0, 32) >= rp.control()(0, 16) + rp.control()(16, 32) - 1e-12);
}
