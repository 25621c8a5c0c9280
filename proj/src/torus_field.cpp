#include "roughflow/torus_field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "fft.hpp"
#include "roughflow/error.hpp"

namespace roughflow {

using detail::cplx;

namespace {

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

void require_resolution(std::size_t n) {
  if (!is_power_of_two(n)) throw InvalidArgument("grid resolution must be a power of two >= 2");
}

std::vector<cplx> to_spectrum(const GridField& f) {
  std::vector<cplx> s(f.values().begin(), f.values().end());
  detail::fft(s, 2, f.resolution());
  return s;
}

GridField from_spectrum(std::vector<cplx> s, std::size_t n) {
  detail::ifft(s, 2, n);
  std::vector<double> v(n * n);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = s[k].real();
  return GridField(n, std::move(v));
}

// Wavenumber with the Nyquist bin mapped to zero (for odd-order derivatives).
double odd_wavenumber(std::size_t k, std::size_t n) {
  if (k == n / 2) return 0.0;
  return static_cast<double>(detail::wavenumber(k, n));
}

}  // namespace

GridField::GridField(std::size_t n, double fill) : n_(n), values_(n * n, fill) {
  require_resolution(n);
}

GridField::GridField(std::size_t n, std::vector<double> values) : n_(n), values_(std::move(values)) {
  require_resolution(n);
  if (values_.size() != n * n) throw InvalidArgument("grid field: value count");
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidArgument("grid field: non-finite value");
}

GridField GridField::sample(std::size_t n, const std::function<double(Vec2)>& f) {
  GridField g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g.at(i, j) = f(g.node(i, j));
  return g;
}

double GridField::mean() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s / static_cast<double>(values_.size());
}

double GridField::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double GridField::l1_norm() const {
  double s = 0.0;
  for (double v : values_) s += std::abs(v);
  return s / static_cast<double>(values_.size());
}

GridField& GridField::operator+=(const GridField& o) {
  if (o.n_ != n_) throw InvalidArgument("grid field: resolution mismatch");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

GridField& GridField::operator-=(const GridField& o) {
  if (o.n_ != n_) throw InvalidArgument("grid field: resolution mismatch");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

GridField& GridField::operator*=(double a) {
  for (double& v : values_) v *= a;
  return *this;
}

double VelocityGrid::sup_norm() const {
  double m = 0.0;
  for (std::size_t k = 0; k < u1.values().size(); ++k)
    m = std::max(m, std::hypot(u1.values()[k], u2.values()[k]));
  return m;
}

VelocityGrid biot_savart(const GridField& w, double mean_tolerance) {
  if (std::abs(w.mean()) > mean_tolerance)
    throw InvalidArgument("biot_savart: vorticity must have zero mean on the torus");
  const std::size_t n = w.resolution();
  const auto wh = to_spectrum(w);
  std::vector<cplx> a(n * n), b(n * n);
  const cplx I(0.0, 1.0);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      const double k1 = odd_wavenumber(p, n), k2 = odd_wavenumber(q, n);
      const double kk1 = static_cast<double>(detail::wavenumber(p, n));
      const double kk2 = static_cast<double>(detail::wavenumber(q, n));
      const double k2sum = kk1 * kk1 + kk2 * kk2;
      if (k2sum == 0.0) continue;
      const cplx c = wh[p * n + q] / k2sum;
      a[p * n + q] = I * k2 * c;
      b[p * n + q] = -I * k1 * c;
    }
  return {from_spectrum(std::move(a), n), from_spectrum(std::move(b), n)};
}

VelocityGrid biot_savart_mean_free(const GridField& w) {
  GridField centered(w);
  const double m = w.mean();
  for (double& v : centered.values()) v -= m;
  return biot_savart(centered, std::numeric_limits<double>::infinity());
}

GridField derivative(const GridField& f, int axis) {
  const std::size_t n = f.resolution();
  auto s = to_spectrum(f);
  const cplx I(0.0, 1.0);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      s[p * n + q] *= I * (axis == 0 ? odd_wavenumber(p, n) : odd_wavenumber(q, n));
  return from_spectrum(std::move(s), n);
}

GridField divergence(const VelocityGrid& u) {
  return derivative(u.u1, 0) + derivative(u.u2, 1);
}

GridField curl(const VelocityGrid& u) { return derivative(u.u2, 0) - derivative(u.u1, 1); }

GridField resample(const GridField& f, std::size_t m) {
  require_resolution(m);
  const std::size_t n = f.resolution();
  if (m < n) throw InvalidArgument("resample: target resolution below source");
  if (m == n) return f;
  const auto s = to_spectrum(f);
  std::vector<cplx> t(m * m);
  const double scale = static_cast<double>(m * m) / static_cast<double>(n * n);
  auto targets = [n, m](std::size_t k) {
    // Destination bins (and weights) of source bin k.
    const long w = detail::wavenumber(k, n);
    std::vector<std::pair<std::size_t, double>> out;
    auto bin = [m](long v) { return static_cast<std::size_t>((v + static_cast<long>(m)) % static_cast<long>(m)); };
    if (k == n / 2) {
      out.push_back({bin(w), 0.5});
      out.push_back({bin(-w), 0.5});
    } else {
      out.push_back({bin(w), 1.0});
    }
    return out;
  };
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      for (const auto& [a, wa] : targets(p))
        for (const auto& [b, wb] : targets(q)) t[a * m + b] += s[p * n + q] * (wa * wb * scale);
  return from_spectrum(std::move(t), m);
}

GridField band_limit(const GridField& f, std::size_t cutoff) {
  const std::size_t n = f.resolution();
  auto s = to_spectrum(f);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      const auto k1 = static_cast<std::size_t>(std::abs(detail::wavenumber(p, n)));
      const auto k2 = static_cast<std::size_t>(std::abs(detail::wavenumber(q, n)));
      if (k1 >= cutoff || k2 >= cutoff) s[p * n + q] = 0.0;
    }
  return from_spectrum(std::move(s), n);
}

double gamma_modulus(double r) {
  if (!(r >= 0.0)) throw InvalidArgument("gamma: argument must be nonnegative");
  if (r == 0.0) return 0.0;
  constexpr double inv_e = 1.0 / std::numbers::e;
  if (r < inv_e) return r * (1.0 - std::log(r));
  return r + inv_e;
}

Vec2 biot_savart_kernel(Vec2 z) {
  // Sum of rows of point vortices (each row periodic in x) over the y-images,
  // paired symmetrically, plus the neutralizing background -y/4π².
  const double x = periodic_delta(z.x);
  const double y = periodic_delta(z.y);
  const double cx = std::cos(x), sx = std::sin(x);
  double gx = 0.0, gy = 0.0;
  for (int m = -4; m <= 4; ++m) {
    const double a = y - kTwoPi * m;
    const double denom = std::cosh(a) - cx;
    gx += sx / denom;
    gy += std::sinh(a) / denom;
  }
  constexpr double inv4pi = 1.0 / (4.0 * std::numbers::pi);
  gx *= inv4pi;
  gy = gy * inv4pi - y / (4.0 * std::numbers::pi * std::numbers::pi);
  return {-gy, gx};
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussRule {
  std::vector<double> x, w;
};

GaussRule gauss_legendre(std::size_t n) {
  GaussRule g;
  g.x.resize(n);
  g.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    g.x[i] = z;
    g.w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return g;
}

// ∫ over the fundamental square centered at `center` of g(y) dy in polar
// coordinates, with geometric radial panels refined toward the center.
template <class F>
double polar_integral(Vec2 center, std::size_t resolution, double inner_scale, F&& g) {
  static const GaussRule rule = gauss_legendre(8);
  const std::size_t angular = std::max<std::size_t>(4, resolution / 8);
  const GaussRule arule = gauss_legendre(angular);
  const double pi = std::numbers::pi;
  double total = 0.0;
  for (int sector = 0; sector < 8; ++sector) {
    const double th0 = -pi / 4.0 + sector * pi / 4.0;
    const double th1 = th0 + pi / 4.0;
    for (std::size_t a = 0; a < angular; ++a) {
      const double th = 0.5 * (th0 + th1) + 0.5 * (th1 - th0) * arule.x[a];
      const double wa = 0.5 * (th1 - th0) * arule.w[a];
      const double c = std::cos(th), s = std::sin(th);
      const double rmax = pi / std::max(std::abs(c), std::abs(s));
      // Panels [0, r0], [r0, r0 q], ... up to rmax.
      double r0 = std::min(inner_scale, rmax) * 0.25;
      const std::size_t panels = std::max<std::size_t>(8, resolution / 16);
      const double ratio = std::pow(rmax / r0, 1.0 / static_cast<double>(panels));
      double lo = 0.0, hi = r0;
      double radial = 0.0;
      for (std::size_t p = 0; p <= panels; ++p) {
        for (std::size_t k = 0; k < rule.x.size(); ++k) {
          const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.x[k];
          radial += 0.5 * (hi - lo) * rule.w[k] * r * g(Vec2{center.x + r * c, center.y + r * s});
        }
        lo = hi;
        hi = std::min(rmax, hi * ratio);
      }
      total += wa * radial;
    }
  }
  return total;
}

}  // namespace

KernelLogLipschitzCheck kernel_log_lipschitz_check(Vec2 x, Vec2 x_prime, std::size_t resolution) {
  if (resolution < 16) throw InvalidArgument("kernel check: resolution too small");
  KernelLogLipschitzCheck out;
  out.constant = kKernelLogLipschitzConstant;
  const Vec2 a = periodic_delta(x - x_prime);
  out.distance = norm(a);
  if (out.distance == 0.0) return out;
  // With z = x' - y the integrand is |K(z + a) - K(z)|, singular at z = 0 and
  // z = -a. A smooth partition of unity assigns each singularity its own
  // polar integral.
  auto integrand = [a](Vec2 z) { return norm(biot_savart_kernel(z + a) - biot_savart_kernel(z)); };
  auto share0 = [a](Vec2 z) {
    const double d0 = norm(periodic_delta(z));
    const double d1 = norm(periodic_delta(z + a));
    const double d02 = d0 * d0, d12 = d1 * d1;
    return d12 / (d02 + d12);
  };
  const double scale = out.distance;
  const double part0 = polar_integral({0.0, 0.0}, resolution, scale, [&](Vec2 z) {
    const double w = share0(z);
    return w == 0.0 ? 0.0 : w * integrand(z);
  });
  const double part1 = polar_integral(-a, resolution, scale, [&](Vec2 z) {
    const double w = 1.0 - share0(z);
    return w == 0.0 ? 0.0 : w * integrand(z);
  });
  out.lhs = part0 + part1;
  if (!std::isfinite(out.lhs)) throw Error("kernel check: quadrature failed near the singularity");
  out.rhs = out.constant * gamma_modulus(out.distance);
  return out;
}

GridField mollify(const GridField& f, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("mollify: eta must lie in (0, 1]");
  if (eta < f.spacing())
    throw InvalidArgument("mollify: eta below the grid spacing would alias");
  const std::size_t n = f.resolution();
  const double h = f.spacing();
  GridField kernel(n);
  double mass = 0.0;
  const auto reach = static_cast<long>(std::ceil(eta / h));
  for (long di = -reach; di <= reach; ++di)
    for (long dj = -reach; dj <= reach; ++dj) {
      const double r2 = (di * di + dj * dj) * h * h / (eta * eta);
      if (r2 >= 1.0) continue;
      const double v = std::exp(1.0 / (r2 - 1.0));
      const auto i = static_cast<std::size_t>((di + static_cast<long>(n)) % static_cast<long>(n));
      const auto j = static_cast<std::size_t>((dj + static_cast<long>(n)) % static_cast<long>(n));
      kernel.at(i, j) += v;
      mass += v;
    }
  kernel *= 1.0 / mass;
  auto fs = to_spectrum(f);
  const auto ks = to_spectrum(kernel);
  for (std::size_t k = 0; k < fs.size(); ++k) fs[k] *= ks[k];
  return from_spectrum(std::move(fs), n);
}

double w11_norm(const GridField& f) {
  const GridField dx = derivative(f, 0), dy = derivative(f, 1);
  double s = 0.0;
  for (std::size_t k = 0; k < f.values().size(); ++k)
    s += std::hypot(dx.values()[k], dy.values()[k]);
  return f.l1_norm() + s / static_cast<double>(f.values().size());
}

Interpolator::Interpolator(const GridField& f, InterpolationMethod method)
    : n_(f.resolution()), method_(method) {
  auto s = to_spectrum(f);
  const double inv = 1.0 / static_cast<double>(n_ * n_);
  if (method_ == InterpolationMethod::Spectral) {
    spectrum_ = std::move(s);
    for (auto& v : spectrum_) v *= inv;
    return;
  }
  // Cubic B-spline prefilter: divide by the symbol (4 + 2 cos θ)/6 per axis.
  std::vector<double> symbol(n_);
  for (std::size_t k = 0; k < n_; ++k)
    symbol[k] = (4.0 + 2.0 * std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(n_))) / 6.0;
  for (std::size_t p = 0; p < n_; ++p)
    for (std::size_t q = 0; q < n_; ++q) s[p * n_ + q] /= symbol[p] * symbol[q];
  detail::ifft(s, 2, n_);
  coefficients_.resize(n_ * n_);
  for (std::size_t k = 0; k < s.size(); ++k) coefficients_[k] = s[k].real();
}

namespace {

inline std::array<double, 4> bspline_weights(double t) {
  const double t2 = t * t, t3 = t2 * t, u = 1.0 - t;
  return {u * u * u / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0, (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
          t3 / 6.0};
}

}  // namespace

double Interpolator::operator()(Vec2 x) const {
  const std::size_t n = n_;
  if (method_ == InterpolationMethod::CubicBSpline) {
    const double h = kTwoPi / static_cast<double>(n);
    const double ux = wrap_coordinate(x.x) / h, uy = wrap_coordinate(x.y) / h;
    const double fx = std::floor(ux), fy = std::floor(uy);
    const auto wx = bspline_weights(ux - fx), wy = bspline_weights(uy - fy);
    const long ix = static_cast<long>(fx), iy = static_cast<long>(fy);
    const long nn = static_cast<long>(n);
    double v = 0.0;
    for (int a = 0; a < 4; ++a) {
      const std::size_t i = static_cast<std::size_t>(((ix - 1 + a) % nn + nn) % nn);
      double row = 0.0;
      for (int b = 0; b < 4; ++b) {
        const std::size_t j = static_cast<std::size_t>(((iy - 1 + b) % nn + nn) % nn);
        row += wy[b] * coefficients_[i * n + j];
      }
      v += wx[a] * row;
    }
    return v;
  }
  // Trigonometric interpolant; the Nyquist bin contributes cos((N/2) x).
  std::vector<cplx> ex(n), ey(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = static_cast<double>(detail::wavenumber(k, n));
    if (k == n / 2) {
      ex[k] = std::cos(kk * x.x);
      ey[k] = std::cos(kk * x.y);
    } else {
      ex[k] = std::polar(1.0, kk * x.x);
      ey[k] = std::polar(1.0, kk * x.y);
    }
  }
  cplx total = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    cplx row = 0.0;
    for (std::size_t q = 0; q < n; ++q) row += spectrum_[p * n + q] * ey[q];
    total += ex[p] * row;
  }
  return total.real();
}

void Interpolator::evaluate(std::span<const Vec2> points, std::span<double> out) const {
  if (points.size() != out.size()) throw InvalidArgument("interpolate: output size mismatch");
  for (std::size_t k = 0; k < points.size(); ++k) out[k] = (*this)(points[k]);
}

std::vector<double> interpolate(const GridField& f, std::span<const Vec2> points,
                                InterpolationMethod method) {
  const Interpolator interp(f, method);
  std::vector<double> out(points.size());
  interp.evaluate(points, out);
  return out;
}

GridField deposit(std::span<const Vec2> positions, std::span<const double> weights,
                  std::size_t resolution) {
  require_resolution(resolution);
  if (positions.size() != weights.size()) throw InvalidArgument("deposit: weights size mismatch");
  if (positions.size() < resolution * resolution)
    throw InvalidArgument("deposit: fewer particles than grid cells (undersampling)");
  GridField g(resolution);
  const std::size_t n = resolution;
  const double h = kTwoPi / static_cast<double>(n);
  // mass per particle / cell area = (4π²/count) / h² = N²/count.
  const double scale = static_cast<double>(n * n) / static_cast<double>(positions.size());
  auto v = g.values();
  for (std::size_t p = 0; p < positions.size(); ++p) {
    const double ux = wrap_coordinate(positions[p].x) / h;
    const double uy = wrap_coordinate(positions[p].y) / h;
    const double fx = std::floor(ux), fy = std::floor(uy);
    const double tx = ux - fx, ty = uy - fy;
    const std::size_t i0 = static_cast<std::size_t>(fx) % n, j0 = static_cast<std::size_t>(fy) % n;
    const std::size_t i1 = (i0 + 1) % n, j1 = (j0 + 1) % n;
    const double m = weights[p] * scale;
    v[i0 * n + j0] += m * (1.0 - tx) * (1.0 - ty);
    v[i0 * n + j1] += m * (1.0 - tx) * ty;
    v[i1 * n + j0] += m * tx * (1.0 - ty);
    v[i1 * n + j1] += m * tx * ty;
  }
  return g;
}

double sigma_divergence_defect(const SigmaField& sigma, std::size_t resolution) {
  const GridField s1 = GridField::sample(resolution, [&](Vec2 x) { return sigma(x).x; });
  const GridField s2 = GridField::sample(resolution, [&](Vec2 x) { return sigma(x).y; });
  return divergence({s1, s2}).sup_norm();
}

void write_grid_csv(std::ostream& out, const GridField& f) {
  out << "i,j,value\n";
  out.precision(17);
  const std::size_t n = f.resolution();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out << i << ',' << j << ',' << f.at(i, j) << '\n';
}

GridField read_grid_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "i,j,value") throw FormatError("grid csv: bad header");
  std::vector<std::array<double, 3>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 3> r{};
    std::stringstream ss(line);
    std::string cell;
    for (auto& c : r) {
      if (!std::getline(ss, cell, ',')) throw FormatError("grid csv: short row");
      c = std::stod(cell);
    }
    rows.push_back(r);
  }
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(rows.size()))));
  if (n * n != rows.size() || !is_power_of_two(n)) throw FormatError("grid csv: not a square power-of-two grid");
  GridField g(n);
  for (const auto& r : rows) {
    const auto i = static_cast<std::size_t>(r[0]), j = static_cast<std::size_t>(r[1]);
    if (i >= n || j >= n) throw FormatError("grid csv: index out of range");
    g.at(i, j) = r[2];
  }
  return g;
}

}  // namespace roughflow
