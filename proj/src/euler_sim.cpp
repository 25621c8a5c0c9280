#include "roughflow/euler_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fft.hpp"
#include "roughflow/error.hpp"

namespace roughflow {

using detail::cplx;

namespace {

EulerTrajectory finish_euler(ParticleFlow flow, std::size_t resolution) {
  EulerTrajectory out;
  out.resolution = resolution;
  double mean = 0.0;
  for (double w : flow.weights) {
    mean += w;
    out.initial_sup = std::max(out.initial_sup, std::abs(w));
  }
  out.initial_mean = mean / static_cast<double>(flow.weights.size());
  out.max_particle_sup = out.initial_sup;
  out.vorticity.reserve(flow.snapshots());
  for (const auto& x : flow.positions) {
    GridField g = deposit(x, flow.weights, resolution);
    out.max_mean_drift = std::max(out.max_mean_drift, std::abs(g.mean() - out.initial_mean));
    out.max_grid_sup = std::max(out.max_grid_sup, g.sup_norm());
    out.vorticity.push_back(std::move(g));
  }
  out.flow = std::move(flow);
  return out;
}

void require_advecting(const DriverPair& driver) {
  if (driver.sign() != -1)
    throw InvalidArgument("rough Euler: the advecting flow needs driver sign -1");
}

NonlocalOptions nonlocal_options(const EulerOptions& o) {
  return {o.resolution, o.particles_per_side, o.interpolation, o.store_every};
}

}  // namespace

EulerTrajectory solve_rough_euler(const std::function<double(Vec2)>& w0, const DriverPair& driver,
                                  const EulerOptions& options) {
  require_advecting(driver);
  return finish_euler(solve_nonlocal_flow(w0, driver, nonlocal_options(options)), options.resolution);
}

EulerTrajectory solve_rough_euler(const GridField& w0, const DriverPair& driver, const EulerOptions& options) {
  require_advecting(driver);
  return finish_euler(solve_nonlocal_flow(w0, driver, nonlocal_options(options)), options.resolution);
}

namespace {

struct SpectralGrid {
  std::size_t n;
  std::vector<double> k1, k2, k1_odd, k2_odd, ksq;
  std::vector<double> mask;

  explicit SpectralGrid(std::size_t n_) : n(n_) {
    const std::size_t total = n * n;
    k1.resize(total);
    k2.resize(total);
    k1_odd.resize(total);
    k2_odd.resize(total);
    ksq.resize(total);
    mask.resize(total);
    const double cut = static_cast<double>(n) / 3.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q) {
        const std::size_t idx = p * n + q;
        const double a = static_cast<double>(detail::wavenumber(p, n));
        const double b = static_cast<double>(detail::wavenumber(q, n));
        k1[idx] = a;
        k2[idx] = b;
        k1_odd[idx] = p == n / 2 ? 0.0 : a;
        k2_odd[idx] = q == n / 2 ? 0.0 : b;
        ksq[idx] = a * a + b * b;
        mask[idx] = (std::abs(a) < cut && std::abs(b) < cut) ? 1.0 : 0.0;
      }
  }
};

class ViscousRhs {
 public:
  ViscousRhs(const SpectralGrid& g, std::vector<GridField> sigma1, std::vector<GridField> sigma2)
      : g_(g), s1_(std::move(sigma1)), s2_(std::move(sigma2)) {}

  // Returns -mask * F[(u - σ_j ż^j)·∇w] and the transport speed sup.
  std::vector<cplx> operator()(const std::vector<cplx>& wh, std::span<const double> zdot, double& speed) const {
    const std::size_t total = wh.size();
    const cplx I(0.0, 1.0);
    std::vector<cplx> u1(total), u2(total), wx(total), wy(total);
    for (std::size_t k = 0; k < total; ++k) {
      const cplx d1 = I * g_.k1_odd[k] * wh[k], d2 = I * g_.k2_odd[k] * wh[k];
      wx[k] = d1;
      wy[k] = d2;
      if (g_.ksq[k] > 0.0) {
        u1[k] = d2 / g_.ksq[k];
        u2[k] = -d1 / g_.ksq[k];
      }
    }
    detail::ifft(u1, 2, g_.n);
    detail::ifft(u2, 2, g_.n);
    detail::ifft(wx, 2, g_.n);
    detail::ifft(wy, 2, g_.n);
    std::vector<cplx> nl(total);
    speed = 0.0;
    for (std::size_t k = 0; k < total; ++k) {
      double v1 = u1[k].real(), v2 = u2[k].real();
      for (std::size_t j = 0; j < zdot.size(); ++j) {
        v1 -= s1_[j].values()[k] * zdot[j];
        v2 -= s2_[j].values()[k] * zdot[j];
      }
      speed = std::max(speed, std::hypot(v1, v2));
      nl[k] = v1 * wx[k].real() + v2 * wy[k].real();
    }
    detail::fft(nl, 2, g_.n);
    for (std::size_t k = 0; k < total; ++k) nl[k] *= -g_.mask[k];
    return nl;
  }

 private:
  const SpectralGrid& g_;
  std::vector<GridField> s1_, s2_;
};

}  // namespace

ViscousTrajectory solve_viscous_reference(const GridField& w0, const DriverPair& driver, double nu,
                                          const ViscousOptions& options) {
  if (!(nu > 0.0)) throw InvalidArgument("viscous reference: viscosity must be positive");
  if (!(options.max_dt > 0.0)) throw InvalidArgument("viscous reference: max_dt must be positive");
  const std::size_t n = options.resolution;
  const GridField start = w0.resolution() == n ? w0 : resample(w0, n);
  const SpectralGrid g(n);
  std::vector<GridField> s1, s2;
  for (const auto& s : driver.sigmas()) {
    s1.push_back(GridField::sample(n, [&](Vec2 x) { return s(x).x; }));
    s2.push_back(GridField::sample(n, [&](Vec2 x) { return s(x).y; }));
  }
  const ViscousRhs rhs(g, std::move(s1), std::move(s2));
  const RoughPath& rp = driver.path();
  const double h = kTwoPi / static_cast<double>(n);

  std::vector<cplx> wh(start.values().begin(), start.values().end());
  detail::fft(wh, 2, n);

  ViscousTrajectory out;
  out.initial_sup = start.sup_norm();
  auto snapshot = [&](std::size_t node) {
    std::vector<cplx> tmp = wh;
    detail::ifft(tmp, 2, n);
    std::vector<double> v(tmp.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = tmp[k].real();
    GridField f(n, std::move(v));
    if (out.initial_sup > 0.0) out.max_sup_ratio = std::max(out.max_sup_ratio, f.sup_norm() / out.initial_sup);
    out.times.push_back(rp.time(node));
    out.nodes.push_back(node);
    out.vorticity.push_back(std::move(f));
  };
  snapshot(0);

  const std::size_t total = n * n;
  std::vector<double> zdot(driver.dim());
  std::vector<cplx> e_half(total), e_full(total), tmp(total);
  for (std::size_t seg = 0; seg < rp.segments(); ++seg) {
    const double len = rp.time(seg + 1) - rp.time(seg);
    const auto steps = static_cast<std::size_t>(std::ceil(len / options.max_dt - 1e-12));
    const double dt = len / static_cast<double>(std::max<std::size_t>(1, steps));
    const auto dz = rp.increment(seg, seg + 1);
    for (std::size_t j = 0; j < zdot.size(); ++j) zdot[j] = dz[j] / len;
    for (std::size_t k = 0; k < total; ++k) {
      e_half[k] = std::exp(-nu * g.ksq[k] * 0.5 * dt);
      e_full[k] = e_half[k] * e_half[k];
    }
    for (std::size_t s = 0; s < std::max<std::size_t>(1, steps); ++s) {
      double speed = 0.0, ignored = 0.0;
      const auto a = rhs(wh, zdot, speed);
      if (speed * dt / h > options.cfl)
        throw StepGuardViolation("viscous reference: CFL violated (speed " + std::to_string(speed) +
                                 ", dt " + std::to_string(dt) + ")");
      for (std::size_t k = 0; k < total; ++k) tmp[k] = e_half[k] * (wh[k] + 0.5 * dt * a[k]);
      const auto b = rhs(tmp, zdot, ignored);
      for (std::size_t k = 0; k < total; ++k) tmp[k] = e_half[k] * wh[k] + 0.5 * dt * b[k];
      const auto c = rhs(tmp, zdot, ignored);
      for (std::size_t k = 0; k < total; ++k) tmp[k] = e_full[k] * wh[k] + dt * e_half[k] * c[k];
      const auto d = rhs(tmp, zdot, ignored);
      for (std::size_t k = 0; k < total; ++k)
        wh[k] = e_full[k] * wh[k] + dt / 6.0 * (e_full[k] * a[k] + 2.0 * e_half[k] * (b[k] + c[k]) + d[k]);
    }
    if ((seg + 1) % std::max<std::size_t>(1, options.store_every) == 0 || seg + 1 == rp.segments())
      snapshot(seg + 1);
  }
  return out;
}

double TestFunction::value(Vec2 x) const {
  const double th = k1 * x.x + k2 * x.y;
  return sine ? std::sin(th) : std::cos(th);
}

Vec2 TestFunction::gradient(Vec2 x) const {
  const double th = k1 * x.x + k2 * x.y;
  const double d = sine ? std::cos(th) : -std::sin(th);
  return {d * k1, d * k2};
}

Mat2 TestFunction::hessian(Vec2 x) const {
  const double th = k1 * x.x + k2 * x.y;
  const double v = -(sine ? std::sin(th) : std::cos(th));
  return {v * k1 * k1, v * k1 * k2, v * k2 * k1, v * k2 * k2};
}

double TestFunction::wavenumber() const { return std::hypot(k1, k2); }

const std::vector<TestFunction>& default_test_family() {
  static const std::vector<TestFunction> family = [] {
    const int k[][2] = {{1, 0}, {0, 1},  {1, 1}, {1, -1}, {2, 1}, {1, -2}, {2, 2},
                        {0, 3}, {3, 2},  {4, 1}, {-2, 4}, {5, 3}, {4, -6}, {8, 0}};
    std::vector<TestFunction> f;
    for (const auto& v : k) {
      f.push_back({v[0], v[1], false});
      f.push_back({v[0], v[1], true});
    }
    return f;
  }();
  return family;
}

std::vector<double> particle_pairings(std::span<const Vec2> positions, std::span<const double> weights,
                                      const std::vector<TestFunction>& family) {
  if (positions.size() != weights.size()) throw InvalidArgument("pairings: weights size mismatch");
  std::vector<double> out(family.size(), 0.0);
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t f = 0; f < family.size(); ++f) out[f] += weights[i] * family[f].value(positions[i]);
  for (double& v : out) v /= static_cast<double>(positions.size());
  return out;
}

double dual_norm_proxy(std::span<const double> a, std::span<const double> b,
                       const std::vector<TestFunction>& family, int order) {
  if (a.size() != family.size() || b.size() != family.size())
    throw InvalidArgument("dual norm: pairing count mismatch");
  double m = 0.0;
  for (std::size_t f = 0; f < family.size(); ++f)
    m = std::max(m, std::abs(a[f] - b[f]) / std::pow(1.0 + family[f].wavenumber(), order));
  return m;
}

WeakRemainder::WeakRemainder(const ParticleFlow& flow, const DriverPair& driver, std::size_t resolution,
                             std::vector<TestFunction> family, double richardson_tolerance)
    : family_(std::move(family)),
      times_(flow.times),
      nodes_(flow.nodes),
      sub_(flow.snapshots() >= 2 ? driver.path().restricted_to(flow.nodes)
                                 : throw InvalidArgument("weak remainder: need at least 2 snapshots")),
      sign_(driver.sign()),
      m_(driver.dim()),
      p_(driver.path().p()) {
  const std::size_t n = times_.size(), F = family_.size(), M = m_;
  for (double w : flow.weights) sup_weight_ = std::max(sup_weight_, std::abs(w));
  P_.assign(n * F, 0.0);
  Q_.assign(n * F * M, 0.0);
  R_.assign(n * F * M * M, 0.0);
  std::vector<double> integrand(n * F, 0.0);
  const bool vortical = std::any_of(flow.weights.begin(), flow.weights.end(),
                                    [&](double w) { return w != flow.weights.front(); });
  const double inv = 1.0 / static_cast<double>(flow.weights.size());
  std::vector<Vec2> sig(M);
  std::vector<Mat2> jac(M);
  for (std::size_t a = 0; a < n; ++a) {
    const auto& x = flow.positions[a];
    std::vector<Vec2> u;
    if (vortical) {
      const VelocityGrid v = particle_velocity(x, flow.weights, resolution);
      const Interpolator i1(v.u1, InterpolationMethod::CubicBSpline), i2(v.u2, InterpolationMethod::CubicBSpline);
      u.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) u[i] = {i1(x[i]), i2(x[i])};
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double w = flow.weights[i] * inv;
      if (w == 0.0) continue;
      for (std::size_t j = 0; j < M; ++j) {
        sig[j] = driver.sigma(j)(x[i]);
        jac[j] = driver.sigma(j).jacobian(x[i]);
      }
      for (std::size_t f = 0; f < F; ++f) {
        const TestFunction& psi = family_[f];
        const Vec2 grad = psi.gradient(x[i]);
        P_[a * F + f] += w * psi.value(x[i]);
        if (vortical) integrand[a * F + f] += w * dot(u[i], grad);
        if (M == 0) continue;
        const Mat2 H = psi.hessian(x[i]);
        for (std::size_t j = 0; j < M; ++j) {
          Q_[(a * F + f) * M + j] += w * dot(sig[j], grad);
          for (std::size_t l = 0; l < M; ++l) {
            // (σ_l·∇)(σ_j·∇)ψ = ∇ψ·(Dσ_j σ_l) + σ_lᵀ H σ_j
            const double v = dot(grad, jac[j] * sig[l]) + dot(sig[l], H * sig[j]);
            R_[((a * F + f) * M + l) * M + j] += w * v;
          }
        }
      }
    }
  }
  mu_.assign(n * F, 0.0);
  for (std::size_t a = 1; a < n; ++a) {
    const double dt = times_[a] - times_[a - 1];
    for (std::size_t f = 0; f < F; ++f)
      mu_[a * F + f] = mu_[(a - 1) * F + f] + 0.5 * dt * (integrand[(a - 1) * F + f] + integrand[a * F + f]);
  }
  if (n >= 3) {
    for (std::size_t f = 0; f < F; ++f) {
      double coarse = 0.0;
      std::size_t a = 0;
      for (; a + 2 < n; a += 2)
        coarse += 0.5 * (times_[a + 2] - times_[a]) * (integrand[a * F + f] + integrand[(a + 2) * F + f]);
      if (a + 1 < n) coarse += mu_[(n - 1) * F + f] - mu_[a * F + f];
      quadrature_gap_ = std::max(quadrature_gap_, std::abs(coarse - mu_[(n - 1) * F + f]));
    }
    if (quadrature_gap_ > richardson_tolerance)
      throw Error("weak remainder: drift quadrature under-resolved (Richardson gap " +
                  std::to_string(quadrature_gap_) + "); store snapshots more densely");
  }

  // Pair tables, with 𝕫 accumulated by Chen along each row.
  norm_.assign(n * n, 0.0);
  sup_.assign(n * n, 0.0);
  std::vector<double> row(F), z(M, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    Matrix zz(M, M);
    std::fill(z.begin(), z.end(), 0.0);
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto dz = sub_.increment(b - 1, b);
      zz += sub_.second_level(b - 1, b);
      zz.add_outer(z, dz);
      for (std::size_t j = 0; j < M; ++j) z[j] += dz[j];
      remainder_row(a, b, z, zz, row);
      double nm = 0.0, sp = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        sp = std::max(sp, std::abs(row[f]));
        nm = std::max(nm, std::abs(row[f]) / std::pow(1.0 + family_[f].wavenumber(), 3));
      }
      norm_[a * n + b] = nm;
      sup_[a * n + b] = sp;
    }
  }
  const Control& oz = sub_.control();
  base_ = oz + Control::interval_power(sub_.times(), p_);
  omega_a_ = oz.scaled(std::pow(driver.c_norm(3), p_));
}

void WeakRemainder::remainder_row(std::size_t a, std::size_t b, const std::vector<double>& z, const Matrix& zz,
                                  std::vector<double>& out) const {
  const std::size_t F = family_.size(), M = m_;
  const double eps = static_cast<double>(sign_);
  for (std::size_t f = 0; f < F; ++f) {
    double v = P_[b * F + f] - P_[a * F + f] - (mu_[b * F + f] - mu_[a * F + f]);
    for (std::size_t j = 0; j < M; ++j) {
      v -= eps * Q_[(a * F + f) * M + j] * z[j];
      for (std::size_t l = 0; l < M; ++l) v -= eps * eps * R_[((a * F + f) * M + l) * M + j] * zz(l, j);
    }
    out[f] = v;
  }
}

std::span<const double> WeakRemainder::pairings(std::size_t a) const {
  if (a >= times_.size()) throw InvalidArgument("weak remainder: snapshot out of range");
  return std::span<const double>(P_).subspan(a * family_.size(), family_.size());
}

double WeakRemainder::value(std::size_t a, std::size_t b, std::size_t f) const {
  if (a > b || b >= times_.size() || f >= family_.size()) throw InvalidArgument("weak remainder: bad index");
  std::vector<double> row(family_.size());
  remainder_row(a, b, sub_.increment(a, b), sub_.second_level(a, b), row);
  return row[f];
}

double WeakRemainder::drift(std::size_t a, std::size_t b, std::size_t f) const {
  if (a > b || b >= times_.size() || f >= family_.size()) throw InvalidArgument("weak remainder: bad index");
  return mu_[b * family_.size() + f] - mu_[a * family_.size() + f];
}

double WeakRemainder::norm(std::size_t a, std::size_t b) const { return norm_.at(a * times_.size() + b); }
double WeakRemainder::sup(std::size_t a, std::size_t b) const { return sup_.at(a * times_.size() + b); }

double WeakRemainder::additivity_defect(std::size_t max_triples) const {
  const std::size_t n = times_.size(), F = family_.size(), M = m_;
  if (n < 3) return 0.0;
  const double eps = static_cast<double>(sign_);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const double all = static_cast<double>(n) * (n - 1) * (n - 2) / 6.0;
  const bool exhaustive = all <= static_cast<double>(max_triples);
  double worst = 0.0;
  std::vector<double> rst(F), rsu(F), rut(F);
  auto check = [&](std::size_t s, std::size_t u, std::size_t t) {
    const auto zst = sub_.increment(s, t), zsu = sub_.increment(s, u), zut = sub_.increment(u, t);
    const Matrix ast = sub_.second_level(s, t), asu = sub_.second_level(s, u), aut = sub_.second_level(u, t);
    remainder_row(s, t, zst, ast, rst);
    remainder_row(s, u, zsu, asu, rsu);
    remainder_row(u, t, zut, aut, rut);
    for (std::size_t f = 0; f < F; ++f) {
      const double lhs = rst[f] - rsu[f] - rut[f];
      double rhs = 0.0;
      for (std::size_t j = 0; j < M; ++j) {
        // w†_{s,u}(A¹*_{u,t}ψ) = ε Z^j_{u,t} [w_{s,u}(σ_j·∇ψ) - ε Z^l_{s,u} w_s((σ_l∇)(σ_j∇)ψ)]
        double dagger = Q_[(u * F + f) * M + j] - Q_[(s * F + f) * M + j];
        for (std::size_t l = 0; l < M; ++l) {
          dagger -= eps * zsu[l] * R_[((s * F + f) * M + l) * M + j];
          rhs += eps * eps * (R_[((u * F + f) * M + l) * M + j] - R_[((s * F + f) * M + l) * M + j]) * aut(l, j);
        }
        rhs += eps * zut[j] * dagger;
      }
      // δw♮ carries the sign opposite to the driver terms it absorbs.
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  };
  if (exhaustive) {
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t u = s + 1; u < n; ++u)
        for (std::size_t t = u + 1; t < n; ++t) check(s, u, t);
  } else {
    for (std::size_t k = 0; k < max_triples; ++k) {
      std::size_t v[3] = {pick(rng), pick(rng), pick(rng)};
      std::sort(v, v + 3);
      if (v[0] == v[1] || v[1] == v[2]) continue;
      check(v[0], v[1], v[2]);
    }
  }
  return worst;
}

double WeakRemainder::localized_variation(double threshold) const {
  const std::size_t n = times_.size();
  const Localization loc = std::isfinite(threshold) ? Localization(base_, threshold) : Localization::none(n);
  return localized_p_variation(
             n, [this, n](std::size_t a, std::size_t b) { return norm_[a * n + b]; }, p_ / 3.0, loc)
      .value;
}

double WeakRemainder::apriori_rhs(std::size_t a, std::size_t b) const {
  const double W = sup_weight_, oa = omega_a_(a, b), dt = times_.at(b) - times_.at(a);
  return std::pow(W, p_ / 3.0) * oa +
         std::pow(W, 2.0 * p_ / 3.0) * std::pow(dt, p_ / 3.0) * (std::cbrt(oa) + std::pow(oa, 2.0 / 3.0));
}

ScalingFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("loglog fit: size mismatch");
  ScalingFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0 && y[k] > 0.0)) continue;
    const double a = std::log(x[k]), b = std::log(y[k]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
    syy += b * b;
    ++n;
    fit.x.push_back(x[k]);
    fit.y.push_back(y[k]);
  }
  fit.points = n;
  if (n < 2) return fit;
  const double dn = static_cast<double>(n);
  const double vx = sxx - sx * sx / dn, vy = syy - sy * sy / dn, cxy = sxy - sx * sy / dn;
  if (vx <= 0.0) return fit;
  fit.slope = cxy / vx;
  fit.intercept = (sy - fit.slope * sx) / dn;
  fit.r2 = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
  return fit;
}

ScalingFit remainder_scaling(const WeakRemainder& rem, double floor) {
  const std::size_t n = rem.snapshots();
  const double p = rem.p();
  const Localization none = Localization::none(n);
  const PairNorm norm = [&rem](std::size_t a, std::size_t b) { return rem.norm(a, b); };
  std::vector<double> xs, ys;
  for (std::size_t h = 1; h < n; h *= 2) {
    double lx = 0.0, ly = 0.0;
    std::size_t count = 0;
    for (std::size_t a = 0; a + h < n; a += h) {
      const double x = rem.apriori_rhs(a, a + h);
      const double y = std::pow(localized_p_variation(n, norm, p / 3.0, none, a, a + h).value, 3.0 / p);
      if (!(x > 0.0 && y > floor)) continue;
      lx += std::log(x);
      ly += std::log(y);
      ++count;
    }
    if (count == 0) continue;
    xs.push_back(std::exp(lx / static_cast<double>(count)));
    ys.push_back(std::exp(ly / static_cast<double>(count)));
  }
  return loglog_fit(xs, ys);
}

SolutionVariation solution_variation_diagnostic(const WeakRemainder& rem, const ParticleFlow& flow,
                                                double threshold) {
  const std::size_t n = rem.snapshots();
  if (flow.snapshots() != n) throw InvalidArgument("solution variation: snapshot mismatch");
  const Localization loc =
      std::isfinite(threshold) ? Localization(rem.base_control(), threshold) : Localization::none(n);
  const double p = rem.p();
  const PairNorm w_norm = [&rem](std::size_t a, std::size_t b) {
    return dual_norm_proxy(rem.pairings(a), rem.pairings(b), rem.family(), 1);
  };
  const Control omega_w = best_control(n, w_norm, p, loc);
  const Control omega_nat =
      best_control(n, [&rem](std::size_t a, std::size_t b) { return rem.norm(a, b); }, p / 3.0, loc);
  const Control& omega_a = rem.driver_control();
  SolutionVariation out;
  out.omega_w = omega_w(0, n - 1);
  out.omega_a = omega_a(0, n - 1);
  out.omega_natural = omega_nat(0, n - 1);
  const double lead = std::pow(1.0 + rem.sup_weight(), 2.0 * p);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      if (!loc.admissible(a, b)) continue;
      const double dt = rem.times()[b] - rem.times()[a];
      const double rhs = lead * (std::pow(dt, p) + omega_a(a, b) + omega_nat(a, b));
      const double lhs = omega_w(a, b);
      if (rhs > 0.0)
        out.constant = std::max(out.constant, lhs / rhs);
      else if (lhs > 0.0)
        out.constant = std::numeric_limits<double>::infinity();
    }
  return out;
}

}  // namespace roughflow
