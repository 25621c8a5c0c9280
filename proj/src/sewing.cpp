#include "roughflow/sewing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "roughflow/error.hpp"

namespace roughflow {

namespace {

// Neumaier compensated accumulator.
struct CompensatedSum {
  double sum = 0.0, carry = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

double norm_of(const std::vector<double>& v) { return euclidean_norm(v); }

std::size_t clamp_last(std::size_t last, std::size_t n) { return std::min(last, n - 1); }

}  // namespace

ControlledPath::ControlledPath(RoughPath rp, std::vector<double> values, std::size_t vdim,
                               std::vector<double> derivative)
    : rp_(std::move(rp)), vdim_(vdim), values_(std::move(values)), derivative_(std::move(derivative)) {
  if (vdim_ == 0) throw InvalidArgument("controlled path: value dimension must be positive");
  if (values_.size() != rp_.size() * vdim_)
    throw InvalidArgument("controlled path: values do not match the rough path grid");
  if (derivative_.size() != rp_.size() * vdim_ * rp_.dim())
    throw InvalidArgument("controlled path: derivative does not match the rough path grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidArgument("controlled path: non-finite value");
  for (double v : derivative_)
    if (!std::isfinite(v)) throw InvalidArgument("controlled path: non-finite derivative");
}

std::span<const double> ControlledPath::value(std::size_t k) const {
  return std::span<const double>(values_).subspan(k * vdim_, vdim_);
}

std::span<const double> ControlledPath::derivative(std::size_t k) const {
  const std::size_t w = vdim_ * rp_.dim();
  return std::span<const double>(derivative_).subspan(k * w, w);
}

std::vector<double> ControlledPath::remainder(std::size_t i, std::size_t j) const {
  const auto z = rp_.increment(i, j);
  const auto xi = value(i), xj = value(j), d = derivative(i);
  const std::size_t m = rp_.dim();
  std::vector<double> r(vdim_);
  for (std::size_t a = 0; a < vdim_; ++a) {
    double v = xj[a] - xi[a];
    for (std::size_t c = 0; c < m; ++c) v -= d[a * m + c] * z[c];
    r[a] = v;
  }
  return r;
}

double ControlledPath::remainder_variation(const Localization& loc, std::size_t first,
                                           std::size_t last) const {
  last = clamp_last(last, size());
  const PairNorm norm = [this](std::size_t i, std::size_t j) { return norm_of(remainder(i, j)); };
  return localized_p_variation(size(), norm, rp_.p() / 2.0, loc, first, last).value;
}

double ControlledPath::derivative_variation(std::size_t first, std::size_t last) const {
  last = clamp_last(last, size());
  const std::size_t w = vdim_ * rp_.dim();
  std::span<const double> d(derivative_);
  return p_variation(d.subspan(first * w, (last - first + 1) * w), w, rp_.p()).value;
}

SewingResult sew(std::size_t nodes, std::size_t vdim, const Germ& germ, const Control& omega,
                 const Localization& loc, const SewingOptions& options) {
  if (nodes < 2) throw InvalidArgument("sew: need at least 2 nodes");
  if (!(options.zeta > 0.0 && options.zeta < 1.0)) throw InvalidArgument("sew: zeta must lie in (0, 1)");
  if (omega.size() != nodes) throw InvalidArgument("sew: control grid mismatch");
  const double inv_zeta = 1.0 / options.zeta;
  auto eval = [&](std::size_t i, std::size_t j) {
    auto h = germ(i, j);
    if (h.size() != vdim) throw InvalidArgument("sew: germ has the wrong dimension");
    return h;
  };

  SewingResult out;
  out.vdim = vdim;

  // Coherence check on localized triples.
  auto check = [&](std::size_t s, std::size_t u, std::size_t t) {
    if (!loc.admissible(s, t)) return;
    const auto hst = eval(s, t), hsu = eval(s, u), hut = eval(u, t);
    double d2 = 0.0;
    for (std::size_t a = 0; a < vdim; ++a) {
      const double d = hst[a] - hsu[a] - hut[a];
      d2 += d * d;
    }
    const double defect = std::sqrt(d2);
    out.max_coherence_defect = std::max(out.max_coherence_defect, defect);
    const double allowed = options.coherence_constant * std::pow(omega(s, t), inv_zeta) + options.tolerance;
    if (defect > allowed) throw GermRejected(s, u, t, defect, allowed);
  };
  const double n = static_cast<double>(nodes);
  const double triple_count = n * (n - 1.0) * (n - 2.0) / 6.0;
  if (triple_count <= static_cast<double>(options.max_triples)) {
    for (std::size_t s = 0; s < nodes; ++s)
      for (std::size_t u = s + 1; u < nodes; ++u)
        for (std::size_t t = u + 1; t < nodes; ++t) check(s, u, t);
  } else {
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<std::size_t> pick(0, nodes - 1);
    for (std::size_t k = 0; k < options.max_triples; ++k) {
      std::size_t a[3] = {pick(rng), pick(rng), pick(rng)};
      std::sort(a, a + 3);
      if (a[0] == a[1] || a[1] == a[2]) continue;
      check(a[0], a[1], a[2]);
    }
  }

  // Left-to-right compensated sum over consecutive cells.
  out.path.assign(nodes * vdim, 0.0);
  std::vector<CompensatedSum> acc(vdim);
  for (std::size_t k = 0; k + 1 < nodes; ++k) {
    const auto h = eval(k, k + 1);
    for (std::size_t a = 0; a < vdim; ++a) {
      acc[a].add(h[a]);
      out.path[(k + 1) * vdim + a] = acc[a].value();
    }
  }

  // Local error against the germ.
  auto local = [&](std::size_t i, std::size_t j) {
    if (!loc.admissible(i, j)) return;
    const auto h = eval(i, j);
    double e2 = 0.0;
    for (std::size_t a = 0; a < vdim; ++a) {
      const double e = out.path[j * vdim + a] - out.path[i * vdim + a] - h[a];
      e2 += e * e;
    }
    const double e = std::sqrt(e2);
    out.max_local_error = std::max(out.max_local_error, e);
    const double w = std::pow(omega(i, j), inv_zeta);
    if (w > 0.0)
      out.error_constant = std::max(out.error_constant, e / w);
    else if (e > options.tolerance)
      out.error_constant = std::numeric_limits<double>::infinity();
  };
  if (n * (n - 1.0) / 2.0 <= static_cast<double>(options.max_triples)) {
    for (std::size_t i = 0; i < nodes; ++i)
      for (std::size_t j = i + 1; j < nodes; ++j) local(i, j);
  } else {
    std::mt19937_64 rng(options.seed + 1);
    std::uniform_int_distribution<std::size_t> pick(0, nodes - 1);
    for (std::size_t k = 0; k < options.max_triples; ++k) {
      std::size_t i = pick(rng), j = pick(rng);
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      local(i, j);
    }
  }

  // Same sum over every other node.
  std::vector<CompensatedSum> coarse(vdim);
  std::size_t k = 0;
  for (; k + 2 < nodes; k += 2) {
    const auto h = eval(k, k + 2);
    for (std::size_t a = 0; a < vdim; ++a) coarse[a].add(h[a]);
  }
  if (k + 1 < nodes) {
    const auto h = eval(k, nodes - 1);
    for (std::size_t a = 0; a < vdim; ++a) coarse[a].add(h[a]);
  }
  double gap2 = 0.0;
  for (std::size_t a = 0; a < vdim; ++a) {
    const double d = coarse[a].value() - out.path[(nodes - 1) * vdim + a];
    gap2 += d * d;
  }
  out.refinement_gap = std::sqrt(gap2);
  return out;
}

namespace {

void check_integrand(const ControlledPath& Y, std::size_t vdim) {
  if (Y.vdim() != vdim * Y.dim())
    throw InvalidArgument("rough integral: integrand must take values in L(R^M, V)");
}

std::vector<double> germ_value(const ControlledPath& Y, std::size_t vdim, std::size_t i, std::size_t j) {
  const RoughPath& rp = Y.path();
  const std::size_t m = rp.dim();
  const auto z = rp.increment(i, j);
  const Matrix zz = rp.second_level(i, j);
  const auto y = Y.value(i), d = Y.derivative(i);
  std::vector<double> g(vdim, 0.0);
  for (std::size_t a = 0; a < vdim; ++a) {
    double v = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      v += y[a * m + c] * z[c];
      for (std::size_t b = 0; b < m; ++b) v += d[(a * m + c) * m + b] * zz(b, c);
    }
    g[a] = v;
  }
  return g;
}

}  // namespace

ControlledPath rough_integral(const ControlledPath& Y, std::size_t vdim) {
  check_integrand(Y, vdim);
  const std::size_t n = Y.size();
  std::vector<double> values(n * vdim, 0.0);
  std::vector<CompensatedSum> acc(vdim);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto g = germ_value(Y, vdim, k, k + 1);
    for (std::size_t a = 0; a < vdim; ++a) {
      acc[a].add(g[a]);
      values[(k + 1) * vdim + a] = acc[a].value();
    }
  }
  return ControlledPath(Y.path(), std::move(values), vdim,
                        std::vector<double>(Y.values().begin(), Y.values().end()));
}

RoughIntegralDiagnostic rough_integral_diagnostic(const ControlledPath& Y, std::size_t vdim,
                                                  const Localization& loc) {
  check_integrand(Y, vdim);
  const ControlledPath I = rough_integral(Y, vdim);
  const std::size_t n = Y.size();
  const double p = Y.path().p();
  const Control omega_r = best_control(
      n, [&Y](std::size_t i, std::size_t j) { return norm_of(Y.remainder(i, j)); }, p / 2.0, loc);
  const std::size_t w = Y.vdim() * Y.dim();
  const Control omega_d = best_control(
      n,
      [&Y, w](std::size_t i, std::size_t j) {
        const auto a = Y.derivative(i), b = Y.derivative(j);
        double s = 0.0;
        for (std::size_t k = 0; k < w; ++k) s += (b[k] - a[k]) * (b[k] - a[k]);
        return std::sqrt(s);
      },
      p, loc);
  const Control& omega_z = Y.path().control();
  RoughIntegralDiagnostic out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!loc.admissible(i, j)) continue;
      const auto g = germ_value(Y, vdim, i, j);
      double e2 = 0.0;
      for (std::size_t a = 0; a < vdim; ++a) {
        const double e = I.value(j)[a] - I.value(i)[a] - g[a];
        e2 += e * e;
      }
      const double e = std::sqrt(e2);
      out.max_germ_error = std::max(out.max_germ_error, e);
      const double oz = omega_z(i, j);
      const double rhs = std::pow(omega_r(i, j), 2.0 / p) * std::pow(oz, 1.0 / p) +
                         std::pow(omega_d(i, j), 1.0 / p) * std::pow(oz, 2.0 / p);
      if (rhs > 0.0)
        out.constant = std::max(out.constant, e / rhs);
      else if (e > 1e-13)
        out.constant = std::numeric_limits<double>::infinity();
    }
  return out;
}

IntegralDifference integral_difference_bound(const ControlledPath& X, const ControlledPath& Y,
                                             std::size_t vdim) {
  check_integrand(X, vdim);
  check_integrand(Y, vdim);
  const RoughPath& z1 = X.path();
  const RoughPath& z2 = Y.path();
  const std::size_t n = X.size();
  if (Y.size() != n || z1.dim() != z2.dim()) throw InvalidArgument("integral difference: incompatible grids");
  for (std::size_t k = 0; k < n; ++k)
    if (std::abs(z1.time(k) - z2.time(k)) > 1e-12 * std::max(1.0, z1.horizon()))
      throw InvalidArgument("integral difference: incompatible grids");
  const double p = z1.p();
  const ControlledPath i1 = rough_integral(X, vdim), i2 = rough_integral(Y, vdim);

  std::vector<double> diff(n * vdim);
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = i1.values()[k] - i2.values()[k];
  IntegralDifference out;
  out.measured = p_variation(diff, vdim, p).value;

  auto sup_norm = [n](std::span<const double> a, std::span<const double> b, std::size_t width) {
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < width; ++c) {
        const double d = a[k * width + c] - (b.empty() ? 0.0 : b[k * width + c]);
        s += d * d;
      }
      m = std::max(m, std::sqrt(s));
    }
    return m;
  };
  const std::size_t wv = X.vdim(), wd = X.vdim() * X.dim();
  const double x_minus_y = sup_norm(X.values(), Y.values(), wv);
  const double x_sup = sup_norm(X.values(), {}, wv);
  const double xd_sup = sup_norm(X.derivative(), {}, wd);
  const double xd_minus_yd = sup_norm(X.derivative(), Y.derivative(), wd);

  const Localization none = Localization::none(n);
  const double oz1 = z1.control()(0, n - 1);
  const double oz2 = z2.control()(0, n - 1);
  const double oz12 = difference_control(z1, z2)(0, n - 1);
  const double o_rx_ry =
      localized_p_variation(
          n,
          [&](std::size_t i, std::size_t j) {
            const auto a = X.remainder(i, j), b = Y.remainder(i, j);
            double s = 0.0;
            for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
            return std::sqrt(s);
          },
          p / 2.0, none)
          .value;
  const double o_ry = Y.remainder_variation(none);
  const double o_yd = Y.derivative_variation();
  std::vector<double> dd(n * wd);
  for (std::size_t k = 0; k < dd.size(); ++k) dd[k] = X.derivative()[k] - Y.derivative()[k];
  const double o_xd_yd = p_variation(dd, wd, p).value;

  out.bound = std::pow(x_minus_y, p) * oz1 + std::pow(x_sup, p) * oz12 +
              std::pow(xd_sup, p) * oz12 * oz12 + std::pow(xd_minus_yd, p) * oz2 * oz2 +
              oz1 * o_rx_ry * o_rx_ry + oz12 * o_ry * o_ry + o_yd * oz12 * oz12 +
              oz2 * oz2 * o_xd_yd;
  out.ratio = out.bound > 0.0 ? out.measured / out.bound : (out.measured > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return out;
}

}  // namespace roughflow
