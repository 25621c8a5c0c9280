#include "roughflow/rde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>

#include "roughflow/error.hpp"

namespace roughflow {

Drift::Drift()
    : batch_([](double, std::span<const Vec2>, std::span<Vec2> out) {
        std::fill(out.begin(), out.end(), Vec2{});
      }) {}

Drift::Drift(Batch batch, double sup_norm, double log_lipschitz)
    : batch_(std::move(batch)), sup_norm_(sup_norm), log_lipschitz_(log_lipschitz), zero_(false) {
  if (!batch_) throw InvalidArgument("drift: empty evaluator");
  if (!(sup_norm_ >= 0.0) || !std::isfinite(sup_norm_)) throw InvalidArgument("drift: sup norm must be finite");
}

Drift Drift::constant(Vec2 c) {
  return Drift([c](double, std::span<const Vec2>, std::span<Vec2> out) { std::fill(out.begin(), out.end(), c); },
               norm(c), 0.0);
}

Drift Drift::analytic(std::function<Vec2(double, Vec2)> f, double sup_norm, double log_lipschitz) {
  return Drift(
      [f = std::move(f)](double t, std::span<const Vec2> x, std::span<Vec2> out) {
        for (std::size_t k = 0; k < x.size(); ++k) out[k] = f(t, x[k]);
      },
      sup_norm, log_lipschitz);
}

Drift Drift::grid(const VelocityGrid& u, InterpolationMethod method) {
  auto i1 = std::make_shared<Interpolator>(u.u1, method);
  auto i2 = std::make_shared<Interpolator>(u.u2, method);
  Drift d(
      [i1, i2](double, std::span<const Vec2> x, std::span<Vec2> out) {
        for (std::size_t k = 0; k < x.size(); ++k) out[k] = {(*i1)(x[k]), (*i2)(x[k])};
      },
      u.sup_norm(), 0.0);
  d.log_lipschitz_ = estimate_log_lipschitz(d, 0.0);
  return d;
}

Drift Drift::mollified_grid(const VelocityGrid& u, double eta, InterpolationMethod method) {
  return grid({mollify(u.u1, eta), mollify(u.u2, eta)}, method);
}

void Drift::evaluate(double t, std::span<const Vec2> x, std::span<Vec2> out) const {
  if (x.size() != out.size()) throw InvalidArgument("drift: output size mismatch");
  batch_(t, x, out);
}

Vec2 Drift::operator()(double t, Vec2 x) const {
  Vec2 out;
  batch_(t, std::span<const Vec2>(&x, 1), std::span<Vec2>(&out, 1));
  return out;
}

Drift Drift::shifted(Vec2 delta) const {
  Batch inner = batch_;
  Drift d(
      [inner, delta](double t, std::span<const Vec2> x, std::span<Vec2> out) {
        inner(t, x, out);
        for (auto& v : out) v += delta;
      },
      sup_norm_ + norm(delta), log_lipschitz_);
  return d;
}

Drift Drift::time_reversed(double pivot) const {
  if (zero_) return *this;
  Batch inner = batch_;
  return Drift(
      [inner, pivot](double s, std::span<const Vec2> x, std::span<Vec2> out) {
        inner(pivot - s, x, out);
        for (auto& v : out) v = -v;
      },
      sup_norm_, log_lipschitz_);
}

double estimate_log_lipschitz(const Drift& u, double t, std::size_t samples, std::uint64_t seed) {
  if (u.is_zero()) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec2> x(samples), y(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    x[k] = {kTwoPi * unit(rng), kTwoPi * unit(rng)};
    const double d = (k % 2 == 0) ? std::pow(10.0, -4.0 + 3.0 * unit(rng)) : std::numbers::pi * unit(rng);
    const double th = kTwoPi * unit(rng);
    y[k] = wrap(x[k] + d * Vec2{std::cos(th), std::sin(th)});
  }
  std::vector<Vec2> ux(samples), uy(samples);
  u.evaluate(t, x, ux);
  u.evaluate(t, y, uy);
  double best = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double g = gamma_modulus(torus_distance(x[k], y[k]));
    if (g > 0.0) best = std::max(best, norm(ux[k] - uy[k]) / g);
  }
  return best;
}

std::vector<Vec2> lattice(std::size_t per_side) {
  if (per_side == 0) throw InvalidArgument("lattice: empty");
  std::vector<Vec2> out;
  out.reserve(per_side * per_side);
  const double h = kTwoPi / static_cast<double>(per_side);
  for (std::size_t i = 0; i < per_side; ++i)
    for (std::size_t j = 0; j < per_side; ++j)
      out.push_back({h * static_cast<double>(i), h * static_cast<double>(j)});
  return out;
}

void davie_step(std::span<Vec2> positions, std::span<const Vec2> drift_values, std::size_t k,
                const DriverPair& driver) {
  const RoughPath& rp = driver.path();
  if (k + 1 >= rp.size()) throw InvalidArgument("davie_step: segment index out of range");
  if (!drift_values.empty() && drift_values.size() != positions.size())
    throw InvalidArgument("davie_step: drift values size mismatch");
  const double dt = rp.time(k + 1) - rp.time(k);
  const std::size_t m = driver.dim();
  const auto z = rp.increment(k, k + 1);
  const Matrix a = rp.second_level(k, k + 1);

  double reach = 0.0;
  for (std::size_t j = 0; j < m; ++j) reach += driver.sigma(j).sup_norm() * std::abs(z[j]);
  if (reach > std::numbers::pi)
    throw StepGuardViolation("davie_step: noise displacement " + std::to_string(reach) +
                             " exceeds half the domain; refine the step grid");

  const double eps = static_cast<double>(driver.sign());
  bool constant = true;
  for (const auto& s : driver.sigmas()) constant = constant && s.is_constant();
  std::vector<Vec2> sig(m);
  std::vector<Mat2> jac(m);
  for (std::size_t p = 0; p < positions.size(); ++p) {
    Vec2 x = positions[p];
    Vec2 next = x;
    if (!drift_values.empty()) next += dt * drift_values[p];
    for (std::size_t j = 0; j < m; ++j) {
      sig[j] = driver.sigma(j)(x);
      next += (eps * z[j]) * sig[j];
    }
    if (!constant) {
      for (std::size_t j = 0; j < m; ++j) jac[j] = driver.sigma(j).jacobian(x);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          if (a(i, j) == 0.0) continue;
          next += (eps * eps * a(i, j)) * (jac[j] * sig[i]);
        }
    }
    positions[p] = wrap(next);
  }
}

void davie_step(std::span<Vec2> positions, std::size_t k, const FlowProblem& problem) {
  if (problem.drift.is_zero()) {
    davie_step(positions, {}, k, problem.driver);
    return;
  }
  std::vector<Vec2> u(positions.size());
  problem.drift.evaluate(problem.driver.path().time(k), positions, u);
  davie_step(positions, u, k, problem.driver);
}

namespace {

ParticleFlow start_flow(std::vector<Vec2> labels, std::vector<double> weights, const RoughPath& rp) {
  ParticleFlow f;
  if (weights.empty()) weights.assign(labels.size(), 1.0);
  if (weights.size() != labels.size()) throw InvalidArgument("flow: weights size mismatch");
  for (auto& x : labels) {
    if (!std::isfinite(x.x) || !std::isfinite(x.y)) throw InvalidArgument("flow: non-finite initial position");
    x = wrap(x);
  }
  f.labels = labels;
  f.weights = std::move(weights);
  f.nodes.push_back(0);
  f.times.push_back(rp.time(0));
  f.positions.push_back(std::move(labels));
  return f;
}

bool store_now(std::size_t step, std::size_t stride, std::size_t steps) {
  return step == steps || step % std::max<std::size_t>(1, stride) == 0;
}

}  // namespace

ParticleFlow solve_flow(const FlowProblem& problem) {
  const RoughPath& rp = problem.driver.path();
  ParticleFlow f = start_flow(problem.initial, problem.weights, rp);
  std::vector<Vec2> x = f.positions.front();
  const std::size_t steps = rp.segments();
  for (std::size_t k = 0; k < steps; ++k) {
    davie_step(x, k, problem);
    if (store_now(k + 1, problem.store_every, steps)) {
      f.nodes.push_back(k + 1);
      f.times.push_back(rp.time(k + 1));
      f.positions.push_back(x);
    }
  }
  return f;
}

ParticleFlow solve_inverse_flow(const FlowProblem& problem, std::size_t t_node,
                                std::span<const Vec2> points) {
  const RoughPath& rp = problem.driver.path();
  if (t_node >= rp.size()) throw InvalidArgument("inverse flow: node out of range");
  std::vector<Vec2> start = points.empty() ? problem.initial : std::vector<Vec2>(points.begin(), points.end());
  std::vector<double> weights = points.empty() ? problem.weights : std::vector<double>{};
  if (t_node == 0) {
    ParticleFlow f = start_flow(std::move(start), std::move(weights), rp);
    f.direction = ParticleFlow::Direction::Backward;
    return f;
  }
  const double t = rp.time(t_node);
  FlowProblem back{problem.drift.time_reversed(t), problem.driver.with_path(reverse_rough_path(rp, t)),
                   std::move(start), std::move(weights), problem.store_every};
  ParticleFlow f = solve_flow(back);
  f.direction = ParticleFlow::Direction::Backward;
  return f;
}

double inverse_composition_defect(const FlowProblem& problem, std::size_t t_node) {
  const RoughPath& rp = problem.driver.path();
  if (t_node >= rp.size()) throw InvalidArgument("composition defect: node out of range");
  FlowProblem head = problem;
  head.driver = problem.driver.with_path(t_node == 0 ? rp : rp.restricted(0, t_node));
  head.store_every = std::numeric_limits<std::size_t>::max();
  std::vector<Vec2> forward = problem.initial;
  for (auto& x : forward) x = wrap(x);
  if (t_node > 0) forward = solve_flow(head).final_positions();
  const ParticleFlow back = solve_inverse_flow(head, t_node, forward);
  double worst = 0.0;
  const auto& y = back.final_positions();
  for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, torus_distance(y[i], problem.initial[i]));
  return worst;
}

std::vector<double> solve_rde(const VectorFieldRde& rde, const RoughPath& rp, std::span<const double> y0) {
  const std::size_t d = rde.dim, m = rp.dim();
  if (y0.size() != d) throw InvalidArgument("solve_rde: initial value dimension");
  if (!rde.fields || !rde.jacobian) throw InvalidArgument("solve_rde: missing vector fields");
  std::vector<double> out(rp.size() * d);
  std::copy(y0.begin(), y0.end(), out.begin());
  std::vector<double> y(y0.begin(), y0.end()), next(d);
  for (std::size_t k = 0; k < rp.segments(); ++k) {
    const auto z = rp.increment(k, k + 1);
    const Matrix a = rp.second_level(k, k + 1);
    const Matrix s = rde.fields(y);
    if (s.rows() != d || s.cols() != m) throw InvalidArgument("solve_rde: fields have the wrong shape");
    next = y;
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t j = 0; j < m; ++j) next[r] += s(r, j) * z[j];
    for (std::size_t j = 0; j < m; ++j) {
      const Matrix jac = rde.jacobian(y, j);
      for (std::size_t i = 0; i < m; ++i) {
        if (a(i, j) == 0.0) continue;
        for (std::size_t r = 0; r < d; ++r) {
          double v = 0.0;
          for (std::size_t c = 0; c < d; ++c) v += jac(r, c) * s(c, i);
          next[r] += v * a(i, j);
        }
      }
    }
    for (double v : next)
      if (!std::isfinite(v)) throw Error("solve_rde: solution blew up");
    y = next;
    std::copy(y.begin(), y.end(), out.begin() + static_cast<std::ptrdiff_t>((k + 1) * d));
  }
  return out;
}

VelocityGrid particle_velocity(std::span<const Vec2> positions, std::span<const double> weights,
                               std::size_t resolution) {
  return biot_savart_mean_free(deposit(positions, weights, resolution));
}

namespace {

ParticleFlow nonlocal_from_weights(std::vector<double> weights, const DriverPair& driver,
                                   const NonlocalOptions& options) {
  if (options.particles_per_side < options.resolution)
    throw InvalidArgument("nonlocal flow: fewer particles than grid cells (undersampling)");
  const RoughPath& rp = driver.path();
  ParticleFlow f = start_flow(lattice(options.particles_per_side), std::move(weights), rp);
  std::vector<Vec2> x = f.positions.front();
  std::vector<Vec2> u(x.size());
  const bool vortical = std::any_of(f.weights.begin(), f.weights.end(),
                                    [&](double w) { return w != f.weights.front(); });
  const std::size_t steps = rp.segments();
  for (std::size_t k = 0; k < steps; ++k) {
    if (vortical) {
      const VelocityGrid v = particle_velocity(x, f.weights, options.resolution);
      const Interpolator i1(v.u1, options.interpolation), i2(v.u2, options.interpolation);
      for (std::size_t p = 0; p < x.size(); ++p) u[p] = {i1(x[p]), i2(x[p])};
      davie_step(x, u, k, driver);
    } else {
      davie_step(x, {}, k, driver);
    }
    if (store_now(k + 1, options.store_every, steps)) {
      f.nodes.push_back(k + 1);
      f.times.push_back(rp.time(k + 1));
      f.positions.push_back(x);
    }
  }
  return f;
}

}  // namespace

ParticleFlow solve_nonlocal_flow(const std::function<double(Vec2)>& w0, const DriverPair& driver,
                                 const NonlocalOptions& options) {
  const auto labels = lattice(options.particles_per_side);
  std::vector<double> weights(labels.size());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    weights[k] = w0(labels[k]);
    if (!std::isfinite(weights[k])) throw InvalidArgument("nonlocal flow: non-finite initial vorticity");
  }
  return nonlocal_from_weights(std::move(weights), driver, options);
}

ParticleFlow solve_nonlocal_flow(const GridField& w0, const DriverPair& driver,
                                 const NonlocalOptions& options) {
  if (options.particles_per_side < w0.resolution())
    throw InvalidArgument("nonlocal flow: particle lattice coarser than the vorticity grid");
  const GridField fine = resample(w0, options.particles_per_side);
  return nonlocal_from_weights(std::vector<double>(fine.values().begin(), fine.values().end()), driver,
                               options);
}

FlowVariation flow_variation_diagnostic(const ParticleFlow& flow, const DriverPair& driver, double q,
                                        double threshold, std::size_t stride) {
  if (flow.snapshots() < 2) return {};
  if (!(q >= driver.path().p())) throw InvalidArgument("flow variation: q must be at least p");
  const RoughPath sub = driver.path().restricted_to(flow.nodes);
  const std::size_t n = sub.size();
  Localization loc = Localization::none(n);
  if (std::isfinite(threshold)) {
    const Control base = sub.control() + Control::interval_power(sub.times(), sub.p());
    loc = Localization(base, threshold);
  }
  const double eps = static_cast<double>(driver.sign());
  FlowVariation out;
  std::vector<double> path(n * 2);
  std::vector<Vec2> unwrapped(n);
  for (std::size_t i = 0; i < flow.labels.size(); i += std::max<std::size_t>(1, stride)) {
    unwrapped[0] = flow.positions[0][i];
    for (std::size_t k = 1; k < n; ++k)
      unwrapped[k] = unwrapped[k - 1] + periodic_delta(flow.positions[k][i] - flow.positions[k - 1][i]);
    for (std::size_t k = 0; k < n; ++k) {
      path[2 * k] = unwrapped[k].x;
      path[2 * k + 1] = unwrapped[k].y;
    }
    out.path_variation = std::max(out.path_variation, p_variation(path, 2, q).value);
    const PairNorm rem = [&](std::size_t a, std::size_t b) {
      Vec2 r = unwrapped[b] - unwrapped[a];
      const auto z = sub.increment(a, b);
      for (std::size_t j = 0; j < driver.dim(); ++j) r -= (eps * z[j]) * driver.sigma(j)(unwrapped[a]);
      return norm(r);
    };
    out.remainder_variation =
        std::max(out.remainder_variation, localized_p_variation(n, rem, q / 2.0, loc).value);
  }
  return out;
}

double default_localization_threshold(const DriverPair& driver, double q) {
  const double c2 = driver.c_norm(2);
  if (c2 == 0.0) return std::numeric_limits<double>::infinity();
  const double root = 0.5 / std::pow(c2, q / 2.0);
  return root * root * (1.0 - 1e-9);
}

OccupancyResult occupancy_test(std::span<const Vec2> positions, std::size_t boxes) {
  if (boxes == 0 || positions.empty()) throw InvalidArgument("occupancy: empty input");
  std::vector<double> counts(boxes * boxes, 0.0);
  const double h = kTwoPi / static_cast<double>(boxes);
  for (const Vec2& p : positions) {
    const auto i = std::min(boxes - 1, static_cast<std::size_t>(wrap_coordinate(p.x) / h));
    const auto j = std::min(boxes - 1, static_cast<std::size_t>(wrap_coordinate(p.y) / h));
    counts[i * boxes + j] += 1.0;
  }
  const double cells = static_cast<double>(boxes * boxes);
  const double mean = static_cast<double>(positions.size()) / cells;
  const double sd = std::sqrt(mean * (1.0 - 1.0 / cells));
  OccupancyResult out;
  for (double c : counts) {
    out.chi_square += (c - mean) * (c - mean) / mean;
    if (sd > 0.0) out.max_deviation = std::max(out.max_deviation, std::abs(c - mean) / sd);
  }
  out.dof = cells - 1.0;
  out.z = out.dof > 0.0 ? (out.chi_square - out.dof) / std::sqrt(2.0 * out.dof) : 0.0;
  return out;
}

double osgood_envelope(double z0, double t) {
  if (!(z0 >= 0.0) || !(t >= 0.0)) throw InvalidArgument("osgood envelope: arguments must be nonnegative");
  return std::numbers::e * std::pow(z0, std::exp(-t));
}

namespace {

// Node indices of `coarse` inside `fine`, or empty when the grids are not nested.
std::vector<std::size_t> embed(const RoughPath& coarse, const RoughPath& fine) {
  std::vector<std::size_t> idx;
  idx.reserve(coarse.size());
  try {
    for (double t : coarse.times()) idx.push_back(fine.node_index(t));
  } catch (const InvalidArgument&) {
    return {};
  }
  return idx;
}

}  // namespace

FlowStability compare_flows(const FlowProblem& a, const FlowProblem& b, double q, double constant) {
  if (a.initial.size() != b.initial.size()) throw InvalidArgument("compare flows: particle counts differ");
  if (a.driver.dim() != b.driver.dim()) throw InvalidArgument("compare flows: driver dimensions differ");
  if (!(q > a.driver.path().p())) throw InvalidArgument("compare flows: q must exceed p");
  const RoughPath& ra = a.driver.path();
  const RoughPath& rb = b.driver.path();
  const bool a_coarse = ra.size() <= rb.size();
  const RoughPath& coarse = a_coarse ? ra : rb;
  const RoughPath& fine = a_coarse ? rb : ra;
  const auto idx = embed(coarse, fine);
  if (idx.empty()) throw InvalidArgument("compare flows: step grids are not nested");
  const RoughPath fine_on_coarse = fine.restricted_to(idx);

  FlowProblem pa = a, pb = b;
  pa.store_every = pb.store_every = 1;
  const ParticleFlow fa = solve_flow(pa), fb = solve_flow(pb);
  const ParticleFlow& fc = a_coarse ? fa : fb;
  const ParticleFlow& ff = a_coarse ? fb : fa;

  FlowStability out;
  out.constant = constant;
  std::vector<double> dist(coarse.size());
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    const auto& xc = fc.positions[k];
    const auto& xf = ff.positions[idx[k]];
    double d = 0.0;
    for (std::size_t i = 0; i < xc.size(); ++i) d = std::max(d, torus_distance(xc[i], xf[i]));
    dist[k] = d;
    out.distance = std::max(out.distance, d);
  }
  for (std::size_t i = 0; i < a.initial.size(); ++i)
    out.initial = std::max(out.initial, torus_distance(wrap(a.initial[i]), wrap(b.initial[i])));
  out.sigma = sigma_distance(a.driver, b.driver, 3);
  const RoughPath& za = a_coarse ? coarse : fine_on_coarse;
  const RoughPath& zb = a_coarse ? fine_on_coarse : coarse;
  const double w12 = difference_control(za, zb)(0, coarse.size() - 1);
  out.driver = std::pow(w12, 1.0 / (2.0 * q));

  const double horizon = coarse.horizon();
  if (!(a.drift.is_zero() && b.drift.is_zero())) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, kTwoPi);
    std::vector<Vec2> pts(1024);
    for (auto& p : pts) p = {unit(rng), unit(rng)};
    std::vector<Vec2> ua(pts.size()), ub(pts.size());
    const std::size_t times = std::min<std::size_t>(coarse.size(), 33);
    double sup = 0.0;
    for (std::size_t s = 0; s < times; ++s) {
      const std::size_t k = (coarse.size() - 1) * s / std::max<std::size_t>(1, times - 1);
      const double t = coarse.time(k);
      a.drift.evaluate(t, pts, ua);
      b.drift.evaluate(t, pts, ub);
      for (std::size_t p = 0; p < pts.size(); ++p) sup = std::max(sup, norm(ua[p] - ub[p]));
    }
    out.drift = sup * horizon;
  }
  for (std::size_t k = 0; k + 1 < coarse.size(); ++k)
    out.gamma_integral +=
        0.5 * (coarse.time(k + 1) - coarse.time(k)) * (gamma_modulus(dist[k]) + gamma_modulus(dist[k + 1]));
  out.rhs = constant * (out.initial + out.sigma + out.driver + out.drift + out.gamma_integral);
  return out;
}

}  // namespace roughflow
