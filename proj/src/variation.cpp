#include "roughflow/variation.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "roughflow/error.hpp"

namespace roughflow {

Control::Control(std::size_t nodes, Kind kind,
                 std::function<double(std::size_t, std::size_t)> evaluator)
    : nodes_(nodes),
      kind_(kind),
      eval_(std::make_shared<const std::function<double(std::size_t, std::size_t)>>(
          std::move(evaluator))) {}

double Control::operator()(std::size_t i, std::size_t j) const {
  if (i > j || j >= nodes_) throw InvalidArgument("control queried outside its grid");
  if (i == j) return 0.0;
  return (*eval_)(i, j);
}

Control Control::interval_power(std::span<const double> times, double exponent, double scale) {
  std::vector<double> t(times.begin(), times.end());
  const std::size_t n = t.size();
  return Control(n, Kind::IntervalPower, [t = std::move(t), exponent, scale](
                                                    std::size_t i, std::size_t j) {
    return scale * std::pow(t[j] - t[i], exponent);
  });
}

Control Control::tabulated(std::size_t nodes, std::vector<double> table) {
  if (table.size() != nodes * nodes) throw InvalidArgument("tabulated control: table size");
  return Control(nodes, Kind::Tabulated, [table = std::move(table), nodes](std::size_t i,
                                                                           std::size_t j) {
    return table[i * nodes + j];
  });
}

Control Control::scaled(double factor) const {
  Control self = *this;
  return Control(nodes_, Kind::Scaled,
                 [self, factor](std::size_t i, std::size_t j) { return factor * self(i, j); });
}

Control operator+(const Control& a, const Control& b) {
  if (a.size() != b.size()) throw InvalidArgument("control sum: grid mismatch");
  return Control(a.size(), Control::Kind::Sum,
                 [a, b](std::size_t i, std::size_t j) { return a(i, j) + b(i, j); });
}

Localization::Localization(Control base_control, double L)
    : base(std::move(base_control)), threshold(L) {
  if (!(L > 0.0)) throw InvalidArgument("localization threshold must be positive");
  if (!base.valid()) throw InvalidArgument("localization needs a base control");
}

Localization Localization::none(std::size_t nodes) {
  Localization loc;
  loc.base = Control(nodes, Control::Kind::Custom, [](std::size_t, std::size_t) { return 0.0; });
  loc.threshold = std::numeric_limits<double>::infinity();
  return loc;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// V(j) = max_{first <= i < j, admissible(i,j)} V(i) + |g_{i,j}|^p, V(first) = 0.
// Terms are added left to right so the value of any fixed partition is
// reproduced bit-for-bit by a left-to-right sum.
void variation_dp(std::size_t first, std::size_t last, const PairNorm& norm, double p,
                  const Localization& loc, std::vector<double>& best,
                  std::vector<std::size_t>* argmax) {
  const std::size_t n = last - first + 1;
  best.assign(n, kNegInf);
  if (argmax) argmax->assign(n, 0);
  best[0] = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    double bj = kNegInf;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < j; ++i) {
      if (best[i] == kNegInf) continue;
      if (!loc.admissible(first + i, first + j)) continue;
      const double cand = best[i] + std::pow(norm(first + i, first + j), p);
      if (cand > bj) {
        bj = cand;
        arg = i;
      }
    }
    best[j] = bj;
    if (argmax) (*argmax)[j] = arg;
  }
}

}  // namespace

PVarResult p_variation(std::span<const double> values, std::size_t dim, double p) {
  if (dim == 0 || values.empty() || values.size() % dim != 0)
    throw InvalidArgument("p_variation: empty or ragged input");
  if (!(p >= 1.0)) throw InvalidArgument("p_variation: p must be >= 1 for one-index paths");
  const std::size_t n = values.size() / dim;
  PairNorm norm = [values, dim](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double v = values[j * dim + d] - values[i * dim + d];
      s += v * v;
    }
    return std::sqrt(s);
  };
  return localized_p_variation(n, norm, p, Localization::none(n));
}

PVarResult p_variation(std::span<const double> values, double p) {
  return p_variation(values, 1, p);
}

PVarResult localized_p_variation(std::size_t nodes, const PairNorm& norm, double p,
                                 const Localization& loc, std::size_t first, std::size_t last) {
  if (nodes == 0) throw InvalidArgument("localized_p_variation: empty grid");
  if (!(p > 0.0)) throw InvalidArgument("localized_p_variation: p must be positive");
  if (last == std::numeric_limits<std::size_t>::max()) last = nodes - 1;
  if (first > last || last >= nodes) throw InvalidArgument("localized_p_variation: bad range");
  PVarResult out;
  if (first == last) {
    out.partition = {first};
    return out;
  }
  std::vector<double> best;
  std::vector<std::size_t> arg;
  variation_dp(first, last, norm, p, loc, best, &arg);
  if (best.back() == kNegInf)
    throw InfeasibleLocalization("no partition satisfies the localization threshold");
  out.value = best.back();
  std::size_t k = last - first;
  out.partition.push_back(last);
  while (k != 0) {
    k = arg[k];
    out.partition.push_back(first + k);
  }
  std::reverse(out.partition.begin(), out.partition.end());
  return out;
}

std::vector<double> localized_variation_row(std::size_t nodes, const PairNorm& norm, double p,
                                            const Localization& loc, std::size_t first) {
  if (first >= nodes) throw InvalidArgument("localized_variation_row: bad start");
  std::vector<double> best;
  variation_dp(first, nodes - 1, norm, p, loc, best, nullptr);
  return best;
}

namespace {

struct RowCache {
  std::size_t nodes;
  PairNorm norm;
  double p;
  Localization loc;
  std::mutex mutex;
  std::vector<std::vector<double>> rows;

  double get(std::size_t i, std::size_t j) {
    std::lock_guard lock(mutex);
    if (rows[i].empty()) rows[i] = localized_variation_row(nodes, norm, p, loc, i);
    return rows[i][j - i];
  }
};

}  // namespace

Control best_control(std::size_t nodes, PairNorm norm, double p, Localization loc) {
  if (nodes < 1) throw InvalidArgument("best_control: empty grid");
  // Every subinterval is feasible iff every single step is admissible.
  for (std::size_t k = 0; k + 1 < nodes; ++k)
    if (!loc.admissible(k, k + 1))
      throw InfeasibleLocalization("best_control: step " + std::to_string(k) +
                                   " exceeds the localization threshold");
  auto cache = std::make_shared<RowCache>();
  cache->nodes = nodes;
  cache->norm = std::move(norm);
  cache->p = p;
  cache->loc = std::move(loc);
  cache->rows.resize(nodes);
  return Control(nodes, Control::Kind::BestControl,
                 [cache](std::size_t i, std::size_t j) { return cache->get(i, j); });
}

double superadditivity_defect(const Control& control) {
  const std::size_t n = control.size();
  double worst = 0.0;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 2; t < n; ++t) {
      const double w = control(s, t);
      for (std::size_t u = s + 1; u < t; ++u)
        worst = std::max(worst, control(s, u) + control(u, t) - w);
    }
  return worst;
}

bool is_superadditive(const Control& control) {
  const std::size_t n = control.size();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 2; t < n; ++t) {
      const double w = control(s, t);
      for (std::size_t u = s + 1; u < t; ++u)
        if (control(s, u) + control(u, t) > w + 1e-12 + 1e-10 * std::abs(w)) return false;
    }
  return true;
}

double gronwall_alpha(const GronwallConstants& c) {
  return std::min(1.0, 1.0 / (c.L * std::pow(2.0 * c.C * std::exp(2.0), c.k)));
}

namespace {

void check_gronwall(const Control& w1, const Control& w2, const Control& w3,
                    const GronwallConstants& c) {
  if (w1.size() != w2.size() || w1.size() != w3.size())
    throw InvalidArgument("rough gronwall: controls on different grids");
  if (!(c.L > 0.0)) throw InvalidArgument("rough gronwall: L must be positive");
  if (!(c.C >= 1.0)) throw InvalidArgument("rough gronwall: C must be >= 1");
  if (!(c.C_prime >= 0.0)) throw InvalidArgument("rough gronwall: C' must be nonnegative");
  if (!(c.k_prime >= 1.0)) throw InvalidArgument("rough gronwall: k' must be >= 1");
  if (!(c.k > c.k_prime)) throw InvalidArgument("rough gronwall: requires k > k'");
}

}  // namespace

double rough_gronwall_bound(double G0, const Control& omega1, const Control& omega2,
                            const Control& omega3, const GronwallConstants& c) {
  check_gronwall(omega1, omega2, omega3, c);
  const std::size_t n = omega1.size();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t)
      if (omega2(s, t) > omega1(s, t) * (1.0 + 1e-12) + 1e-15)
        throw InvalidArgument("rough gronwall: hypothesis omega2 <= omega1 violated at (" +
                              std::to_string(s) + ", " + std::to_string(t) + ")");
  const double alpha = gronwall_alpha(c);
  const double theta = c.k_prime / c.k;
  double sup3 = 0.0, sup2 = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double damp = std::exp(-omega1(0, t) / (alpha * c.L));
    sup3 = std::max(sup3, omega3(0, t) * damp);
    sup2 = std::max(sup2, std::pow(omega2(0, t), (1.0 - theta) / c.k_prime) * damp);
  }
  return 2.0 * std::exp(omega1(0, n - 1) / (alpha * c.L)) * (G0 + sup3 + sup2 + c.C_prime);
}

double gronwall_hypothesis_defect(std::span<const double> G, const Control& omega1,
                                  const Control& omega2, const Control& omega3,
                                  const GronwallConstants& c) {
  check_gronwall(omega1, omega2, omega3, c);
  if (G.size() != omega1.size()) throw InvalidArgument("rough gronwall: G grid mismatch");
  const double supG = *std::max_element(G.begin(), G.end());
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < G.size(); ++s)
    for (std::size_t t = s + 1; t < G.size(); ++t) {
      const double w1 = omega1(s, t);
      if (w1 > c.L) continue;
      const double rhs = c.C * (supG + c.C_prime) * std::pow(w1, 1.0 / c.k) +
                         std::pow(omega2(s, t), 1.0 / c.k_prime) + omega3(s, t);
      worst = std::max(worst, (G[t] - G[s]) - rhs);
    }
  return worst;
}

}  // namespace roughflow
