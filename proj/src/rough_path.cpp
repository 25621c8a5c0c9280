#include "roughflow/rough_path.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>

#include "fft.hpp"
#include "roughflow/error.hpp"

namespace roughflow {

namespace {

void validate_grid(const std::vector<double>& times) {
  if (times.size() < 2) throw InvalidArgument("rough path needs at least 2 nodes");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(times[k])) throw InvalidArgument("rough path: non-finite time");
    if (k > 0 && !(times[k] > times[k - 1]))
      throw InvalidArgument("rough path: times must be strictly increasing");
  }
}

}  // namespace

RoughPath::RoughPath(std::vector<double> times, std::vector<double> values, std::size_t dim,
                     std::vector<Matrix> segment_levels, double p)
    : times_(std::move(times)),
      values_(std::move(values)),
      dim_(dim),
      levels_(std::move(segment_levels)),
      p_(p) {
  validate_grid(times_);
  if (dim_ == 0) throw InvalidArgument("rough path dimension must be positive");
  if (values_.size() != times_.size() * dim_) throw InvalidArgument("rough path: values size");
  if (levels_.size() != times_.size() - 1)
    throw InvalidArgument("rough path: need one second level per segment");
  for (const auto& m : levels_)
    if (m.rows() != dim_ || m.cols() != dim_)
      throw InvalidArgument("rough path: second level shape");
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidArgument("rough path: non-finite value");
  if (!(p_ >= 2.0 && p_ < 3.0)) throw InvalidArgument("rough path: p must lie in [2, 3)");
}

std::span<const double> RoughPath::value(std::size_t k) const {
  if (k >= size()) throw InvalidArgument("rough path: node index out of range");
  return std::span<const double>(values_).subspan(k * dim_, dim_);
}

std::size_t RoughPath::node_index(double t) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(horizon()));
  auto it = std::lower_bound(times_.begin(), times_.end(), t - tol);
  if (it == times_.end() || std::abs(*it - t) > tol)
    throw InvalidArgument("time " + std::to_string(t) + " is not a grid node");
  return static_cast<std::size_t>(it - times_.begin());
}

std::vector<double> RoughPath::increment(std::size_t i, std::size_t j) const {
  if (i >= size() || j >= size()) throw InvalidArgument("rough path: node index out of range");
  std::vector<double> z(dim_);
  for (std::size_t d = 0; d < dim_; ++d) z[d] = values_[j * dim_ + d] - values_[i * dim_ + d];
  return z;
}

Matrix RoughPath::second_level(std::size_t i, std::size_t j) const {
  if (i > j || j >= size()) throw InvalidArgument("rough path: bad node pair");
  Matrix acc(dim_, dim_);
  std::vector<double> z(dim_, 0.0);
  for (std::size_t k = i; k < j; ++k) {
    const auto dz = increment(k, k + 1);
    acc += levels_[k];
    acc.add_outer(z, dz);
    for (std::size_t d = 0; d < dim_; ++d) z[d] += dz[d];
  }
  if (!perturbations_.empty()) {
    auto it = perturbations_.find({i, j});
    if (it != perturbations_.end()) acc += it->second;
  }
  return acc;
}

RoughPath RoughPath::restricted(std::size_t first, std::size_t last) const {
  if (first >= last || last >= size()) throw InvalidArgument("rough path: bad restriction");
  std::vector<std::size_t> nodes(last - first + 1);
  for (std::size_t k = 0; k < nodes.size(); ++k) nodes[k] = first + k;
  return restricted_to(nodes);
}

RoughPath RoughPath::restricted_to(std::span<const std::size_t> nodes) const {
  if (nodes.size() < 2) throw InvalidArgument("rough path: restriction needs 2 nodes");
  std::vector<double> t, v;
  std::vector<Matrix> lv;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] >= size() || (k > 0 && nodes[k] <= nodes[k - 1]))
      throw InvalidArgument("rough path: restriction nodes must increase");
    t.push_back(times_[nodes[k]]);
    const auto z = value(nodes[k]);
    v.insert(v.end(), z.begin(), z.end());
    if (k > 0) lv.push_back(second_level(nodes[k - 1], nodes[k]));
  }
  return RoughPath(std::move(t), std::move(v), dim_, std::move(lv), p_);
}

RoughPath RoughPath::subsampled(std::size_t stride) const {
  if (stride == 0 || segments() % stride != 0)
    throw InvalidArgument("rough path: stride must divide the number of segments");
  std::vector<std::size_t> nodes;
  for (std::size_t k = 0; k < size(); k += stride) nodes.push_back(k);
  return restricted_to(nodes);
}

RoughPath RoughPath::refined(std::size_t factor) const {
  if (factor == 0) throw InvalidArgument("rough path: refinement factor must be positive");
  std::vector<double> t, v;
  std::vector<Matrix> lv;
  for (std::size_t k = 0; k < segments(); ++k) {
    const auto dz = increment(k, k + 1);
    const Matrix sym_half = 0.5 * Matrix::outer(dz, dz);
    const Matrix antisym = levels_[k] - sym_half;
    for (std::size_t m = 0; m < factor; ++m) {
      const double a = static_cast<double>(m) / static_cast<double>(factor);
      t.push_back(times_[k] + a * (times_[k + 1] - times_[k]));
      for (std::size_t d = 0; d < dim_; ++d) v.push_back(values_[k * dim_ + d] + a * dz[d]);
      std::vector<double> piece(dz);
      for (double& x : piece) x /= static_cast<double>(factor);
      Matrix lvl = 0.5 * Matrix::outer(piece, piece);
      if (m == 0) lvl += antisym;
      lv.push_back(std::move(lvl));
    }
  }
  t.push_back(times_.back());
  const auto last = value(size() - 1);
  v.insert(v.end(), last.begin(), last.end());
  return RoughPath(std::move(t), std::move(v), dim_, std::move(lv), p_);
}

RoughPath RoughPath::negated() const { return scaled(-1.0); }

RoughPath RoughPath::scaled(double a) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= a;
  std::vector<Matrix> lv(levels_);
  for (auto& m : lv) m *= a * a;
  RoughPath out(times_, std::move(v), dim_, std::move(lv), p_);
  for (const auto& [key, m] : perturbations_) out.perturbations_[key] = (a * a) * m;
  return out;
}

RoughPath RoughPath::with_pair_perturbation(std::size_t i, std::size_t j,
                                            const Matrix& delta) const {
  if (i >= j || j >= size()) throw InvalidArgument("rough path: bad perturbation pair");
  if (delta.rows() != dim_ || delta.cols() != dim_)
    throw InvalidArgument("rough path: perturbation shape");
  RoughPath out(*this);
  out.control_.reset();
  auto [it, inserted] = out.perturbations_.try_emplace({i, j}, delta);
  if (!inserted) it->second += delta;
  return out;
}

namespace {

struct PairTables {
  std::size_t n = 0;
  std::vector<double> first;   // |Z_{i,j}|
  std::vector<double> second;  // |𝕫_{i,j}|
};

std::shared_ptr<PairTables> build_pair_tables(const RoughPath& rp) {
  auto tab = std::make_shared<PairTables>();
  const std::size_t n = rp.size(), m = rp.dim();
  tab->n = n;
  tab->first.assign(n * n, 0.0);
  tab->second.assign(n * n, 0.0);
  std::vector<double> z(m);
  for (std::size_t i = 0; i < n; ++i) {
    Matrix acc(m, m);
    std::fill(z.begin(), z.end(), 0.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto dz = rp.increment(j - 1, j);
      acc += rp.segment_level(j - 1);
      acc.add_outer(z, dz);
      for (std::size_t d = 0; d < m; ++d) z[d] += dz[d];
      tab->first[i * n + j] = euclidean_norm(z);
      tab->second[i * n + j] = acc.norm();
    }
  }
  return tab;
}

}  // namespace

const Control& RoughPath::control() const {
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  if (control_) return *control_;
  const std::size_t n = size();
  // Pair tables are built on first evaluation, not here.
  auto holder = std::make_shared<std::pair<std::once_flag, std::shared_ptr<PairTables>>>();
  auto self = std::make_shared<RoughPath>(*this);
  self->control_.reset();
  auto tables = [holder, self]() -> const PairTables& {
    std::call_once(holder->first, [&] {
      holder->second = build_pair_tables(*self);
      for (const auto& [key, m] : self->perturbations_)
        holder->second->second[key.first * self->size() + key.second] =
            self->second_level(key.first, key.second).norm();
    });
    return *holder->second;
  };
  PairNorm first = [tables, n](std::size_t i, std::size_t j) { return tables().first[i * n + j]; };
  PairNorm second = [tables, n](std::size_t i, std::size_t j) {
    return tables().second[i * n + j];
  };
  const Control a = best_control(n, first, p_, Localization::none(n));
  const Control b = best_control(n, second, p_ / 2.0, Localization::none(n));
  control_ = std::make_shared<Control>(n, Control::Kind::RoughPathVariation,
                                       [a, b](std::size_t i, std::size_t j) {
                                         return a(i, j) + b(i, j);
                                       });
  return *control_;
}

Control difference_control(const RoughPath& a, const RoughPath& b) {
  const std::size_t n = a.size(), m = a.dim();
  if (b.size() != n || b.dim() != m) throw InvalidArgument("difference control: shape mismatch");
  for (std::size_t k = 0; k < n; ++k)
    if (std::abs(a.time(k) - b.time(k)) > 1e-12 * std::max(1.0, a.horizon()))
      throw InvalidArgument("difference control: grids differ");
  auto first = std::make_shared<std::vector<double>>(n * n, 0.0);
  auto second = std::make_shared<std::vector<double>>(n * n, 0.0);
  std::vector<double> za(m), zb(m), dz(m);
  for (std::size_t i = 0; i < n; ++i) {
    Matrix acc_a(m, m), acc_b(m, m);
    std::fill(za.begin(), za.end(), 0.0);
    std::fill(zb.begin(), zb.end(), 0.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto da = a.increment(j - 1, j), db = b.increment(j - 1, j);
      acc_a += a.segment_level(j - 1);
      acc_a.add_outer(za, da);
      acc_b += b.segment_level(j - 1);
      acc_b.add_outer(zb, db);
      for (std::size_t d = 0; d < m; ++d) {
        za[d] += da[d];
        zb[d] += db[d];
        dz[d] = za[d] - zb[d];
      }
      (*first)[i * n + j] = euclidean_norm(dz);
      (*second)[i * n + j] = (acc_a - acc_b).norm();
    }
  }
  const Control ca = best_control(
      n, [first, n](std::size_t i, std::size_t j) { return (*first)[i * n + j]; }, a.p(),
      Localization::none(n));
  const Control cb = best_control(
      n, [second, n](std::size_t i, std::size_t j) { return (*second)[i * n + j]; }, a.p() / 2.0,
      Localization::none(n));
  return Control(n, Control::Kind::RoughPathVariation,
                 [ca, cb](std::size_t i, std::size_t j) { return ca(i, j) + cb(i, j); });
}

double RoughPath::geometric_defect() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < segments(); ++k) {
    const auto dz = increment(k, k + 1);
    const Matrix& a = levels_[k];
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j)
        worst = std::max(worst, std::abs(0.5 * (a(i, j) + a(j, i)) - 0.5 * dz[i] * dz[j]));
  }
  return worst;
}

RoughPath lift_piecewise_linear(std::span<const double> samples, std::span<const double> times,
                                std::size_t dim, double p) {
  if (times.size() < 2) throw InvalidArgument("lift_piecewise_linear: fewer than 2 nodes");
  if (dim == 0 || samples.size() != times.size() * dim)
    throw InvalidArgument("lift_piecewise_linear: samples do not match the grid");
  std::vector<double> t(times.begin(), times.end());
  validate_grid(t);
  std::vector<Matrix> lv;
  lv.reserve(times.size() - 1);
  std::vector<double> dz(dim);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    for (std::size_t d = 0; d < dim; ++d) dz[d] = samples[(k + 1) * dim + d] - samples[k * dim + d];
    // ∫ Z_{t_k,r} ⊗ dZ_r over a linear segment is exactly ½ ΔZ ⊗ ΔZ.
    lv.push_back(0.5 * Matrix::outer(dz, dz));
  }
  return RoughPath(std::move(t), std::vector<double>(samples.begin(), samples.end()), dim,
                   std::move(lv), p);
}

Matrix chen_defect_nodes(const RoughPath& rp, std::size_t s, std::size_t u, std::size_t t) {
  if (!(s <= u && u <= t) || t >= rp.size())
    throw InvalidArgument("chen_defect: need s <= u <= t on the grid");
  Matrix d = rp.second_level(s, t);
  d -= rp.second_level(s, u);
  d -= rp.second_level(u, t);
  const auto zsu = rp.increment(s, u);
  const auto zut = rp.increment(u, t);
  Matrix cross = Matrix::outer(zsu, zut);
  d -= cross;
  return d;
}

Matrix chen_defect(const RoughPath& rp, double s, double u, double t) {
  return chen_defect_nodes(rp, rp.node_index(s), rp.node_index(u), rp.node_index(t));
}

double relative_chen_defect(const RoughPath& rp, std::size_t s, std::size_t u, std::size_t t) {
  const double defect = chen_defect_nodes(rp, s, u, t).norm();
  const double scale = euclidean_norm(rp.increment(s, u)) * euclidean_norm(rp.increment(u, t)) +
                       rp.second_level(s, t).norm();
  return scale > 0.0 ? defect / scale : defect;
}

double symmetry_defect(const RoughPath& rp, std::size_t i, std::size_t j) {
  const Matrix a = rp.second_level(i, j);
  const auto z = rp.increment(i, j);
  const std::size_t m = rp.dim();
  double s = 0.0;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < m; ++c) {
      const double v = 0.5 * (a(r, c) + a(c, r)) - 0.5 * z[r] * z[c];
      s += v * v;
    }
  return std::sqrt(s);
}

FbmSample sample_fbm(double hurst, std::size_t n, double horizon, std::uint64_t seed,
                     std::size_t dim) {
  if (!(hurst > 1.0 / 3.0 && hurst <= 0.5))
    throw InvalidArgument("sample_fbm: Hurst index must lie in (1/3, 1/2]");
  if (n < 2) throw InvalidArgument("sample_fbm: need at least 2 steps");
  if (!(horizon > 0.0)) throw InvalidArgument("sample_fbm: horizon must be positive");
  if (dim == 0) throw InvalidArgument("sample_fbm: dimension must be positive");

  // Circulant embedding of the unit-step fractional Gaussian noise covariance.
  const std::size_t m = 2 * n;
  auto gamma = [hurst](double k) {
    const double h2 = 2.0 * hurst;
    return 0.5 * (std::pow(std::abs(k + 1.0), h2) - 2.0 * std::pow(std::abs(k), h2) +
                  std::pow(std::abs(k - 1.0), h2));
  };
  std::vector<detail::cplx> c(m);
  for (std::size_t j = 0; j <= n; ++j) c[j] = gamma(static_cast<double>(j));
  for (std::size_t j = n + 1; j < m; ++j) c[j] = c[m - j];
  detail::fft(c, 1, m);
  std::vector<double> sqrt_eig(m);
  for (std::size_t k = 0; k < m; ++k)
    sqrt_eig[k] = std::sqrt(std::max(0.0, c[k].real()) / static_cast<double>(m));

  const double dt = horizon / static_cast<double>(n);
  const double scale = std::pow(dt, hurst);
  FbmSample out;
  out.dim = dim;
  out.hurst = hurst;
  out.times.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) out.times[k] = horizon * static_cast<double>(k) / n;
  out.times[n] = horizon;
  out.values.assign((n + 1) * dim, 0.0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<detail::cplx> w(m);
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t k = 0; k < m; ++k) {
      const double a = normal(rng);
      const double b = normal(rng);
      w[k] = sqrt_eig[k] * detail::cplx(a, b);
    }
    detail::fft(w, 1, m);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += scale * w[k].real();
      out.values[(k + 1) * dim + d] = acc;
    }
  }
  return out;
}

RoughPath reverse_rough_path(const RoughPath& rp, double pivot) {
  const std::size_t q = rp.node_index(pivot);
  if (q == 0) throw InvalidArgument("reverse_rough_path: pivot must be after the first node");
  const double t = rp.time(q);
  std::vector<double> times, values;
  std::vector<Matrix> levels;
  for (std::size_t k = 0; k <= q; ++k) {
    times.push_back(t - rp.time(q - k));
    const auto z = rp.value(q - k);
    values.insert(values.end(), z.begin(), z.end());
    // The reversed segment of a geometric lift carries the transposed level:
    // -𝕫 + Z ⊗ Z = ½ Z ⊗ Z - antisym(𝕫).
    if (k < q) levels.push_back(rp.second_level(q - k - 1, q - k).transpose());
  }
  return RoughPath(std::move(times), std::move(values), rp.dim(), std::move(levels), rp.p());
}

void write_rough_path_csv(std::ostream& out, const RoughPath& rp) {
  const std::size_t m = rp.dim();
  out << "t";
  for (std::size_t d = 1; d <= m; ++d) out << ",Z_" << d;
  for (std::size_t i = 1; i <= m; ++i)
    for (std::size_t j = 1; j <= m; ++j) out << ",A_" << i << j;
  out << '\n';
  out.precision(17);
  for (std::size_t k = 0; k < rp.size(); ++k) {
    out << rp.time(k);
    for (double z : rp.value(k)) out << ',' << z;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) out << ',' << (k == 0 ? 0.0 : rp.segment_level(k - 1)(i, j));
    out << '\n';
  }
}

RoughPath read_rough_path_csv(std::istream& in, double p) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("rough path csv: missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header[0] != "t") throw FormatError("rough path csv: header must start with t");
  std::size_t m = 0;
  while (1 + m < header.size() && header[1 + m].rfind("Z_", 0) == 0) ++m;
  if (m == 0 || header.size() != 1 + m + m * m)
    throw FormatError("rough path csv: expected t,Z_1..Z_M,A_11..A_MM");
  std::vector<double> times, values;
  std::vector<Matrix> levels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) {
      try {
        cells.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("rough path csv: bad number '" + cell + "' on row " + std::to_string(row));
      }
    }
    if (cells.size() != header.size())
      throw FormatError("rough path csv: wrong column count on row " + std::to_string(row));
    for (double c : cells)
      if (!std::isfinite(c)) throw FormatError("rough path csv: non-finite entry");
    times.push_back(cells[0]);
    values.insert(values.end(), cells.begin() + 1, cells.begin() + 1 + static_cast<long>(m));
    if (row > 0) {
      Matrix a(m, m);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) a(i, j) = cells[1 + m + i * m + j];
      levels.push_back(std::move(a));
    }
    ++row;
  }
  RoughPath rp = [&] {
    try {
      return RoughPath(std::move(times), std::move(values), m, std::move(levels), p);
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("rough path csv: ") + e.what());
    }
  }();
  // Geometricity of the stored levels, then Chen on a spread of triples.
  double scale = 0.0;
  for (std::size_t k = 0; k < rp.segments(); ++k) scale = std::max(scale, rp.segment_level(k).max_abs());
  if (rp.geometric_defect() > 1e-9 * std::max(1.0, scale))
    throw FormatError("rough path csv: second level is not geometric");
  const std::size_t n = rp.size();
  const std::size_t step = std::max<std::size_t>(1, n / 8);
  for (std::size_t s = 0; s < n; s += step)
    for (std::size_t t = s + 2; t < n; t += step)
      if (relative_chen_defect(rp, s, (s + t) / 2, t) > 1e-12)
        throw FormatError("rough path csv: Chen relation violated");
  return rp;
}

}  // namespace roughflow
