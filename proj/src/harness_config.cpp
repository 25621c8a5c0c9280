#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "roughflow/error.hpp"
#include "roughflow/harness.hpp"
#include "roughflow/sigma_field.hpp"
#include "roughflow/snapshot_io.hpp"

#ifndef ROUGHFLOW_VERSION
#define ROUGHFLOW_VERSION "0.0.0"
#endif

namespace roughflow {

using nlohmann::json;

std::string library_version() { return ROUGHFLOW_VERSION; }

namespace {

std::vector<double> numbers(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw InvalidArgument(what + ": bad number '" + cell + "'");
    }
  }
  return out;
}

}  // namespace

VorticitySpec VorticitySpec::parse(const std::string& spec) {
  VorticitySpec v;
  v.spec_ = spec;
  if (spec.rfind("file:", 0) == 0) {
    std::ifstream in(spec.substr(5));
    if (!in) throw InvalidArgument("w0: cannot open '" + spec.substr(5) + "'");
    v.grid_ = read_grid_csv(in);
    v.has_grid_ = true;
    return v;
  }
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, '+')) {
    if (part == "zero") continue;
    const auto colon = part.find(':');
    const std::string kind = colon == std::string::npos ? part : part.substr(0, colon);
    if (colon == std::string::npos || (kind != "cos" && kind != "sin"))
      throw InvalidArgument("w0: unknown term '" + part + "'");
    const auto n = numbers(part.substr(colon + 1), "w0");
    if (n.size() != 3 || n[0] != std::round(n[0]) || n[1] != std::round(n[1]))
      throw InvalidArgument("w0: terms are cos|sin:k1,k2,amplitude with integer k");
    Mode m{static_cast<int>(n[0]), static_cast<int>(n[1]), n[2], kind == "sin"};
    if (m.k1 == 0 && m.k2 == 0 && m.sine) continue;
    v.modes_.push_back(m);
  }
  return v;
}

double VorticitySpec::operator()(Vec2 x) const {
  if (has_grid_) {
    const Vec2 p = x;
    return interpolate(grid_, std::span<const Vec2>(&p, 1), InterpolationMethod::Spectral)[0];
  }
  double s = 0.0;
  for (const auto& m : modes_) {
    const double th = m.k1 * x.x + m.k2 * x.y;
    s += m.amplitude * (m.sine ? std::sin(th) : std::cos(th));
  }
  return s;
}

std::function<double(Vec2)> VorticitySpec::function() const {
  if (has_grid_) {
    auto interp = std::make_shared<Interpolator>(grid_, InterpolationMethod::Spectral);
    return [interp](Vec2 x) { return (*interp)(x); };
  }
  return [modes = modes_](Vec2 x) {
    double s = 0.0;
    for (const auto& m : modes) {
      const double th = m.k1 * x.x + m.k2 * x.y;
      s += m.amplitude * (m.sine ? std::sin(th) : std::cos(th));
    }
    return s;
  };
}

GridField VorticitySpec::grid(std::size_t n) const {
  if (has_grid_) return grid_.resolution() == n ? grid_ : resample(grid_, n);
  return GridField::sample(n, function());
}

double VorticitySpec::sup_bound() const {
  if (has_grid_) return grid_.sup_norm();
  double s = 0.0;
  for (const auto& m : modes_) s += std::abs(m.amplitude);
  return s;
}

bool VorticitySpec::is_steady() const {
  if (has_grid_) return false;
  std::vector<Mode> active;
  for (const auto& m : modes_)
    if (m.amplitude != 0.0 && (m.k1 != 0 || m.k2 != 0)) active.push_back(m);
  if (active.size() <= 1) return true;
  const auto& a = active.front();
  const bool parallel = std::all_of(active.begin(), active.end(),
                                    [&](const Mode& m) { return a.k1 * m.k2 - a.k2 * m.k1 == 0; });
  const bool shell = std::all_of(active.begin(), active.end(), [&](const Mode& m) {
    return m.k1 * m.k1 + m.k2 * m.k2 == a.k1 * a.k1 + a.k2 * a.k2;
  });
  return parallel || shell;
}

double ExperimentConfig::tolerance(const std::string& key, double fallback) const {
  const auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw InvalidArgument("config: " + m); };
  static const std::vector<std::string> kinds{"wong_zakai", "stability", "steady_check", "remainder_scan",
                                              "flow_convergence"};
  if (std::find(kinds.begin(), kinds.end(), experiment) == kinds.end()) fail("unknown experiment '" + experiment + "'");
  if (name.find('/') != std::string::npos || name == "." || name == "..") fail("name must be a plain directory name");
  auto pow2 = [](std::size_t n, std::size_t lo, std::size_t hi) { return std::has_single_bit(n) && n >= lo && n <= hi; };
  if (!pow2(resolution, 8, 1024)) fail("resolution must be a power of two in [8, 1024]");
  if (particles_per_side < resolution || particles_per_side > 2048)
    fail("particles_per_side must be in [resolution, 2048]");
  if (!(horizon > 0.0 && horizon <= 100.0)) fail("horizon must be in (0, 100]");
  if (!(hurst > 1.0 / 3.0 && hurst <= 0.5)) fail("hurst must be in (1/3, 1/2]");
  const double pe = effective_p();
  if (!(pe >= 2.0 && pe < 3.0 && pe > 1.0 / hurst)) fail("p must lie in (1/H, 3) and in [2, 3)");
  if (meshes.empty()) fail("meshes must not be empty");
  for (std::size_t k = 0; k < meshes.size(); ++k) {
    if (!pow2(meshes[k], 2, 1u << 16)) fail("meshes must be powers of two in [2, 65536]");
    if (k && meshes[k] <= meshes[k - 1]) fail("meshes must be strictly increasing");
  }
  for (std::size_t n : resolutions)
    if (!pow2(n, 8, 1024)) fail("resolutions must be powers of two in [8, 1024]");
  for (const auto& s : sigma) SigmaField::parse(s);
  VorticitySpec::parse(w0);
  if (samples < 1 || samples > 256) fail("samples must be in [1, 256]");
  if (!(localization > 0.0)) fail("localization must be positive (null for none)");
  if (snapshots < 1 || snapshots > 1000) fail("snapshots must be in [1, 1000]");
  if (particle_format != "csv" && particle_format != "binary" && particle_format != "none")
    fail("particle_format must be csv, binary or none");
  for (const auto& p : perturbations) {
    if (p.kind.empty()) fail("perturbation kind missing");
    for (double s : p.sizes)
      if (!(s >= 0.0 && s <= 1.0)) fail("perturbation sizes must be in [0, 1]");
  }
  for (const auto& [k, v] : tolerances)
    if (!std::isfinite(v)) fail("tolerance '" + k + "' must be finite");
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["name"] = c.name;
  j["resolution"] = c.resolution;
  j["particles_per_side"] = c.particles_per_side;
  j["horizon"] = c.horizon;
  j["hurst"] = c.hurst;
  j["p"] = c.p;
  j["meshes"] = c.meshes;
  j["resolutions"] = c.resolutions;
  j["sigma"] = c.sigma;
  j["w0"] = c.w0;
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["localization"] = std::isfinite(c.localization) ? json(c.localization) : json(nullptr);
  j["perturbations"] = json::array();
  for (const auto& p : c.perturbations) j["perturbations"].push_back({{"kind", p.kind}, {"sizes", p.sizes}});
  j["snapshots"] = c.snapshots;
  j["particle_format"] = c.particle_format;
  j["tolerances"] = c.tolerances;
  j["out_dir"] = c.out_dir;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("config: top level must be an object");
  static const std::vector<std::string> keys{"experiment", "name",   "resolution",      "particles_per_side",
                                             "horizon",    "hurst",  "p",               "meshes",
                                             "resolutions", "sigma", "w0",              "seed",
                                             "samples",    "localization", "perturbations", "snapshots",
                                             "particle_format", "tolerances", "out_dir"};
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw InvalidArgument("config: unknown key '" + k + "'");
  ExperimentConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("experiment", c.experiment);
    get("name", c.name);
    get("resolution", c.resolution);
    get("particles_per_side", c.particles_per_side);
    get("horizon", c.horizon);
    get("hurst", c.hurst);
    get("p", c.p);
    get("meshes", c.meshes);
    get("resolutions", c.resolutions);
    get("sigma", c.sigma);
    get("w0", c.w0);
    get("seed", c.seed);
    get("samples", c.samples);
    if (j.contains("localization"))
      c.localization = j["localization"].is_null() ? std::numeric_limits<double>::infinity()
                                                   : j["localization"].get<double>();
    if (j.contains("perturbations"))
      for (const auto& p : j["perturbations"])
        c.perturbations.push_back({p.at("kind").get<std::string>(), p.at("sizes").get<std::vector<double>>()});
    get("snapshots", c.snapshots);
    get("particle_format", c.particle_format);
    get("tolerances", c.tolerances);
    get("out_dir", c.out_dir);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2); }

std::string config_hash(const ExperimentConfig& c) {
  const std::string text = to_json(c).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("config hash: digest failed");
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
  return os.str();
}

void Table::write_csv(std::ostream& out) const {
  if (!label_column.empty()) out << label_column << ',';
  for (std::size_t k = 0; k < columns.size(); ++k) out << (k ? "," : "") << columns[k];
  out << '\n';
  char cell[40];
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!label_column.empty()) out << labels.at(r) << ',';
    for (std::size_t k = 0; k < rows[r].size(); ++k) {
      std::snprintf(cell, sizeof cell, "%.17g", rows[r][k]);
      out << (k ? "," : "") << cell;
    }
    out << '\n';
  }
}

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json Table::to_json() const {
  json rows_json = json::array();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    json row = json::object();
    if (!label_column.empty()) row[label_column] = labels.at(r);
    for (std::size_t k = 0; k < columns.size(); ++k) row[columns[k]] = number(rows[r][k]);
    rows_json.push_back(row);
  }
  return rows_json;
}

bool ExperimentResult::passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
}

std::filesystem::path write_run(const ExperimentResult& r, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  const fs::path dir = root / r.config.run_name();
  fs::create_directories(dir);
  auto open = [&](const std::string& file, bool binary = false) {
    std::ofstream out(dir / file, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error("write_run: cannot write " + (dir / file).string());
    return out;
  };

  json meta;
  meta["library_version"] = library_version();
  meta["config"] = to_json(r.config);
  meta["config_hash"] = config_hash(r.config);
  meta["seeds"] = r.seeds;
  json constants = json::object();
  for (const auto& [k, v] : r.constants) constants[k] = number(v);
  meta["constants"] = constants;
  meta["passed"] = r.passed();
  open("meta.json") << meta.dump(2) << '\n';

  json diag = r.diagnostics;
  diag["criteria"] = json::array();
  for (const auto& c : r.criteria)
    diag["criteria"].push_back({{"name", c.name},
                                {"value", number(c.value)},
                                {"threshold", number(c.threshold)},
                                {"relation", c.relation},
                                {"pass", c.pass}});
  diag["tables"] = json::object();
  for (const auto& t : r.tables) diag["tables"][t.name] = t.to_json();
  open("diagnostics.json") << diag.dump(2) << '\n';

  for (const auto& t : r.tables) {
    auto out = open(t.name + ".csv");
    t.write_csv(out);
  }
  char stem[32];
  for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
    const auto& s = r.snapshots[k];
    std::snprintf(stem, sizeof stem, "t%04zu", k);
    if (s.field.resolution() > 0) {
      auto out = open(std::string("fields_") + stem + ".csv");
      write_grid_csv(out, s.field);
    }
    if (r.config.particle_format == "csv") {
      auto out = open(std::string("particles_") + stem + ".csv");
      write_particle_csv(out, s.t, s.positions, s.weights);
    } else if (r.config.particle_format == "binary") {
      auto out = open(std::string("particles_") + stem + ".bin", true);
      write_binary_snapshot(out, particle_snapshot(s.t, s.positions, s.weights));
    }
  }
  return dir;
}

MonotoneCheck decreasing_check(std::span<const double> column, double noise_floor) {
  MonotoneCheck out;
  for (std::size_t k = 0; k + 1 < column.size(); ++k) {
    if (column[k + 1] > column[k]) {
      ++out.inversions;
      if (column[k + 1] > column[k] * (1.0 + noise_floor)) out.within_noise = false;
    }
  }
  return out;
}

PVarResult pvar_from_csv(std::istream& in, double p, const std::string& control_spec, double L) {
  if (!(p >= 1.0)) throw InvalidArgument("pvar: p must be at least 1");
  std::vector<double> times, values;
  std::size_t dim = 0, row = 0;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    std::vector<double> cells;
    try {
      cells = numbers(line, "pvar");
    } catch (const InvalidArgument&) {
      if (row == 0 && times.empty()) {
        ++row;
        continue;  // header
      }
      throw FormatError("pvar: malformed row " + std::to_string(row + 1));
    }
    ++row;
    if (cells.size() < 2) throw FormatError("pvar: rows need a time and at least one value");
    if (dim == 0) dim = cells.size() - 1;
    if (cells.size() != dim + 1) throw FormatError("pvar: ragged row " + std::to_string(row));
    if (!times.empty() && !(cells[0] > times.back())) throw FormatError("pvar: times must increase");
    times.push_back(cells[0]);
    values.insert(values.end(), cells.begin() + 1, cells.end());
  }
  const std::size_t n = times.size();
  if (n == 0) throw FormatError("pvar: empty series");
  const PairNorm norm = [&values, dim](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = values[b * dim + c] - values[a * dim + c];
      s += d * d;
    }
    return std::sqrt(s);
  };
  Localization loc = Localization::none(n);
  if (control_spec != "none" && !control_spec.empty()) {
    const auto colon = control_spec.find(':');
    const std::string kind = control_spec.substr(0, colon);
    const auto args = colon == std::string::npos ? std::vector<double>{}
                                                 : numbers(control_spec.substr(colon + 1), "pvar control");
    Control base;
    if (kind == "interval" && (args.size() == 1 || args.size() == 2) && args[0] > 0.0) {
      base = Control::interval_power(times, args[0], args.size() == 2 ? args[1] : 1.0);
    } else if (kind == "pvar" && args.size() == 1 && args[0] >= 1.0) {
      base = best_control(n, norm, args[0], Localization::none(n));
    } else {
      throw InvalidArgument("pvar: control spec must be none, interval:a[:scale] or pvar:q");
    }
    loc = Localization(base, L);
  } else if (std::isfinite(L)) {
    throw InvalidArgument("pvar: --L needs --localize");
  }
  return localized_p_variation(n, norm, p, loc);
}

}  // namespace roughflow
