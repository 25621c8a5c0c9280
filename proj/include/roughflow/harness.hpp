#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "roughflow/driver.hpp"
#include "roughflow/geometry.hpp"
#include "roughflow/torus_field.hpp"
#include "roughflow/variation.hpp"

namespace roughflow {

std::string library_version();

/// Initial vorticity: a finite sum of Fourier modes or a grid file.
///
/// Spec strings: "cos:k1,k2,a" and "sin:k1,k2,a" joined by '+', or
/// "file:<path>" for a grid CSV. "zero" is the zero field.
class VorticitySpec {
 public:
  struct Mode {
    int k1 = 0, k2 = 0;
    double amplitude = 0.0;
    bool sine = false;
  };

  VorticitySpec() = default;
  static VorticitySpec parse(const std::string& spec);

  double operator()(Vec2 x) const;
  std::function<double(Vec2)> function() const;
  GridField grid(std::size_t n) const;
  /// max |w₀| bound: exact sup for grids, Σ|a| for modes.
  double sup_bound() const;

  const std::string& spec() const noexcept { return spec_; }
  const std::vector<Mode>& modes() const noexcept { return modes_; }
  bool from_file() const noexcept { return has_grid_; }
  /// True for mode sums that are steady for the Euler equation: all
  /// wavevectors parallel, or all of the same length.
  bool is_steady() const;

 private:
  std::string spec_ = "zero";
  std::vector<Mode> modes_;
  bool has_grid_ = false;
  GridField grid_;
};

struct Perturbation {
  std::string kind;  ///< stability: w0 | sigma | driver; flow_convergence: initial | drift | sigma | driver
  std::vector<double> sizes;
};

struct ExperimentConfig {
  std::string experiment = "wong_zakai";
  std::string name;  ///< run subdirectory; empty means the experiment name
  std::size_t resolution = 64;
  std::size_t particles_per_side = 256;
  double horizon = 1.0;
  double hurst = 0.4;
  double p = 0.0;  ///< 0 selects 1/H + 0.1
  std::vector<std::size_t> meshes{64, 128, 256, 512, 1024};
  std::vector<std::size_t> resolutions{16, 32, 64};
  std::vector<std::string> sigma{"mode:0.4,1,0", "mode:0.3,1,1,0.7"};
  std::string w0 = "cos:1,0,1+sin:2,1,0.5";
  std::uint64_t seed = 1;
  std::size_t samples = 1;
  double localization = std::numeric_limits<double>::infinity();
  std::vector<Perturbation> perturbations;
  std::size_t snapshots = 5;
  std::string particle_format = "csv";  ///< csv | binary | none
  std::map<std::string, double> tolerances;
  std::string out_dir = "run";

  double effective_p() const { return p > 0.0 ? p : 1.0 / hurst + 0.1; }
  std::string run_name() const { return name.empty() ? experiment : name; }
  /// tolerances[key] when present, otherwise the fallback.
  double tolerance(const std::string& key, double fallback) const;
  /// Throws InvalidArgument when a field is out of its documented range.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& c);
/// SHA-256 of the serialized config, hex.
std::string config_hash(const ExperimentConfig& c);

struct Criterion {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  ///< "<=", ">=", "==" or "in"
  bool pass = false;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  /// Optional text column prepended to every row (e.g. a perturbation kind).
  std::string label_column;
  std::vector<std::string> labels;

  void write_csv(std::ostream& out) const;
  nlohmann::json to_json() const;
};

struct OutputSnapshot {
  double t = 0.0;
  GridField field;
  std::vector<Vec2> positions;
  std::vector<double> weights;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<Criterion> criteria;
  std::vector<Table> tables;
  nlohmann::json diagnostics = nlohmann::json::object();
  std::map<std::string, double> constants;
  std::vector<std::uint64_t> seeds;
  std::vector<OutputSnapshot> snapshots;

  bool passed() const;
};

ExperimentResult run_wong_zakai(const ExperimentConfig& c);
ExperimentResult run_stability(const ExperimentConfig& c);
ExperimentResult run_steady_check(const ExperimentConfig& c);
ExperimentResult run_remainder_scan(const ExperimentConfig& c);
ExperimentResult run_flow_convergence(const ExperimentConfig& c);
/// Dispatches on c.experiment after validation.
ExperimentResult run_experiment(const ExperimentConfig& c);

/// Writes <root>/<run name>/ with meta.json, diagnostics.json, one CSV per
/// table and the snapshot files. Returns the run directory.
std::filesystem::path write_run(const ExperimentResult& r, const std::filesystem::path& root);

/// Number of strict increases along a column, and whether each of them is
/// within `noise_floor` relative to its predecessor.
struct MonotoneCheck {
  std::size_t inversions = 0;
  bool within_noise = true;
};
MonotoneCheck decreasing_check(std::span<const double> column, double noise_floor);

/// p-variation of a CSV time series (header optional; columns t, x1..xd).
/// control_spec: "none", "interval:a[:scale]" for scale·|t-s|^a, or
/// "pvar:q" for the series' own q-variation control.
PVarResult pvar_from_csv(std::istream& in, double p, const std::string& control_spec, double L);

}  // namespace roughflow
