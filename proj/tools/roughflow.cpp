#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include "roughflow/error.hpp"
#include "roughflow/harness.hpp"

namespace {

int run(const std::string& experiment, const std::string& config_path, const std::uint64_t* seed,
        const std::string* out) {
  roughflow::ExperimentConfig c = roughflow::load_config(config_path);
  if (c.experiment != experiment)
    throw roughflow::InvalidArgument("config experiment '" + c.experiment + "' does not match '" + experiment + "'");
  if (seed) c.seed = *seed;
  if (out) c.out_dir = *out;
  const roughflow::ExperimentResult r = roughflow::run_experiment(c);
  const auto dir = roughflow::write_run(r, c.out_dir);
  for (const auto& k : r.criteria)
    std::cout << (k.pass ? "PASS " : "FAIL ") << k.name << "  value=" << k.value << " " << k.relation << " "
              << k.threshold << '\n';
  std::cout << "run directory: " << dir.string() << '\n';
  return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roughflow: rough transport noise for 2D Euler"};
  app.require_subcommand(1);
  app.set_version_flag("--version", roughflow::library_version());

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, CLI::App*>> experiments;
  for (const char* name : {"wong_zakai", "stability", "steady_check", "remainder_scan", "flow_convergence"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "output root (run/<name>/ is created inside)");
    experiments.emplace_back(name, sub);
  }

  CLI::App* pvar = app.add_subcommand("pvar", "p-variation of a CSV time series (t, x1..xd)");
  std::string series;
  double p = 2.0;
  std::string control = "none";
  double L = std::numeric_limits<double>::infinity();
  pvar->add_option("file", series, "CSV file, '-' for stdin")->required();
  pvar->add_option("--p", p, "variation exponent")->required();
  pvar->add_option("--localize", control, "none | interval:a[:scale] | pvar:q");
  pvar->add_option("--L", L, "localization threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pvar->parsed()) {
      roughflow::PVarResult r;
      if (series == "-") {
        r = roughflow::pvar_from_csv(std::cin, p, control, L);
      } else {
        std::ifstream in(series);
        if (!in) throw roughflow::InvalidArgument("cannot open " + series);
        r = roughflow::pvar_from_csv(in, p, control, L);
      }
      nlohmann::json j{{"value", r.value}, {"argmax_partition", r.partition}};
      std::cout << j.dump() << '\n';
      return 0;
    }
    for (const auto& [name, sub] : experiments) {
      if (!sub->parsed()) continue;
      const bool has_seed = sub->count("--seed") > 0, has_out = sub->count("--out") > 0;
      return run(name, config_path, has_seed ? &seed : nullptr, has_out ? &out_dir : nullptr);
    }
  } catch (const roughflow::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
