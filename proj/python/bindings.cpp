#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "roughflow/driver.hpp"
#include "roughflow/error.hpp"
#include "roughflow/euler_sim.hpp"
#include "roughflow/harness.hpp"
#include "roughflow/rough_path.hpp"
#include "roughflow/snapshot_io.hpp"
#include "roughflow/torus_field.hpp"
#include "roughflow/variation.hpp"

namespace py = pybind11;
using namespace roughflow;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(std::span<const double> v, std::vector<py::ssize_t> shape) {
  Array a(shape);
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

Array grid_array(const GridField& f) {
  const auto n = static_cast<py::ssize_t>(f.resolution());
  return to_array(f.values(), {n, n});
}

GridField array_grid(const Array& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw InvalidArgument("grid must be a square 2-d array");
  const auto n = static_cast<std::size_t>(a.shape(0));
  return GridField(n, std::vector<double>(a.data(), a.data() + n * n));
}

std::vector<Vec2> array_points(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw InvalidArgument("positions must have shape (n, 2)");
  std::vector<Vec2> out(static_cast<std::size_t>(a.shape(0)));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {a.at(i, 0), a.at(i, 1)};
  return out;
}

Array points_array(std::span<const Vec2> p) {
  Array a({static_cast<py::ssize_t>(p.size()), py::ssize_t{2}});
  double* d = a.mutable_data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    d[2 * i] = p[i].x;
    d[2 * i + 1] = p[i].y;
  }
  return a;
}

Array matrix_array(const Matrix& m) {
  return to_array(m.data(), {static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
}

std::vector<SigmaField> parse_sigmas(const std::vector<std::string>& ids) {
  std::vector<SigmaField> out;
  for (const auto& id : ids) out.push_back(SigmaField::parse(id));
  return out;
}

py::dict pvar_dict(const PVarResult& r) {
  py::dict d;
  d["value"] = r.value;
  d["argmax_partition"] = r.partition;
  return d;
}

py::dict result_dict(const ExperimentResult& r) {
  py::list criteria;
  for (const auto& c : r.criteria) {
    py::dict d;
    d["name"] = c.name;
    d["value"] = c.value;
    d["threshold"] = c.threshold;
    d["relation"] = c.relation;
    d["pass"] = c.pass;
    criteria.append(d);
  }
  py::dict tables;
  for (const auto& t : r.tables) tables[py::str(t.name)] = py::module_::import("json").attr("loads")(t.to_json().dump());
  py::dict out;
  out["criteria"] = criteria;
  out["tables"] = tables;
  out["constants"] = r.constants;
  out["seeds"] = r.seeds;
  out["passed"] = r.passed();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rough transport noise for 2D Euler";
  m.attr("__version__") = library_version();

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<InfeasibleLocalization>(m, "InfeasibleLocalization", PyExc_ValueError);
  py::register_exception<StepGuardViolation>(m, "StepGuardViolation", PyExc_RuntimeError);

  m.def(
      "sample_fbm",
      [](double hurst, std::size_t n, double horizon, std::uint64_t seed, std::size_t dim) {
        const FbmSample s = sample_fbm(hurst, n, horizon, seed, dim);
        return py::make_tuple(to_array(s.times, {static_cast<py::ssize_t>(s.times.size())}),
                              to_array(s.values, {static_cast<py::ssize_t>(s.times.size()),
                                                  static_cast<py::ssize_t>(dim)}));
      },
      py::arg("hurst"), py::arg("n"), py::arg("horizon") = 1.0, py::arg("seed") = 0, py::arg("dim") = 1,
      "Exact fBm samples: (times, values[n+1, dim]).");

  py::class_<RoughPath>(m, "RoughPath")
      .def_static(
          "lift",
          [](const Array& values, const Array& times, double p) {
            if (values.ndim() != 2) throw InvalidArgument("values must have shape (nodes, dim)");
            return lift_piecewise_linear({values.data(), static_cast<std::size_t>(values.size())},
                                         {times.data(), static_cast<std::size_t>(times.size())},
                                         static_cast<std::size_t>(values.shape(1)), p);
          },
          py::arg("values"), py::arg("times"), py::arg("p") = 2.5,
          "Canonical lift of the piecewise-linear interpolation.")
      .def_static(
          "from_csv",
          [](const std::string& text, double p) {
            std::istringstream in(text);
            return read_rough_path_csv(in, p);
          },
          py::arg("text"), py::arg("p") = 2.5)
      .def("to_csv",
           [](const RoughPath& rp) {
             std::ostringstream out;
             write_rough_path_csv(out, rp);
             return out.str();
           })
      .def_property_readonly("dim", &RoughPath::dim)
      .def_property_readonly("p", &RoughPath::p)
      .def("__len__", &RoughPath::size)
      .def_property_readonly("times", [](const RoughPath& rp) {
        return to_array(rp.times(), {static_cast<py::ssize_t>(rp.size())});
      })
      .def_property_readonly("values", [](const RoughPath& rp) {
        return to_array(rp.values(), {static_cast<py::ssize_t>(rp.size()), static_cast<py::ssize_t>(rp.dim())});
      })
      .def("increment", &RoughPath::increment, py::arg("i"), py::arg("j"))
      .def("second_level", [](const RoughPath& rp, std::size_t i, std::size_t j) {
        return matrix_array(rp.second_level(i, j));
      }, py::arg("i"), py::arg("j"))
      .def("chen_defect", [](const RoughPath& rp, std::size_t s, std::size_t u, std::size_t t) {
        return matrix_array(chen_defect_nodes(rp, s, u, t));
      }, py::arg("s"), py::arg("u"), py::arg("t"))
      .def("control", [](const RoughPath& rp, std::size_t i, std::size_t j) { return rp.control()(i, j); },
           py::arg("i"), py::arg("j"))
      .def("geometric_defect", &RoughPath::geometric_defect)
      .def("subsampled", &RoughPath::subsampled, py::arg("stride"))
      .def("refined", &RoughPath::refined, py::arg("factor"))
      .def("scaled", &RoughPath::scaled, py::arg("a"));

  m.def(
      "p_variation",
      [](const Array& values, double p) {
        if (values.ndim() == 1)
          return pvar_dict(p_variation({values.data(), static_cast<std::size_t>(values.size())}, p));
        if (values.ndim() != 2) throw InvalidArgument("values must be 1-d or 2-d");
        return pvar_dict(p_variation({values.data(), static_cast<std::size_t>(values.size())},
                                     static_cast<std::size_t>(values.shape(1)), p));
      },
      py::arg("values"), py::arg("p"), "sup over grid partitions of Σ|x_{t_k,t_{k+1}}|^p.");

  m.def(
      "pvar_csv",
      [](const std::string& text, double p, const std::string& localize, double L) {
        std::istringstream in(text);
        return pvar_dict(pvar_from_csv(in, p, localize, L));
      },
      py::arg("text"), py::arg("p"), py::arg("localize") = "none",
      py::arg("L") = std::numeric_limits<double>::infinity());

  m.def(
      "biot_savart",
      [](const Array& w) {
        const VelocityGrid u = biot_savart_mean_free(array_grid(w));
        return py::make_tuple(grid_array(u.u1), grid_array(u.u2));
      },
      py::arg("w"), "Velocity of the mean-free part of w.");

  m.def(
      "deposit",
      [](const Array& positions, const Array& weights, std::size_t resolution) {
        const auto p = array_points(positions);
        return grid_array(deposit(p, {weights.data(), static_cast<std::size_t>(weights.size())}, resolution));
      },
      py::arg("positions"), py::arg("weights"), py::arg("resolution"));

  m.def(
      "solve_euler",
      [](const std::string& w0, const std::vector<std::string>& sigma, const RoughPath& rp,
         std::size_t resolution, std::size_t particles_per_side, std::size_t store_every) {
        const VorticitySpec spec = VorticitySpec::parse(w0);
        const DriverPair driver(parse_sigmas(sigma), rp, -1);
        EulerOptions o;
        o.resolution = resolution;
        o.particles_per_side = particles_per_side;
        o.store_every = store_every;
        EulerTrajectory tr;
        {
          py::gil_scoped_release release;
          tr = spec.from_file() ? solve_rough_euler(spec.grid(resolution), driver, o)
                                : solve_rough_euler(spec.function(), driver, o);
        }
        py::list fields;
        for (const auto& f : tr.vorticity) fields.append(grid_array(f));
        py::dict d;
        d["times"] = tr.flow.times;
        d["vorticity"] = fields;
        d["positions"] = points_array(tr.flow.final_positions());
        d["weights"] = to_array(tr.flow.weights, {static_cast<py::ssize_t>(tr.flow.weights.size())});
        d["max_mean_drift"] = tr.max_mean_drift;
        d["max_particle_sup"] = tr.max_particle_sup;
        return d;
      },
      py::arg("w0"), py::arg("sigma"), py::arg("path"), py::arg("resolution") = 64,
      py::arg("particles_per_side") = 128, py::arg("store_every") = 1,
      "Lagrangian rough Euler solve; sigma entries are catalog ids, one per path component.");

  m.def(
      "solve_viscous",
      [](const Array& w0, const std::vector<std::string>& sigma, const RoughPath& rp, double nu,
         double max_dt, std::size_t store_every) {
        const GridField g = array_grid(w0);
        const DriverPair driver(parse_sigmas(sigma), rp, -1);
        ViscousOptions o;
        o.resolution = g.resolution();
        o.max_dt = max_dt;
        o.store_every = store_every;
        ViscousTrajectory tr;
        {
          py::gil_scoped_release release;
          tr = solve_viscous_reference(g, driver, nu, o);
        }
        py::list fields;
        for (const auto& f : tr.vorticity) fields.append(grid_array(f));
        py::dict d;
        d["times"] = tr.times;
        d["vorticity"] = fields;
        return d;
      },
      py::arg("w0"), py::arg("sigma"), py::arg("path"), py::arg("nu"), py::arg("max_dt") = 1e-2,
      py::arg("store_every") = 1);

  m.def(
      "config_hash", [](const std::string& text) { return config_hash(parse_config(text)); }, py::arg("config"));
  m.def(
      "normalize_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
      py::arg("config"), "Validated config with every field filled in.");

  m.def(
      "run_experiment",
      [](const std::string& text, const std::string& out) {
        const ExperimentConfig c = parse_config(text);
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c);
        }
        py::dict d = result_dict(r);
        d["run_dir"] = out.empty() ? std::string() : write_run(r, out).string();
        return d;
      },
      py::arg("config"), py::arg("out") = "", "Runs an experiment from JSON text; writes run/<name>/ under out.");

  m.def(
      "write_snapshot",
      [](const std::string& path, double t, const Array& positions, const Array& weights) {
        const auto p = array_points(positions);
        std::ofstream f(path, std::ios::binary);
        if (!f) throw InvalidArgument("cannot open " + path);
        write_binary_snapshot(f, particle_snapshot(t, p, {weights.data(), static_cast<std::size_t>(weights.size())}));
      },
      py::arg("path"), py::arg("t"), py::arg("positions"), py::arg("weights"));
  m.def(
      "read_snapshot",
      [](const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw InvalidArgument("cannot open " + path);
        const BinarySnapshot s = read_binary_snapshot(f);
        return py::make_tuple(s.t, to_array(s.records, {static_cast<py::ssize_t>(s.count()),
                                                        static_cast<py::ssize_t>(s.width)}));
      },
      py::arg("path"), "(t, records[count, width]).");
}
