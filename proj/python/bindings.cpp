#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "psipi/cli.hpp"
#include "psipi/imaging.hpp"
#include "psipi/interferometer.hpp"
#include "psipi/io.hpp"
#include "psipi/recover.hpp"

namespace py = pybind11;
using namespace psipi;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

/// Field shaped (ny, nx) for 2D grids, (nx,) for 1D grids.
Array field_array(const imaging::ModeGrid& grid, const std::vector<double>& values) {
  std::vector<py::ssize_t> shape;
  if (grid.dimension == 2) shape = {grid.ny, grid.nx};
  else shape = {grid.nx};
  Array out(shape);
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

std::vector<double> flat_values(const imaging::ModeGrid& grid, const Array& a) {
  if (static_cast<std::size_t>(a.size()) != grid.pixel_count())
    throw InvalidArgument("array has " + std::to_string(a.size()) + " values, grid has " +
                          std::to_string(grid.pixel_count()));
  return {a.data(), a.data() + a.size()};
}

Array map_array(const imaging::CoincidenceMap& map) {
  const auto n = static_cast<py::ssize_t>(map.pixels());
  Array out({n, n});
  std::copy(map.values.begin(), map.values.end(), out.mutable_data());
  return out;
}

imaging::CoincidenceMap map_from(const imaging::ModeGrid& grid, const Array& values, const std::string& ports) {
  imaging::CoincidenceMap map;
  map.grid = grid;
  map.ports = imaging::port_pair_from_string(ports);
  const auto n = grid.pixel_count();
  if (values.ndim() != 2 || static_cast<std::size_t>(values.shape(0)) != n ||
      static_cast<std::size_t>(values.shape(1)) != n)
    throw InvalidArgument("coincidence map must be a square array over the grid pixels");
  map.values.assign(values.data(), values.data() + values.size());
  return map;
}

imaging::CorrelationModel correlation(const imaging::ModeGrid& grid, const std::string& kind, double sigma) {
  switch (imaging::correlation_kind_from_string(kind)) {
    case imaging::CorrelationKind::delta: return imaging::delta_correlation(grid);
    case imaging::CorrelationKind::gaussian: return imaging::gaussian_correlation(grid, sigma);
    default: throw InvalidArgument("correlation must be 'delta' or 'gaussian'");
  }
}

py::dict wrapped_dict(const recover::WrappedField& w) {
  py::dict d;
  d["values"] = field_array(w.grid, w.values);
  d["quality"] = field_array(w.grid, w.quality);
  d["reference"] = w.reference;
  d["rank_ratio"] = w.rank_ratio;
  d["degraded"] = w.degraded;
  return d;
}

recover::WrappedField wrapped_from(const imaging::ModeGrid& grid, const Array& values) {
  recover::WrappedField w;
  w.grid = grid;
  w.values = flat_values(grid, values);
  for (auto& v : w.values) v = recover::wrap(v);
  w.quality.assign(w.values.size(), 1.0);
  return w;
}

}  // namespace

PYBIND11_MODULE(_psipi, m) {
  m.doc() = "Phase-subtractive two-source interference: simulation and phase retrieval";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<imaging::ModeGrid>(m, "Grid")
      .def(py::init([](int nx, int ny, double pitch) {
             auto g = ny > 1 ? imaging::grid_2d(nx, ny, pitch) : imaging::grid_1d(nx, pitch);
             g.validate();
             return g;
           }),
           py::arg("nx"), py::arg("ny") = 1, py::arg("pixel_pitch") = 10e-6)
      .def_readonly("dimension", &imaging::ModeGrid::dimension)
      .def_readonly("nx", &imaging::ModeGrid::nx)
      .def_readonly("ny", &imaging::ModeGrid::ny)
      .def_readonly("pixel_pitch", &imaging::ModeGrid::pixel_pitch)
      .def_property_readonly("pixel_count", &imaging::ModeGrid::pixel_count)
      .def("__eq__", [](const imaging::ModeGrid& a, const imaging::ModeGrid& b) { return a == b; })
      .def("__repr__", [](const imaging::ModeGrid& g) {
        return "Grid(nx=" + std::to_string(g.nx) + ", ny=" + std::to_string(g.ny) + ")";
      });

  m.def("two_mode_psipi_rate", &interferometer::two_mode_psipi_rate, py::arg("phi_s"), py::arg("phi_s_prime"),
        py::arg("gamma_i"), py::arg("gamma_i_prime"));
  m.def("standard_two_photon_rate", &interferometer::standard_two_photon_rate, py::arg("phi_s"),
        py::arg("phi_s_prime"));
  m.def(
      "psipi_two_path_rate",
      [](double a, double b, double g1, double g2, const std::string& statistics) {
        if (statistics != "boson" && statistics != "fermion")
          throw InvalidArgument("statistics must be 'boson' or 'fermion'");
        return interferometer::psipi_two_path_rate(
            a, b, g1, g2, statistics == "fermion" ? fock::Statistics::fermion : fock::Statistics::boson);
      },
      py::arg("phi_s"), py::arg("phi_s_prime"), py::arg("gamma_i"), py::arg("gamma_i_prime"),
      py::arg("statistics") = "boson", "Brute-force Fock-state coincidence rate of the two-path geometry.");
  m.def(
      "frame_noise_experiment",
      [](double amplitude, std::int64_t frames, std::uint64_t seed, bool subtract_background) {
        interferometer::FrameNoiseOptions opts;
        opts.subtract_background = subtract_background;
        const auto r = interferometer::frame_noise_experiment(amplitude, frames, seed, opts);
        return py::make_tuple(r.visibility_psipi, r.visibility_standard);
      },
      py::arg("amplitude"), py::arg("frames"), py::arg("seed") = 0, py::arg("subtract_background") = false);

  m.def(
      "make_phase_object",
      [](const std::string& kind, double scale, const imaging::ModeGrid& grid) {
        const auto o = imaging::make_phase_object(imaging::object_kind_from_string(kind), scale, grid);
        return field_array(grid, o.alpha);
      },
      py::arg("kind"), py::arg("scale"), py::arg("grid"));
  m.def(
      "coincidence_map",
      [](const imaging::ModeGrid& grid, const Array& alpha, const std::string& ports, const std::string& kind,
         double sigma, int threads) {
        imaging::MapOptions opts;
        opts.threads = threads;
        const imaging::PhaseObject o{grid, flat_values(grid, alpha)};
        py::gil_scoped_release release;
        auto map = imaging::coincidence_map(o, correlation(grid, kind, sigma), imaging::port_pair_from_string(ports),
                                            opts);
        py::gil_scoped_acquire acquire;
        return map_array(map);
      },
      py::arg("grid"), py::arg("alpha"), py::arg("ports") = "bb", py::arg("correlation") = "delta",
      py::arg("sigma") = 1.0, py::arg("threads") = 1);
  m.def(
      "perfect_correlation_map",
      [](const imaging::ModeGrid& grid, const Array& alpha) {
        return map_array(imaging::perfect_correlation_map({grid, flat_values(grid, alpha)}));
      },
      py::arg("grid"), py::arg("alpha"));
  m.def(
      "herzog_map",
      [](const imaging::ModeGrid& grid, const Array& alpha) {
        return map_array(imaging::herzog_map({grid, flat_values(grid, alpha)}, imaging::delta_correlation(grid)));
      },
      py::arg("grid"), py::arg("alpha"));
  m.def(
      "add_shot_noise",
      [](const imaging::ModeGrid& grid, const Array& map, std::int64_t total_counts, std::uint64_t seed) {
        return map_array(imaging::add_shot_noise(map_from(grid, map, "bb"), total_counts, seed));
      },
      py::arg("grid"), py::arg("map"), py::arg("total_counts"), py::arg("seed") = 0);
  m.def("dominant_fringe_frequency", &imaging::dominant_fringe_frequency, py::arg("profile"));

  m.def("wrap", &recover::wrap, py::arg("angle"));
  m.def(
      "rank2_phase_factorization",
      [](const imaging::ModeGrid& grid, const Array& map, std::optional<std::size_t> reference) {
        recover::FactorizationOptions opts;
        opts.reference = reference;
        return wrapped_dict(recover::rank2_phase_factorization(map_from(grid, map, "bb"), opts));
      },
      py::arg("grid"), py::arg("map"), py::arg("reference") = py::none());
  m.def(
      "quadrature_two_reference",
      [](const imaging::ModeGrid& grid, const Array& map, std::size_t r0, std::size_t r1) {
        return wrapped_dict(recover::quadrature_two_reference(map_from(grid, map, "bb"), r0, r1));
      },
      py::arg("grid"), py::arg("map"), py::arg("r0"), py::arg("r1"));
  m.def(
      "unwrap_2d",
      [](const imaging::ModeGrid& grid, const Array& wrapped) {
        return field_array(grid, recover::unwrap_2d(wrapped_from(grid, wrapped)).values);
      },
      py::arg("grid"), py::arg("wrapped"));
  m.def(
      "align_and_rms",
      [](const imaging::ModeGrid& grid, const Array& reconstructed, const Array& truth) {
        const auto r = recover::align_and_rms({grid, flat_values(grid, reconstructed)}, {grid, flat_values(grid, truth)});
        py::dict d;
        d["rms_error"] = r.rms_error;
        d["offset_applied"] = r.offset_applied;
        d["sign_flipped"] = r.sign_flipped;
        return d;
      },
      py::arg("grid"), py::arg("reconstructed"), py::arg("truth"));

  m.def(
      "read_grid_file",
      [](const std::filesystem::path& path) {
        const auto f = io::read_grid_file(path);
        return py::make_tuple(f.grid, field_array(f.grid, f.values));
      },
      py::arg("path"));
  m.def(
      "read_map",
      [](const std::filesystem::path& path) {
        const auto map = io::read_map(path);
        return py::make_tuple(map.grid, map_array(map), imaging::to_string(map.ports));
      },
      py::arg("path"), "Coincidence map CSV plus sidecar: (grid, values, ports).");

  m.def("verify", [](std::uint64_t seed) {
    py::list rows;
    for (const auto& c : cli::run_verify_suite(seed)) rows.append(py::make_tuple(c.name, c.measured, c.tolerance, c.passed));
    return rows;
  }, py::arg("seed") = 0);
  m.attr("__version__") = PSIPI_VERSION;
}
