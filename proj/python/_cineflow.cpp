// Python bindings: artifact I/O, the flow residual, masks, metrics and the
// pipeline commands. Arrays cross the boundary as complex128 (t, x, y) copies.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cineflow/metrics.hpp"
#include "cineflow/motion.hpp"
#include "cineflow/pipeline.hpp"

namespace py = pybind11;
using namespace cineflow;

namespace {

using CArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;

ImageSequence to_sequence(const CArray& a) {
  if (a.ndim() != 3) throw py::value_error("expected a 3-d (t, x, y) array");
  const Dims d{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2))};
  return ImageSequence(d, std::vector<Complex>(a.data(), a.data() + a.size()));
}

CArray from_span(const Dims& d, std::span<const Complex> v) {
  CArray out({d.nt, d.nx, d.ny});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

CArray from_sequence(const ImageSequence& s) { return from_span(s.dims(), s.values()); }

SpatialMask to_spatial(const py::array_t<bool, py::array::c_style | py::array::forcecast>& m) {
  if (m.ndim() != 2) throw py::value_error("expected a 2-d (x, y) mask");
  SpatialMask out{static_cast<int>(m.shape(0)), static_cast<int>(m.shape(1)), {}};
  out.inside.assign(m.data(), m.data() + m.size());
  return out;
}

ExperimentConfig resolve(const std::filesystem::path& config, const std::optional<std::filesystem::path>& out,
                         std::optional<std::uint64_t> seed) {
  auto c = load_config(config);
  if (seed) c.reseed(*seed);
  if (out) c.output_dir = *out;
  return c;
}

py::dict report_dict(const metrics::MetricReport& r) {
  py::dict d;
  d["psnr"] = r.psnr;
  d["ssim"] = r.ssim;
  d["mean_psnr"] = r.mean_psnr;
  d["std_psnr"] = r.std_psnr;
  d["mean_ssim"] = r.mean_ssim;
  d["std_ssim"] = r.std_ssim;
  return d;
}

}  // namespace

PYBIND11_MODULE(_cineflow, m) {
  m.doc() = "Joint reconstruction of complex cine MRI and motion";

  static py::exception<Error> error(m, "CineflowError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      error(e.what());
    }
  });

  m.def("load_sequence", [](const std::filesystem::path& p) { return from_sequence(load_sequence(p)); }, py::arg("path"));
  m.def("save_sequence", [](const CArray& a, const std::filesystem::path& p) { save_sequence(to_sequence(a), p); },
        py::arg("array"), py::arg("path"));
  m.def("load_velocity",
        [](const std::filesystem::path& p) {
          const auto v = load_velocity(p);
          return py::make_tuple(from_span(v.dims(), v.vx()), from_span(v.dims(), v.vy()));
        },
        py::arg("path"), "(vx, vy) complex arrays");
  m.def("load_spatial_mask",
        [](const std::filesystem::path& p) {
          const auto s = load_spatial_mask(p);
          py::array_t<bool> out({s.nx, s.ny});
          std::copy(s.inside.begin(), s.inside.end(), out.mutable_data());
          return out;
        },
        py::arg("path"));

  m.def("flow_residual",
        [](const CArray& rho, const CArray& vx, const CArray& vy) {
          const VelocityField v(to_sequence(vx), to_sequence(vy));
          return from_sequence(motion::flow_residual(to_sequence(rho), v).r);
        },
        py::arg("rho"), py::arg("vx"), py::arg("vy"), "dt rho + vx conj(dx rho) + vy conj(dy rho)");

  m.def("make_mask",
        [](int nt, int nx, std::uint64_t seed, double central_fraction, bool full) {
          const auto mask =
              mri::make_mask(nt, nx, full ? mri::Acceleration::Full : mri::Acceleration::FourX, central_fraction, seed);
          std::vector<std::vector<int>> rows;
          for (int t = 0; t < mask.nt(); ++t) rows.push_back(mask.rows(t));
          return rows;
        },
        py::arg("nt"), py::arg("nx"), py::arg("seed"), py::arg("central_fraction") = 0.15, py::arg("full") = false,
        "sampled phase-encoding rows per frame");

  m.def("psnr", [](const CArray& gt, const CArray& rec, const py::array_t<bool>& mask) {
    return metrics::psnr_masked(to_sequence(gt), to_sequence(rec), to_spatial(mask));
  }, py::arg("gt"), py::arg("rec"), py::arg("mask"));
  m.def("ssim", [](const CArray& gt, const CArray& rec, const py::array_t<bool>& mask) {
    return metrics::ssim_masked(to_sequence(gt), to_sequence(rec), to_spatial(mask));
  }, py::arg("gt"), py::arg("rec"), py::arg("mask"));

  m.def("simulate",
        [](const std::filesystem::path& config, std::optional<std::filesystem::path> out, std::optional<std::uint64_t> seed) {
          const auto c = resolve(config, out, seed);
          py::gil_scoped_release nogil;
          app::cmd_simulate(c);
          return c.output_dir;
        },
        py::arg("config"), py::arg("out") = py::none(), py::arg("seed") = py::none(),
        "write simulation artifacts; returns the output directory");
  m.def("reconstruct",
        [](const std::filesystem::path& config, const std::string& model, std::optional<std::filesystem::path> out,
           std::optional<std::uint64_t> seed) {
          const auto c = resolve(config, out, seed);
          const auto mt = parse_model(model);
          Reconstruction rec;
          {
            py::gil_scoped_release nogil;
            rec = app::cmd_reconstruct(c, mt);
          }
          return py::make_tuple(from_sequence(rec.rho), rec.converged);
        },
        py::arg("config"), py::arg("model"), py::arg("out") = py::none(), py::arg("seed") = py::none(),
        "(rho, converged) for one model");
  m.def("evaluate",
        [](const std::filesystem::path& config, std::optional<std::filesystem::path> out, std::optional<std::uint64_t> seed) {
          const auto c = resolve(config, out, seed);
          app::EvaluateResult res;
          {
            py::gil_scoped_release nogil;
            res = app::cmd_evaluate(c);
          }
          py::dict d;
          for (const auto& [mt, r] : res.reports) d[py::str(name(mt))] = report_dict(r);
          return d;
        },
        py::arg("config"), py::arg("out") = py::none(), py::arg("seed") = py::none(),
        "metrics per reconstructed model, keyed by model name");
}
