#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dks/analysis.hpp"
#include "dks/errors.hpp"
#include "dks/gp.hpp"
#include "dks/io.hpp"
#include "dks/twa.hpp"

namespace py = pybind11;
using namespace dks;

namespace {

using CArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;

ModeField to_field(const CArray& a, double t = 0) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array of mode amplitudes");
  ModeField f(static_cast<int>(a.shape(0)), t);
  std::copy(a.data(), a.data() + a.shape(0), f.amplitudes.begin());
  return f;
}

CArray to_array(const std::vector<Complex>& v) {
  CArray out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::domain: return "domain";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::index: return "index";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::no_signal: return "no_signal";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dissipative Kerr soliton simulator: GP mean field and truncated-Wigner ensembles";

  static py::exception<Error> dks_error(m, "DksError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = dks_error;
      py::object inst = exc(e.what());
      inst.attr("kind") = kind_name(e.kind());
      inst.attr("exit_code") = exit_code(e.kind());
      PyErr_SetObject(dks_error.ptr(), inst.ptr());
    }
  });

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("kappa", &ModelParams::kappa)
      .def_readwrite("g", &ModelParams::g)
      .def_readwrite("sigma0", &ModelParams::sigma0)
      .def_readwrite("d1", &ModelParams::d1)
      .def_readwrite("d2", &ModelParams::d2)
      .def_readwrite("drive", &ModelParams::drive)
      .def_readwrite("modes", &ModelParams::modes)
      .def_readwrite("n_tilde", &ModelParams::n_tilde)
      .def_readwrite("co_rotating", &ModelParams::co_rotating)
      .def_readwrite("kappa_per_s", &ModelParams::kappa_per_s)
      .def_readwrite("omega_p_rad_per_s", &ModelParams::omega_p_rad_per_s)
      .def("validate", &ModelParams::validate)
      .def("__repr__", [](const ModelParams& p) { return "ModelParams(" + model_to_json(p).dump() + ")"; });

  m.def("baseline_model", &baseline_model, py::arg("modes") = 101);
  m.def("model_hash", &model_hash);
  m.def("rescale", &rescale, py::arg("model"), py::arg("n_tilde"));
  m.def("drive_threshold", [](const ModelParams& p) { return soliton_threshold(p).drive_threshold; });
  m.def("detuning_profile", [](const ModelParams& p) { return to_array(detuning_profile(p)); });

  m.def("fwm_naive", [](const CArray& a, double g) { return to_array(fwm_naive(to_field(a), g).amplitudes); });
  m.def("fwm_spectral", [](const CArray& a, double g) { return to_array(fwm_spectral(to_field(a), g).amplitudes); });

  py::class_<TimeSeriesRecord>(m, "Record")
      .def("__len__", &TimeSeriesRecord::size)
      .def_property_readonly("times", [](const TimeSeriesRecord& r) { return to_array(r.times()); })
      .def_property_readonly("taus", [](const TimeSeriesRecord& r) { return to_array(r.taus()); })
      .def_property_readonly("contrast", [](const TimeSeriesRecord& r) { return to_array(r.contrasts()); })
      .def_property_readonly("contrast_se", [](const TimeSeriesRecord& r) { return to_array(r.contrast_errors()); })
      .def_property_readonly("n_total", [](const TimeSeriesRecord& r) { return to_array(r.totals()); })
      .def_property_readonly("occupation",
                             [](const TimeSeriesRecord& r) {
                               const auto n = static_cast<py::ssize_t>(r.size());
                               const auto modes = n ? static_cast<py::ssize_t>(r.ticks()[0].occupation.size()) : 0;
                               py::array_t<double> out({n, modes});
                               auto v = out.mutable_unchecked<2>();
                               for (py::ssize_t i = 0; i < n; ++i)
                                 for (py::ssize_t j = 0; j < modes; ++j) v(i, j) = r.ticks()[i].occupation[j];
                               return out;
                             })
      .def_property_readonly("n_tilde", [](const TimeSeriesRecord& r) { return r.meta.n_tilde; })
      .def_property_readonly("kind", [](const TimeSeriesRecord& r) { return r.meta.kind; })
      .def("__eq__", [](const TimeSeriesRecord& a, const TimeSeriesRecord& b) { return a == b; });

  py::enum_<Scheme>(m, "Scheme").value("split_step", Scheme::split_step).value("euler", Scheme::euler);

  m.def("gp_step",
        [](const CArray& a, const ModelParams& p, double dt, Scheme s) {
          return to_array(gp_step(to_field(a), p, dt, s).amplitudes);
        },
        py::arg("field"), py::arg("model"), py::arg("dt"), py::arg("scheme") = Scheme::split_step);
  m.def("evolve_gp",
        [](const CArray& a, const ModelParams& p, double t_end, double cadence, double dt, Scheme s) {
          GpOptions o;
          o.dt = dt;
          o.scheme = s;
          GpRun run;
          const auto start = to_field(a);
          {
            py::gil_scoped_release release;
            run = evolve_gp(start, p, t_end, cadence, o);
          }
          return py::make_tuple(to_array(run.field.amplitudes), run.record);
        },
        py::arg("field"), py::arg("model"), py::arg("t_end"), py::arg("cadence"), py::arg("dt") = default_dt,
        py::arg("scheme") = Scheme::split_step);
  m.def("prepare_soliton",
        [](const ModelParams& p) {
          ModeField f;
          {
            py::gil_scoped_release release;
            f = prepare_soliton(p, {});
          }
          return to_array(f.amplitudes);
        },
        py::arg("model"));
  m.def("contrast", [](const CArray& a, int grid) { return observe_field(to_field(a), grid).contrast; },
        py::arg("field"), py::arg("grid") = default_grid);

  m.def("run_twa",
        [](const CArray& gp_field, const ModelParams& p, double n_tilde, int n_traj, std::uint64_t seed,
           double t_end, double cadence, double dt, int workers) {
          TimeSeriesRecord rec;
          const auto seed_field = to_field(gp_field);
          {
            py::gil_scoped_release release;
            auto ens = sample_initial(seed_field, n_tilde, n_traj, NoisePolicy(seed), model_hash(p));
            TwaOptions o;
            o.dt = dt;
            o.workers = workers;
            evolve_twa(ens, p, t_end, cadence, rec, o);
          }
          return rec;
        },
        py::arg("gp_field"), py::arg("model"), py::arg("n_tilde"), py::arg("n_traj"), py::arg("seed"),
        py::arg("t_end"), py::arg("cadence"), py::arg("dt") = default_dt, py::arg("workers") = 1);

  py::class_<GapFit>(m, "GapFit")
      .def_readonly("lambda_", &GapFit::lambda)
      .def_readonly("amplitude", &GapFit::amplitude)
      .def_readonly("lambda_se", &GapFit::lambda_se)
      .def_readonly("lambda_ci", &GapFit::lambda_ci)
      .def_readonly("tau_a", &GapFit::tau_a)
      .def_readonly("tau_b", &GapFit::tau_b)
      .def_readonly("points", &GapFit::points)
      .def_readonly("reduced_chi2", &GapFit::reduced_chi2)
      .def_readonly("autocorrelation_time", &GapFit::autocorrelation_time)
      .def_readonly("warning", &GapFit::warning);
  m.def("fit_gap",
        [](std::vector<double> tau, std::vector<double> c, std::vector<double> se) { return fit_gap(tau, c, se); },
        py::arg("tau"), py::arg("contrast"), py::arg("contrast_se") = std::vector<double>{});
  m.def("fit_gap_record", [](const TimeSeriesRecord& r) { return fit_gap(r); });

  py::class_<PowerLaw>(m, "PowerLaw")
      .def_readonly("a", &PowerLaw::a)
      .def_readonly("b", &PowerLaw::b)
      .def_readonly("a_se", &PowerLaw::a_se)
      .def_readonly("a_ci", &PowerLaw::a_ci);
  m.def("power_law_fit",
        [](std::vector<double> x, std::vector<double> y, std::vector<double> se) { return power_law_fit(x, y, se); },
        py::arg("x"), py::arg("y"), py::arg("y_se") = std::vector<double>{});

  m.def("load_record", &load_record);
  m.def("save_record", &save_record);
}
