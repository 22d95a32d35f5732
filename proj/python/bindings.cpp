// Python module kirman._core.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "kirman/abm.hpp"
#include "kirman/config.hpp"
#include "kirman/error.hpp"
#include "kirman/market.hpp"
#include "kirman/runner.hpp"
#include "kirman/sde.hpp"
#include "kirman/stats.hpp"

namespace py = pybind11;
using namespace kirman;

namespace {

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

py::dict fit_dict(const stats::PowerLawFit& f) {
  py::dict d;
  d["exponent"] = f.exponent;
  d["intercept"] = f.intercept;
  d["stderr"] = f.stderr_;
  d["fit_range"] = py::make_tuple(f.fit_range.lo, f.fit_range.hi);
  d["r_squared"] = f.r_squared;
  d["n_points"] = f.n_points;
  return d;
}

py::list summary_list(const std::vector<runner::SummaryRow>& rows) {
  py::list out;
  for (const auto& r : rows) {
    py::dict d;
    d["quantity"] = r.quantity;
    d["measured"] = r.measured;
    d["predicted"] = r.predicted;
    d["abs_error"] = r.abs_error;
    d["tolerance"] = r.tolerance;
    d["pass"] = r.pass ? py::object(py::bool_(*r.pass)) : py::object(py::none());
    out.append(d);
  }
  return out;
}

config::KeyValues key_values_from(const py::dict& options) {
  config::KeyValues kv;
  for (const auto& [k, v] : options) {
    const std::string key = py::str(k);
    if (py::isinstance<py::bool_>(v)) {
      kv.set(key, v.cast<bool>() ? "true" : "false");
    } else if (py::isinstance<py::float_>(v)) {
      kv.set(key, config::format_double(v.cast<double>()));
    } else if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      std::string joined;
      for (const auto& item : v) {
        if (!joined.empty()) joined += ",";
        joined += config::format_double(item.cast<double>());
      }
      kv.set(key, joined);
    } else {
      kv.set(key, py::str(v));
    }
  }
  return kv;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Herding model, stochastic equations and estimators";
  m.attr("__version__") = runner::kVersion;

  static py::exception<Error> error_type(m, "KirmanError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object cls = error_type;
      py::object exc = cls(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  // Stochastic equations.
  py::class_<sde::SdeSpec>(m, "SdeSpec")
      .def(py::init<>())
      .def_static("population_x", &sde::SdeSpec::population_x, py::arg("eps1"), py::arg("eps2"), py::arg("alpha"))
      .def_static("return_y", &sde::SdeSpec::return_y, py::arg("eps1"), py::arg("eps2"), py::arg("alpha"))
      .def_static("powerlaw", &sde::SdeSpec::powerlaw, py::arg("eta"), py::arg("lambda_"))
      .def_static("cev", &sde::SdeSpec::cev, py::arg("a_lin"), py::arg("b_amp"), py::arg("eta"))
      .def_property(
          "kind", [](const sde::SdeSpec& s) { return std::string(sde::to_string(s.kind)); },
          [](sde::SdeSpec& s, const std::string& k) { s.kind = sde::parse_model_kind(k); })
      .def_readwrite("eps1", &sde::SdeSpec::eps1)
      .def_readwrite("eps2", &sde::SdeSpec::eps2)
      .def_readwrite("alpha", &sde::SdeSpec::alpha)
      .def_readwrite("eta", &sde::SdeSpec::eta)
      .def_readwrite("lambda_", &sde::SdeSpec::lambda)
      .def_readwrite("a_lin", &sde::SdeSpec::a_lin)
      .def_readwrite("b_amp", &sde::SdeSpec::b_amp)
      .def_readwrite("y_min", &sde::SdeSpec::y_min)
      .def_readwrite("y_max", &sde::SdeSpec::y_max)
      .def_readwrite("noise_scale", &sde::SdeSpec::noise_scale)
      .def("validate", &sde::SdeSpec::validate);

  py::class_<sde::StepControl>(m, "StepControl")
      .def(py::init<>())
      .def_readwrite("kappa", &sde::StepControl::kappa)
      .def_readwrite("dt_min", &sde::StepControl::dt_min)
      .def_readwrite("dt_max", &sde::StepControl::dt_max)
      .def_readwrite("floor_fraction", &sde::StepControl::floor_fraction);

  m.def(
      "coefficients",
      [](const sde::SdeSpec& spec, double state) {
        const auto c = sde::coefficients(spec, state);
        return py::make_tuple(c.drift, c.diffusion);
      },
      py::arg("spec"), py::arg("state"), "Return (drift, diffusion) at a state.");

  m.def(
      "predict_exponents",
      [](const sde::SdeSpec& spec) {
        const auto e = sde::predict_exponents(spec);
        py::dict d;
        d["eta"] = e.eta;
        d["lambda"] = e.lambda;
        d["beta"] = e.beta;
        return d;
      },
      py::arg("spec"));

  m.def(
      "integrate",
      [](const sde::SdeSpec& spec, double y0, double t_end, double dt_sample, std::uint64_t seed,
         const sde::StepControl& ctrl) {
        sde::Trajectory tr;
        {
          py::gil_scoped_release release;
          tr = sde::integrate(spec, y0, ctrl, t_end, dt_sample, seed);
        }
        py::dict info;
        info["steps"] = tr.stats.steps;
        info["floor_steps"] = tr.stats.floor_steps;
        info["reflections"] = tr.stats.reflections;
        info["step_floor_warning"] = tr.stats.step_floor_warning;
        return py::make_tuple(to_array(tr.values), info);
      },
      py::arg("spec"), py::arg("y0"), py::arg("t_end"), py::arg("dt_sample"), py::arg("seed"),
      py::arg("step") = sde::StepControl{},
      "Integrate on the grid k * dt_sample; returns (values, info).");

  m.def("default_initial_state", &sde::default_initial_state, py::arg("spec"));

  // Agent model.
  py::class_<abm::AbmParams>(m, "AbmParams")
      .def(py::init<>())
      .def_readwrite("N", &abm::AbmParams::N)
      .def_readwrite("sigma1", &abm::AbmParams::sigma1)
      .def_readwrite("sigma2", &abm::AbmParams::sigma2)
      .def_readwrite("h", &abm::AbmParams::h)
      .def_readwrite("alpha", &abm::AbmParams::alpha)
      .def_readwrite("rate_cap", &abm::AbmParams::rate_cap)
      .def("validate", &abm::AbmParams::validate);

  m.def(
      "jump_rates",
      [](const abm::AbmParams& p, long X) {
        const auto r = abm::jump_rates(p, X);
        return py::make_tuple(r.up, r.down);
      },
      py::arg("params"), py::arg("X"), "Return (up, down) transition rates at X.");
  m.def("default_dt", &abm::default_dt, py::arg("params"), py::arg("target_total") = 0.1);
  m.def(
      "simulate_fixed_step",
      [](const abm::AbmParams& p, long X0, long n_steps, double dt, std::uint64_t seed) {
        abm::DiscreteTrajectory tr;
        {
          py::gil_scoped_release release;
          tr = abm::simulate_fixed_step(p, X0, n_steps, dt, seed);
        }
        return py::make_tuple(to_array(tr.times), to_array(tr.states));
      },
      py::arg("params"), py::arg("X0"), py::arg("n_steps"), py::arg("dt"), py::arg("seed"));
  m.def(
      "simulate_event_driven",
      [](const abm::AbmParams& p, long X0, double dt_sample, std::size_t n_samples, std::uint64_t seed) {
        std::vector<long> states;
        {
          py::gil_scoped_release release;
          states = abm::simulate_event_driven_on_grid(p, X0, dt_sample, n_samples, seed);
        }
        return to_array(states);
      },
      py::arg("params"), py::arg("X0"), py::arg("dt_sample"), py::arg("n_samples"), py::arg("seed"),
      "Gillespie path sampled on the grid k * dt_sample.");

  // Market mapping.
  py::class_<market::MarketParams>(m, "MarketParams")
      .def(py::init<>())
      .def_readwrite("r0", &market::MarketParams::r0)
      .def_readwrite("Pf", &market::MarketParams::Pf)
      .def_readwrite("T", &market::MarketParams::T)
      .def_readwrite("mood_flip_rate", &market::MarketParams::mood_flip_rate);
  m.def("x_to_y", &market::x_to_y, py::arg("x"));
  m.def("y_to_x", &market::y_to_x, py::arg("y"));
  m.def("price", &market::price, py::arg("market"), py::arg("x"), py::arg("xi"));
  m.def("log_return", &market::log_return, py::arg("market"), py::arg("x_now"), py::arg("xi_now"),
        py::arg("x_prev"), py::arg("xi_prev"));
  m.def("adiabatic_return", &market::adiabatic_return, py::arg("market"), py::arg("y"), py::arg("zeta"));

  // Estimators.
  m.def(
      "log_binned_pdf",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> samples, int bins_per_decade, double lo,
         double hi) {
        const auto s = to_vector(samples);
        const auto e = stats::log_binned_pdf(s, bins_per_decade, {lo, hi});
        py::dict d;
        d["bin_centers"] = to_array(e.bin_centers);
        d["bin_edges"] = to_array(e.bin_edges);
        d["density"] = to_array(e.density);
        d["counts"] = to_array(e.counts);
        d["n_in_range"] = e.n_in_range;
        d["n_total"] = e.n_total;
        return d;
      },
      py::arg("samples"), py::arg("bins_per_decade"), py::arg("lo"), py::arg("hi"));
  m.def(
      "psd",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> values, double dt_sample,
         std::size_t segment_length, double overlap, int bins_per_decade) {
        const auto v = to_vector(values);
        auto s = stats::psd(v, dt_sample, segment_length, overlap);
        if (bins_per_decade > 0) s = stats::log_bin_spectrum(s, bins_per_decade);
        return py::make_tuple(to_array(s.frequencies), to_array(s.power));
      },
      py::arg("values"), py::arg("dt_sample"), py::arg("segment_length") = 16384, py::arg("overlap") = 0.5,
      py::arg("bins_per_decade") = 0, "Welch estimate; returns (frequencies, power).");
  m.def(
      "fit_powerlaw",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
         py::array_t<double, py::array::c_style | py::array::forcecast> y, double lo, double hi) {
        const auto xs = to_vector(x), ys = to_vector(y);
        return fit_dict(stats::fit_powerlaw(xs, ys, {lo, hi}));
      },
      py::arg("x"), py::arg("y"), py::arg("lo"), py::arg("hi"),
      "Least-squares fit of y ~ x^exponent on [lo, hi] in log-log space.");
  m.def(
      "hurst_spectrum",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> values, double dt_sample,
         std::vector<double> q_values, std::size_t lag_lo, std::size_t lag_hi, int lags_per_decade) {
        const auto v = to_vector(values);
        const auto lags = stats::log_spaced_lags(lag_lo, lag_hi, lags_per_decade);
        const double dt = dt_sample;
        auto mf = stats::hh_correlation(v, dt, q_values, lags);
        mf = stats::hurst_spectrum(std::move(mf), {static_cast<double>(lag_lo) * dt, static_cast<double>(lag_hi) * dt});
        py::dict d;
        d["q"] = to_array(mf.q_values);
        d["H"] = to_array(mf.H);
        d["H_stderr"] = to_array(mf.H_stderr);
        d["lags"] = to_array(mf.lags);
        d["spread"] = mf.H_spread();
        return d;
      },
      py::arg("values"), py::arg("dt_sample"), py::arg("q_values") = stats::default_q_values(),
      py::arg("lag_lo") = 1, py::arg("lag_hi") = 1000, py::arg("lags_per_decade") = 10);

  // Experiments.
  m.def(
      "run_experiment",
      [](const py::dict& options) {
        const auto cfg = runner::ExperimentConfig::from_key_values(key_values_from(options));
        runner::RunManifest man;
        {
          py::gil_scoped_release release;
          man = runner::run_experiment(cfg);
        }
        py::dict d;
        d["output_dir"] = cfg.output.dir;
        d["summary"] = summary_list(man.analysis.summary);
        d["all_pass"] = man.analysis.all_pass();
        d["warnings"] = man.warnings;
        d["wall_clock_seconds"] = man.wall_clock_seconds;
        return d;
      },
      py::arg("options"),
      "Run one experiment from dotted configuration keys, e.g. {'model.alpha': 1}.");
  m.def(
      "reproduce_figure",
      [](const std::string& figure, const std::filesystem::path& out, long workers) {
        runner::FigureReport rep;
        const auto id = runner::parse_figure(figure);
        {
          py::gil_scoped_release release;
          rep = runner::reproduce_figure(id, out, workers);
        }
        py::list rows;
        for (const auto& r : rep.rows) {
          py::dict d = summary_list({r.row})[0].cast<py::dict>();
          d["figure"] = r.figure;
          d["alpha"] = r.alpha;
          rows.append(d);
        }
        py::dict d;
        d["rows"] = rows;
        d["all_pass"] = rep.all_pass();
        return d;
      },
      py::arg("figure"), py::arg("out"), py::arg("workers") = 0);
}
