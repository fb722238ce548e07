#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tvsolid/cli_io.hpp"
#include "tvsolid/driver.hpp"
#include "tvsolid/oracles.hpp"

namespace py = pybind11;
using namespace tvsolid;

namespace {

py::array_t<double> vector_field_to_numpy(const VectorField& f) {
  py::array_t<double> out({f.n, f.n, 2});
  auto r = out.mutable_unchecked<3>();
  for (int j = 0; j < f.n; ++j)
    for (int i = 0; i < f.n; ++i)
      for (int c = 0; c < 2; ++c) r(j, i, c) = f.comp(i, j, c);
  return out;
}

py::array_t<double> scalar_field_to_numpy(const ScalarField& f) {
  py::array_t<double> out({f.n, f.n});
  auto r = out.mutable_unchecked<2>();
  for (int j = 0; j < f.n; ++j)
    for (int i = 0; i < f.n; ++i) r(j, i) = f.at(i, j);
  return out;
}

py::dict ledger_to_dict(const EnergyLedger& led) {
  py::dict d;
  auto col = [&](const char* name, auto getter) {
    py::list values;
    for (const auto& r : led.rows) values.append(getter(r));
    d[name] = values;
  };
  col("step", [](const LedgerRow& r) { return r.step; });
  col("t", [](const LedgerRow& r) { return r.t; });
  col("M", [](const LedgerRow& r) { return r.M; });
  col("Wcpl", [](const LedgerRow& r) { return r.Wcpl; });
  col("Win_total", [](const LedgerRow& r) { return r.Win_total; });
  col("E_total", [](const LedgerRow& r) { return r.E_total; });
  col("kinetic_window", [](const LedgerRow& r) { return r.kinetic_window; });
  col("diss_step", [](const LedgerRow& r) { return r.diss_step; });
  col("diss_cum", [](const LedgerRow& r) { return r.diss_cum; });
  col("flux_cum", [](const LedgerRow& r) { return r.flux_cum; });
  col("work_cum", [](const LedgerRow& r) { return r.work_cum; });
  col("res_internal", [](const LedgerRow& r) { return r.res_internal; });
  col("res_mech_identity", [](const LedgerRow& r) { return r.res_mech_identity; });
  col("drift_total", [](const LedgerRow& r) { return r.drift_total; });
  col("V_k", [](const LedgerRow& r) { return r.V_k; });
  col("G_k", [](const LedgerRow& r) { return r.G_k; });
  col("min_theta", [](const LedgerRow& r) { return r.min_theta; });
  col("min_det", [](const LedgerRow& r) { return r.min_det; });
  col("monitor_weighted_H1", [](const LedgerRow& r) { return r.monitor_weighted_H1; });
  col("monitor_eps_strainrate", [](const LedgerRow& r) { return r.monitor_eps_strainrate; });
  return d;
}

py::list reports_to_pylist(const std::vector<OracleReport>& reports) {
  py::list out;
  for (const auto& r : reports) {
    py::dict d;
    d["name"] = r.name;
    d["samples"] = r.samples;
    d["max_error"] = r.max_error;
    d["tolerance"] = r.tolerance;
    d["pass"] = r.pass;
    d["observed_constant"] = r.observed_constant;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Staggered thermo-viscoelastodynamics simulator (2-D Kelvin-Voigt solid "
            "with strain-gradient energy, time-delayed inertia and heat coupling)";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<StepFailure>(m, "StepFailure", PyExc_RuntimeError);

  py::class_<MaterialParams>(m, "MaterialParams")
      .def(py::init<>())
      .def_readwrite("p", &MaterialParams::p)
      .def_readwrite("mu", &MaterialParams::mu)
      .def_readwrite("gamma", &MaterialParams::gamma)
      .def_readwrite("q_det", &MaterialParams::q_det)
      .def_readwrite("c_V", &MaterialParams::c_V)
      .def_readwrite("alpha", &MaterialParams::alpha)
      .def_readwrite("kappa0", &MaterialParams::kappa0)
      .def_readwrite("C0", &MaterialParams::C0)
      .def("validate", &MaterialParams::validate);

  // constitutive functions (2x2 matrices map to numpy arrays)
  m.def("eval_Wel", &eval_Wel, py::arg("mat"), py::arg("F"));
  m.def("grad_Wel", &grad_Wel, py::arg("mat"), py::arg("F"));
  m.def("eval_h_scalar", &eval_h_scalar, py::arg("mat"), py::arg("s"));
  m.def("eval_H", &eval_H, py::arg("mat"), py::arg("v"));
  m.def("eval_DH", &eval_DH, py::arg("mat"), py::arg("v"));
  m.def("eval_Wcpl", &eval_Wcpl, py::arg("mat"), py::arg("F"), py::arg("theta"));
  m.def("grad_Wcpl_F", &grad_Wcpl_F, py::arg("mat"), py::arg("F"), py::arg("theta"));
  m.def("eval_Win", &eval_Win, py::arg("mat"), py::arg("F"), py::arg("theta"));
  m.def("invert_Win", &invert_Win, py::arg("mat"), py::arg("F"), py::arg("w"));
  m.def("eval_R", &eval_R, py::arg("mat"), py::arg("F"), py::arg("Fdot"), py::arg("theta"));
  m.def("eval_dR_dFdot", &eval_dR_dFdot, py::arg("mat"), py::arg("F"), py::arg("Fdot"),
        py::arg("theta"));
  m.def("eval_xi", &eval_xi, py::arg("mat"), py::arg("F"), py::arg("Fdot"), py::arg("theta"));
  m.def("eval_K", &eval_K, py::arg("mat"), py::arg("theta"));
  m.def("pullback_K", &pullback_K, py::arg("mat"), py::arg("F"), py::arg("theta"));

  py::enum_<InitialDeformationSpec::Kind>(m, "DeformationKind")
      .value("Id", InitialDeformationSpec::Kind::Id)
      .value("Bump", InitialDeformationSpec::Kind::Bump);
  py::class_<InitialDeformationSpec>(m, "InitialDeformationSpec")
      .def(py::init<>())
      .def_readwrite("kind", &InitialDeformationSpec::kind)
      .def_readwrite("ax", &InitialDeformationSpec::ax)
      .def_readwrite("ay", &InitialDeformationSpec::ay)
      .def_readwrite("mollify_passes", &InitialDeformationSpec::mollify_passes);

  py::enum_<InitialVelocitySpec::Kind>(m, "VelocityKind")
      .value("Zero", InitialVelocitySpec::Kind::Zero)
      .value("Bump", InitialVelocitySpec::Kind::Bump);
  py::class_<InitialVelocitySpec>(m, "InitialVelocitySpec")
      .def(py::init<>())
      .def_readwrite("kind", &InitialVelocitySpec::kind)
      .def_readwrite("ax", &InitialVelocitySpec::ax)
      .def_readwrite("ay", &InitialVelocitySpec::ay);

  py::class_<InitialTemperatureSpec>(m, "InitialTemperatureSpec")
      .def(py::init<>())
      .def_readwrite("value", &InitialTemperatureSpec::value)
      .def_readwrite("bump_amp", &InitialTemperatureSpec::bump_amp);

  py::enum_<ForceSpec::Kind>(m, "ForceKind")
      .value("Zero", ForceSpec::Kind::Zero)
      .value("Constant", ForceSpec::Kind::Constant)
      .value("Gaussian", ForceSpec::Kind::Gaussian);
  py::enum_<ForceSpec::Time>(m, "ForceTime")
      .value("Constant", ForceSpec::Time::Constant)
      .value("Linear", ForceSpec::Time::Linear)
      .value("Quadratic", ForceSpec::Time::Quadratic);
  py::class_<ForceSpec>(m, "ForceSpec")
      .def(py::init<>())
      .def_readwrite("kind", &ForceSpec::kind)
      .def_readwrite("time", &ForceSpec::time)
      .def_readwrite("fx", &ForceSpec::fx)
      .def_readwrite("fy", &ForceSpec::fy)
      .def_readwrite("cx", &ForceSpec::cx)
      .def_readwrite("cy", &ForceSpec::cy)
      .def_readwrite("width", &ForceSpec::width);

  py::class_<BoundaryTempSpec>(m, "BoundaryTempSpec")
      .def(py::init<>())
      .def_readwrite("value", &BoundaryTempSpec::value)
      .def_readwrite("rate", &BoundaryTempSpec::rate);

  py::class_<SchemeConfig>(m, "SchemeConfig")
      .def(py::init<>())
      .def_readwrite("T", &SchemeConfig::T)
      .def_readwrite("tau", &SchemeConfig::tau)
      .def_readwrite("h", &SchemeConfig::h)
      .def_readwrite("eps", &SchemeConfig::eps)
      .def_readwrite("rho", &SchemeConfig::rho)
      .def_readwrite("kappa", &SchemeConfig::kappa)
      .def_readwrite("n", &SchemeConfig::n)
      .def_readwrite("snapshot_every", &SchemeConfig::snapshot_every)
      .def_readwrite("material", &SchemeConfig::material)
      .def_readwrite("y0", &SchemeConfig::y0)
      .def_readwrite("v0", &SchemeConfig::v0)
      .def_readwrite("theta0", &SchemeConfig::theta0)
      .def_readwrite("force", &SchemeConfig::force)
      .def_readwrite("theta_b", &SchemeConfig::theta_b)
      .def("validate", &SchemeConfig::validate)
      .def("steps", &SchemeConfig::steps)
      .def("delay_steps", &SchemeConfig::delay_steps);

  m.def("parse_config_text", &parse_config_text, py::arg("text"));
  m.def("parse_config_file", &parse_config_file, py::arg("path"));
  m.def("config_to_text", &config_to_text, py::arg("config"));

  py::class_<RunResult>(m, "RunResult")
      .def_property_readonly("num_steps",
                             [](const RunResult& r) { return r.trajectory.num_steps(); })
      .def("ledger", [](const RunResult& r) { return ledger_to_dict(r.ledger); })
      .def(
          "y",
          [](const RunResult& r, int k) { return vector_field_to_numpy(r.trajectory.y_at(k)); },
          py::arg("k"))
      .def(
          "theta",
          [](const RunResult& r, int k) { return scalar_field_to_numpy(r.trajectory.theta.at(k)); },
          py::arg("k"))
      .def(
          "velocity",
          [](const RunResult& r, int k) { return vector_field_to_numpy(r.trajectory.velocity(k)); },
          py::arg("k"))
      .def(
          "min_det",
          [](const RunResult& r, int k) { return min_det(r.trajectory.grid, r.trajectory.y_at(k)); },
          py::arg("k"))
      .def("monitors", [](const RunResult& r) {
        const AprioriMonitors mo = apriori_monitors(r.ledger);
        py::dict d;
        d["max_G"] = mo.max_G;
        d["V_final"] = mo.V_final;
        d["eps_strainrate"] = mo.eps_strainrate;
        d["sup_M"] = mo.sup_M;
        d["min_det"] = mo.min_det;
        d["weighted_H1"] = mo.weighted_H1;
        return d;
      });

  m.def("run", &run, py::arg("config"),
        "Run the staggered scheme and return the trajectory with its energy ledger");

  m.def(
      "fd_gradient_suite",
      [](std::uint64_t seed, const MaterialParams& mat) {
        return reports_to_pylist(fd_gradient_suite(seed, mat));
      },
      py::arg("seed"), py::arg("mat"));
  m.def(
      "symmetry_suite",
      [](std::uint64_t seed, const MaterialParams& mat) {
        return reports_to_pylist(symmetry_suite(seed, mat));
      },
      py::arg("seed"), py::arg("mat"));
  m.def(
      "identity_suite",
      [](std::uint64_t seed, const MaterialParams& mat) {
        return reports_to_pylist(identity_suite(seed, mat));
      },
      py::arg("seed"), py::arg("mat"));
  m.def(
      "bound_audit_suite",
      [](std::uint64_t seed, const MaterialParams& mat) {
        return reports_to_pylist(bound_audit_suite(seed, mat));
      },
      py::arg("seed"), py::arg("mat"));

  m.def("cmd_run", &cmd_run, py::arg("config_path"), py::arg("out_dir"));
  m.def("cmd_study", &cmd_study, py::arg("config_path"), py::arg("mode"), py::arg("levels"),
        py::arg("out_dir"), py::arg("parallel") = false);
  m.def("cmd_verify", &cmd_verify, py::arg("seed"));
}
