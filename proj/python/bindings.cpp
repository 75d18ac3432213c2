#include <optional>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wbdc/cli.hpp"
#include "wbdc/errors.hpp"
#include "wbdc/model.hpp"
#include "wbdc/qp.hpp"
#include "wbdc/scenario.hpp"
#include "wbdc/sim.hpp"

namespace py = pybind11;
using namespace wbdc;

namespace {

RobotState make_state(const RobotModel& m, const Vector& q, const std::optional<Vector>& qdot) {
  RobotState s{q, qdot ? *qdot : Vector::Zero(m.dof())};
  validate_state(m, s);
  return s;
}

// Trace as a dict of stacked arrays, one row per control step.
py::dict trace_dict(const Trace& tr) {
  const auto n = static_cast<Eigen::Index>(tr.records.size());
  Vector t(n);
  Matrix q, qdot, tau;
  std::vector<bool> relaxed;
  for (Eigen::Index i = 0; i < n; ++i) {
    const TraceRecord& r = tr.records[static_cast<std::size_t>(i)];
    if (i == 0) {
      q.resize(n, r.state.q.size());
      qdot.resize(n, r.state.qdot.size());
      tau.resize(n, r.output.tau.size());
    }
    t(i) = r.t;
    q.row(i) = r.state.q;
    qdot.row(i) = r.state.qdot;
    tau.row(i) = r.output.tau;
    relaxed.push_back(r.output.diagnostics.relaxed);
  }
  py::list events;
  for (const auto& e : tr.events) events.append(py::make_tuple(e.t, e.frame, e.kind));
  py::dict d;
  d["t"] = t;
  d["q"] = q;
  d["qdot"] = qdot;
  d["tau"] = tau;
  d["relaxed"] = relaxed;
  d["events"] = events;
  return d;
}

}  // namespace

PYBIND11_MODULE(_wbdc, mod) {
  mod.doc() = "Whole-body dynamic control core";

  // Translators run newest first, so derived types are registered last.
  const auto error = py::register_exception<Error>(mod, "Error", PyExc_RuntimeError);
  const auto qp_error = py::register_exception<QpError>(mod, "QpError", error.ptr());
  py::register_exception<Infeasible>(mod, "Infeasible", qp_error.ptr());
  py::register_exception<SimulationAborted>(mod, "SimulationAborted", error.ptr());

  py::class_<RobotModel, std::shared_ptr<RobotModel>>(mod, "RobotModel")
      .def_property_readonly("dof", &RobotModel::dof)
      .def_property_readonly("nq", &RobotModel::nq)
      .def_property_readonly("floating_base", &RobotModel::floating_base)
      .def_property_readonly("num_actuated", &RobotModel::num_actuated)
      .def_property_readonly("total_mass", &RobotModel::total_mass)
      .def_property_readonly("gravity", [](const RobotModel& m) { return Vector(m.gravity()); })
      .def_property_readonly("frames",
                             [](const RobotModel& m) {
                               std::vector<std::string> names;
                               for (const auto& f : m.frames()) names.push_back(f.name);
                               return names;
                             })
      .def("neutral_configuration", &RobotModel::neutral_configuration)
      .def(
          "dynamics",
          [](const RobotModel& m, const Vector& q, const std::optional<Vector>& qdot) {
            const DynamicsTerms d = dynamics_terms(m, make_state(m, q, qdot));
            return py::make_tuple(d.A, d.b, d.g);
          },
          py::arg("q"), py::arg("qdot") = py::none(), "Mass matrix, Coriolis and gravity terms.")
      .def(
          "center_of_mass",
          [](const RobotModel& m, const Vector& q) {
            const RobotState s = make_state(m, q, std::nullopt);
            return Vector(center_of_mass(m, compute_kinematics(m, s)).position);
          },
          py::arg("q"));

  mod.def(
      "load_model", [](const std::string& text) { return std::make_shared<RobotModel>(load_model(text)); },
      py::arg("text"));
  mod.def(
      "load_model_file", [](const std::string& path) { return std::make_shared<RobotModel>(load_model_file(path)); },
      py::arg("path"));

  py::class_<QpSolution>(mod, "QpResult")
      .def_readonly("x", &QpSolution::x)
      .def_readonly("active_set", &QpSolution::active_set)
      .def_readonly("eq_multipliers", &QpSolution::eq_multipliers)
      .def_readonly("ineq_multipliers", &QpSolution::ineq_multipliers)
      .def_readonly("objective", &QpSolution::objective)
      .def_readonly("iterations", &QpSolution::iterations);

  mod.def(
      "solve_qp",
      [](const Matrix& H, const Vector& c, const std::optional<Matrix>& A_eq, const std::optional<Vector>& b_eq,
         const std::optional<Matrix>& A_in, const std::optional<Vector>& b_in, int max_iterations) {
        const auto n = H.rows();
        const QpProblem p{H, c, A_eq ? *A_eq : Matrix(0, n), b_eq ? *b_eq : Vector(0),
                          A_in ? *A_in : Matrix(0, n), b_in ? *b_in : Vector(0)};
        validate(p);
        return qp_solve(p, max_iterations);
      },
      py::arg("H"), py::arg("c"), py::arg("A_eq") = py::none(), py::arg("b_eq") = py::none(),
      py::arg("A_in") = py::none(), py::arg("b_in") = py::none(), py::arg("max_iterations") = 1000,
      "min 1/2 x'Hx + c'x  s.t.  A_eq x = b_eq, A_in x >= b_in");

  py::class_<Scenario>(mod, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_readwrite("duration", &Scenario::duration)
      .def_readonly("dt", &Scenario::dt)
      .def_property_readonly("model", [](const Scenario& s) { return std::const_pointer_cast<RobotModel>(s.model); })
      .def_property_readonly("num_steps", &Scenario::num_steps)
      .def_property_readonly("initial_q", [](const Scenario& s) { return s.initial.q; })
      .def_property_readonly("task_sets", [](const Scenario& s) {
        std::vector<std::string> names;
        for (const auto& ts : s.task_sets) names.push_back(ts.name);
        return names;
      });

  mod.def("load_scenario", &load_scenario, py::arg("path"));
  mod.def(
      "run_scenario",
      [](const Scenario& s) {
        std::optional<Trace> tr;
        {
          py::gil_scoped_release release;
          tr = run_scenario(s);
        }
        return trace_dict(*tr);
      },
      py::arg("scenario"), "Closed-loop run; returns stacked arrays keyed by name.");
  mod.def(
      "bench_scenario",
      [](const Scenario& s, int iterations) {
        std::vector<BenchRow> rows;
        {
          py::gil_scoped_release release;
          rows = bench_scenario(s, iterations);
        }
        py::list out;
        for (const auto& r : rows) out.append(py::make_tuple(r.task_set, r.mean_ms, r.sd_ms, r.iterations));
        return out;
      },
      py::arg("scenario"), py::arg("iterations") = 1000);
}
