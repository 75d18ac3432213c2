#include "wbdc/sim.hpp"

#include <algorithm>
#include <cmath>

namespace wbdc {
namespace {

struct ConstraintStack {
  Matrix jacobian;
  Vector drift;
  int contact_rows = 0;
};

ConstraintStack stack_constraints(const RobotModel& model, const Kinematics& kin,
                                  const std::vector<ContactSpec>& contacts,
                                  const std::vector<InternalConstraintSpec>& internals) {
  auto [jc, dc] = contact_jacobian(model, kin, contacts);
  auto [ji, di] = internal_jacobian(model, kin, internals);
  ConstraintStack s;
  s.contact_rows = static_cast<int>(jc.rows());
  s.jacobian.resize(jc.rows() + ji.rows(), model.dof());
  s.jacobian << jc, ji;
  s.drift.resize(dc.size() + di.size());
  s.drift << dc, di;
  return s;
}

// Smallest local normal force over the stacked contact wrenches, and its index.
std::pair<double, int> min_normal_force(const std::vector<ContactSpec>& contacts, const Vector& f) {
  double worst = std::numeric_limits<double>::infinity();
  int idx = -1;
  int r = 0;
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const int d = contacts[i].wrench_dim();
    const Vec3 local = contacts[i].rotation_to_local * f.segment<3>(r + d - 3);
    if (local.z() < worst) {
      worst = local.z();
      idx = static_cast<int>(i);
    }
    r += d;
  }
  return {worst, idx};
}

}  // namespace

ConstrainedAccel constrained_forward_dynamics(const RobotModel& model, const RobotState& state,
                                              const Vector& tau,
                                              const std::vector<ContactSpec>& contacts,
                                              const std::vector<InternalConstraintSpec>& internals,
                                              const std::vector<ExternalWrench>& external) {
  validate_state(model, state);
  if (tau.size() != model.num_actuated())
    throw DimensionError("torque vector has " + std::to_string(tau.size()) + " entries, expected " +
                         std::to_string(model.num_actuated()));
  const Kinematics kin = compute_kinematics(model, state);
  const DynamicsTerms dyn = dynamics_terms(model, state, kin);

  Vector force = model.actuation_matrix().transpose() * tau - dyn.b - dyn.g;
  for (const auto& w : external) {
    const int fi = model.frame_index(w.frame);
    force += frame_jacobian(model, kin, fi, JacobianKind::Full6).transpose() * w.wrench;
  }

  const Eigen::LLT<Matrix> llt(dyn.A);
  const ConstraintStack cs = stack_constraints(model, kin, contacts, internals);
  ConstrainedAccel out;
  if (cs.jacobian.rows() == 0) {
    out.qddot = llt.solve(force);
    return out;
  }
  const Matrix a_inv_jt = llt.solve(cs.jacobian.transpose());
  Matrix lambda_inv = cs.jacobian * a_inv_jt;
  lambda_inv = 0.5 * (lambda_inv + lambda_inv.transpose());
  const Vector free_acc = llt.solve(force);
  const Vector lambda = psd_pinv(lambda_inv) * (-cs.drift - cs.jacobian * free_acc);
  out.qddot = free_acc + a_inv_jt * lambda;
  out.contact_forces = lambda.head(cs.contact_rows);
  out.internal_forces = lambda.tail(lambda.size() - cs.contact_rows);
  return out;
}

Vector project_velocity(const RobotModel& model, const RobotState& state,
                        const std::vector<ContactSpec>& contacts,
                        const std::vector<InternalConstraintSpec>& internals, Vector* impulse) {
  const Kinematics kin = compute_kinematics(model, state);
  const ConstraintStack cs = stack_constraints(model, kin, contacts, internals);
  if (cs.jacobian.rows() == 0) {
    if (impulse) *impulse = Vector::Zero(model.dof());
    return state.qdot;
  }
  const DynamicsTerms dyn = dynamics_terms(model, state, kin);
  const Eigen::LLT<Matrix> llt(dyn.A);
  const Matrix a_inv_jt = llt.solve(cs.jacobian.transpose());
  Matrix lambda_inv = cs.jacobian * a_inv_jt;
  lambda_inv = 0.5 * (lambda_inv + lambda_inv.transpose());
  const Vector p = psd_pinv(lambda_inv) * (cs.jacobian * state.qdot);
  if (impulse) *impulse = -cs.jacobian.transpose() * p;
  return state.qdot - a_inv_jt * p;
}

StepResult integrate_step(const RobotModel& model, const RobotState& state, const Vector& tau,
                          const std::vector<ContactSpec>& contacts, double dt,
                          const std::vector<InternalConstraintSpec>& internals) {
  if (!(dt > 0.0) || dt > 5e-3) throw InvalidState("integration step must lie in (0, 0.005] s");
  StepResult out;
  out.contacts = contacts;
  while (true) {
    out.dynamics = constrained_forward_dynamics(model, state, tau, out.contacts, internals);
    if (out.contacts.empty()) break;
    const auto [fz, idx] = min_normal_force(out.contacts, out.dynamics.contact_forces);
    if (fz >= -1e-6) break;
    out.released.push_back(out.contacts[static_cast<std::size_t>(idx)].frame);
    out.contacts.erase(out.contacts.begin() + idx);
  }

  RobotState next;
  next.qdot = state.qdot + dt * out.dynamics.qddot;
  next.q = integrate_configuration(model, state.q, next.qdot, dt);
  next.qdot = project_velocity(model, next, out.contacts, internals, &out.impulse);
  out.state = std::move(next);
  return out;
}

// ---------------------------------------------------------------------------

Trace run_scenario(const Scenario& scenario_in) {
  Scenario scenario = scenario_in;
  validate(scenario);
  resolve_origins(scenario);
  const RobotModel& model = *scenario.model;
  WbdcController controller(model, scenario.config);

  Trace trace;
  RobotState state = scenario.initial;
  const int steps = scenario.num_steps();
  const std::size_t nc = scenario.contacts.size();
  std::vector<char> lifted(nc, 0);
  std::vector<int> window(nc, -1);
  std::vector<char> engaged(nc, 0);
  trace.records.reserve(static_cast<std::size_t>(steps));

  for (int k = 0; k < steps; ++k) {
    const double t = k * scenario.dt;

    std::vector<int> idx;
    std::vector<ContactSpec> scripted = scripted_contacts(scenario, t, &idx);
    std::vector<ContactSpec> contacts;
    std::vector<int> active_idx;
    std::vector<char> now(nc, 0);
    for (std::size_t i = 0; i < scripted.size(); ++i) {
      const auto c = static_cast<std::size_t>(idx[i]);
      const int w = scenario.contacts[c].window_at(t);
      if (w != window[c]) {
        window[c] = w;
        lifted[c] = 0;
      }
      if (lifted[c]) continue;
      now[c] = 1;
      contacts.push_back(std::move(scripted[i]));
      active_idx.push_back(idx[i]);
    }

    TraceRecord rec;
    bool touchdown = false;
    for (std::size_t c = 0; c < nc; ++c) {
      if (now[c] && !engaged[c]) {
        if (k > 0) trace.events.push_back({t, scenario.contacts[c].spec.frame, "engage"});
        touchdown = true;
      }
      if (!now[c] && engaged[c] && !lifted[c])
        trace.events.push_back({t, scenario.contacts[c].spec.frame, "release"});
    }
    engaged = now;
    if (touchdown) state.qdot = project_velocity(model, state, contacts, scenario.internals, &rec.impulse);
    else rec.impulse = Vector::Zero(model.dof());

    rec.t = t;
    rec.state = state;
    rec.contact_scripts = active_idx;
    rec.contacts = contacts;
    rec.tasks = scripted_tasks(scenario, t);
    try {
      rec.output = controller.step(state, rec.tasks, contacts, scenario.internals, scenario.weights);
    } catch (const Error& e) {
      throw SimulationAborted(e.what(), std::move(trace), t);
    }

    StepResult step = integrate_step(model, state, rec.output.tau, contacts, scenario.dt,
                                     scenario.internals);
    // Forces applied by the simulator, laid out like the engaged contact list.
    int total = 0;
    for (const auto& c : contacts) total += c.wrench_dim();
    rec.sim_contact_forces = Vector::Zero(total);
    {
      int r = 0, s = 0;
      for (const auto& c : contacts) {
        const bool kept = std::find(step.released.begin(), step.released.end(), c.frame) ==
                          step.released.end();
        if (kept) {
          rec.sim_contact_forces.segment(r, c.wrench_dim()) =
              step.dynamics.contact_forces.segment(s, c.wrench_dim());
          s += c.wrench_dim();
        }
        r += c.wrench_dim();
      }
    }
    for (const auto& frame : step.released) {
      trace.events.push_back({t, frame, "lift_off"});
      for (std::size_t i = 0; i < contacts.size(); ++i)
        if (contacts[i].frame == frame) {
          lifted[static_cast<std::size_t>(active_idx[i])] = 1;
          engaged[static_cast<std::size_t>(active_idx[i])] = 0;
        }
    }
    rec.step_impulse = step.impulse;
    state = std::move(step.state);
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace wbdc
