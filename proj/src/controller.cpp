#include "wbdc/controller.hpp"

#include <chrono>
#include <cmath>
#include <utility>

#include "wbdc/errors.hpp"

namespace wbdc {

CycleContext prepare_cycle(const RobotModel& model, const RobotState& state,
                           const std::vector<ContactSpec>& contacts,
                           const std::vector<InternalConstraintSpec>& internals,
                           const PinvConfig& cfg) {
  validate_state(model, state);
  CycleContext ctx;
  ctx.model = &model;
  ctx.state = state;
  ctx.kin = compute_kinematics(model, state);
  ctx.dyn = dynamics_terms(model, state, ctx.kin);
  const int n = model.dof();
  Eigen::LLT<Matrix> llt(ctx.dyn.A);
  if (llt.info() != Eigen::Success) throw InvalidMatrix("mass matrix is not positive definite");
  ctx.a_inv = llt.solve(Matrix::Identity(n, n));
  ctx.a_inv = 0.5 * (ctx.a_inv + ctx.a_inv.transpose());
  ctx.internal = internal_projection(model, ctx.kin, ctx.a_inv, internals, cfg);
  for (const auto& c : contacts) validate(c);
  ctx.contacts = contacts;
  std::tie(ctx.contact_jacobian, ctx.contact_drift) = contact_jacobian(model, ctx.kin, contacts);
  return ctx;
}

ContactLevel contact_consistent_accel(const CycleContext& ctx, const PinvConfig& cfg) {
  const InternalProjection& in = ctx.internal;
  ContactLevel out;

  // Acceleration that satisfies the internal constraints alone.
  Vector qdd_int = Vector::Zero(ctx.model->dof());
  if (in.jacobian.rows() > 0) qdd_int = -in.j_bar * in.jdot_qdot;

  out.projected_jacobian = ctx.contact_jacobian * in.null_space;
  out.j_bar = dyn_consistent_inv(out.projected_jacobian, ctx.a_inv, ctx.contact_jacobian, cfg);
  out.qddot = qdd_int + out.j_bar * (-ctx.contact_drift - ctx.contact_jacobian * qdd_int);
  out.null_space = in.null_space - out.j_bar * out.projected_jacobian;
  return out;
}

FirstTaskLevel first_task_accel(const CycleContext& ctx, const ContactLevel& contact,
                                const TaskLevel& first, const PinvConfig& cfg) {
  FirstTaskLevel out;
  out.projected_jacobian = first.jacobian * contact.null_space;
  out.delta_map = dyn_consistent_inv(out.projected_jacobian, ctx.a_inv, first.jacobian, cfg);
  out.qddot_base = contact.qddot + out.delta_map * (first.command - first.jdot_qdot -
                                                    first.jacobian * contact.qddot);
  out.null_space = contact.null_space - out.delta_map * out.projected_jacobian;
  return out;
}

Vector first_task_qddot(const FirstTaskLevel& first, const Vector& delta) {
  if (delta.size() == 0) return first.qddot_base;
  return first.qddot_base + first.delta_map * delta;
}

bool check_floating_base_span(const CycleContext& ctx, const FirstTaskLevel& first, double tol) {
  const int fb = ctx.model->floating_dof();
  if (fb == 0) return true;
  const Matrix sa = ctx.dyn.A.topRows(fb);
  const Matrix m = sa * first.null_space;
  return numerical_rank(m, tol, sa.norm()) == 0;
}

WbdcQpInputs wbdc_qp_inputs(const CycleContext& ctx, const FirstTaskLevel& first) {
  const InternalProjection& in = ctx.internal;
  WbdcQpInputs q;
  q.A = ctx.dyn.A;
  q.b_plus_g = in.null_space.transpose() * (ctx.dyn.b + ctx.dyn.g) + in.bias_correction;
  q.contact_jacobian = ctx.contact_jacobian * in.null_space;
  q.qddot_base = first.qddot_base;
  q.delta_map = first.delta_map;
  q.floating_dof = ctx.model->floating_dof();
  return q;
}

namespace {

QpSolution checked_solve(QpSolver& solver, const QpProblem& p, int max_iter) {
  QpSolution s = solver.solve(p, max_iter);
  switch (s.status) {
    case QpStatus::Optimal:
      return s;
    case QpStatus::Infeasible:
      throw Infeasible("reaction force QP is infeasible: the contact cones exclude force balance",
                       s.certificate);
    case QpStatus::IterationLimit:
      throw IterationLimit("reaction force QP hit the iteration limit");
    case QpStatus::NotConvex:
      throw NotConvex("reaction force QP Hessian is not positive definite");
  }
  return s;
}

}  // namespace

ReactionForces solve_reaction_forces(const CycleContext& ctx, const FirstTaskLevel& first,
                                     const TaskLevel& first_level, const QpWeights& weights,
                                     const WbdcConfig& cfg, QpSolver& solver) {
  if (!(weights.q1 > 0.0) || !(weights.q2 > 0.0))
    throw AssemblyError("QP weights must be positive");
  const int fb = ctx.model->floating_dof();
  const int nf = static_cast<int>(ctx.contact_jacobian.rows());
  const int nd = static_cast<int>(first.delta_map.cols());

  ReactionForces out;
  out.stacked = Vector::Zero(nf);
  out.delta = Vector::Zero(nd);

  if (fb > 0 || nf > 0) {
    const WbdcQpInputs in = wbdc_qp_inputs(ctx, first);
    const ConeMatrix cone = augment_cones(ctx.contacts);
    const Vector q1 = Vector::Constant(nf, weights.q1);

    bool solved = false;
    if (cfg.relaxation == RelaxationMode::FeasibilityFirst && nf >= fb && nf > 0) {
      const QpSolution s = solver.solve(build_unrelaxed_qp(in, cone, q1), cfg.qp_max_iterations);
      if (s.status == QpStatus::Optimal) {
        out.stacked = s.x;
        out.qp_iterations = s.iterations;
        solved = true;
      } else if (s.status != QpStatus::Infeasible) {
        checked_solve(solver, build_unrelaxed_qp(in, cone, q1), cfg.qp_max_iterations);
      }
    }
    if (!solved) {
      Vector q2 = first_level.relaxation_weight;
      if (q2.size() != nd) q2 = Vector::Constant(nd, weights.q2);
      const QpSolution s =
          checked_solve(solver, build_wbdc_qp(in, cone, q1, q2), cfg.qp_max_iterations);
      out.stacked = s.x.head(nf);
      out.delta = s.x.tail(nd);
      out.qp_iterations += s.iterations;
      out.relaxed = true;
    }
  }

  int r = 0;
  for (const auto& c : ctx.contacts) {
    out.per_contact.push_back(out.stacked.segment(r, c.wrench_dim()));
    r += c.wrench_dim();
  }
  out.qddot = first_task_qddot(first, out.delta);
  return out;
}

HierarchyState hierarchy_resolve(const CycleContext& ctx, const Vector& qddot_first,
                                 const Matrix& null_first, const std::vector<TaskLevel>& levels,
                                 const PinvConfig& cfg, bool record, std::size_t max_levels) {
  HierarchyState st;
  st.qddot = qddot_first;
  Matrix n_prec = null_first;
  const std::size_t last = std::min(levels.size(), max_levels);
  for (std::size_t k = 1; k < last; ++k) {
    const TaskLevel& lvl = levels[k];
    const Matrix jp = lvl.jacobian * n_prec;
    const Matrix jbar = dyn_consistent_inv(jp, ctx.a_inv, lvl.jacobian, cfg);
    const Vector phi = lvl.command - lvl.jdot_qdot;
    st.qddot += jbar * (phi - lvl.jacobian * st.qddot);
    if (record) st.levels.push_back({jp, n_prec, st.qddot});
    n_prec -= jbar * jp;
  }
  return st;
}

TorqueResult compute_torque(const CycleContext& ctx, const Vector& qddot,
                            const Vector& reaction_forces, double tol) {
  const RobotModel& model = *ctx.model;
  const InternalProjection& in = ctx.internal;
  const int n = model.dof();
  const int fb = model.floating_dof();

  Vector rhs = ctx.dyn.A * qddot + in.null_space.transpose() * (ctx.dyn.b + ctx.dyn.g) +
               in.bias_correction;
  if (reaction_forces.size() > 0)
    rhs -= in.null_space.transpose() * (ctx.contact_jacobian.transpose() * reaction_forces);

  const Matrix full = (model.actuation_matrix() * in.null_space).transpose();
  const bool direct = in.jacobian.rows() == 0 && model.num_actuated() == n - fb;

  TorqueResult out;
  if (direct) {
    // Every non-floating DoF is actuated in tree order.
    out.tau.resize(model.num_actuated());
    const auto& idx = model.actuated_velocity_indices();
    for (int i = 0; i < model.num_actuated(); ++i) out.tau(i) = rhs(idx[i]);
  } else {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
    cod.setThreshold(1e-10);
    cod.compute(in.actuation_map);
    out.tau = cod.solve(rhs.tail(n - fb));
  }
  out.residual = (full * out.tau - rhs).cwiseAbs().maxCoeff();
  if (!std::isfinite(out.residual) || out.residual > tol)
    throw TorqueInconsistency("torque extraction residual " + std::to_string(out.residual) +
                              " exceeds " + std::to_string(tol));
  return out;
}

// ---------------------------------------------------------------------------

WbdcController::WbdcController(const RobotModel& model, WbdcConfig cfg)
    : model_(model), cfg_(cfg) {
  validate(cfg_.pinv);
}

namespace {

template <class F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const FirstTaskDoesNotSpanBase&) {
    throw;
  } catch (const Infeasible& e) {
    throw Infeasible(std::string("[") + name + "] " + e.what(), e.certificate());
  } catch (const Error& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

ControlOutput WbdcController::step(const RobotState& state, const std::vector<TaskSpec>& tasks,
                                   const std::vector<ContactSpec>& contacts,
                                   const std::vector<InternalConstraintSpec>& internals,
                                   const QpWeights& weights) {
  const auto t0 = std::chrono::steady_clock::now();
  if (tasks.empty()) throw StageError("tasks", "at least one task is required");

  const CycleContext ctx =
      stage("model", [&] { return prepare_cycle(model_, state, contacts, internals, cfg_.pinv); });

  TaskContext tctx{model_, ctx.state, ctx.kin, std::nullopt, std::nullopt};
  const std::vector<TaskLevel> levels =
      stage("tasks", [&] { return build_task_levels(tctx, tasks, weights.q2); });

  const ContactLevel contact = stage("contact", [&] { return contact_consistent_accel(ctx, cfg_.pinv); });
  const FirstTaskLevel first =
      stage("first_task", [&] { return first_task_accel(ctx, contact, levels.front(), cfg_.pinv); });

  if (!check_floating_base_span(ctx, first, cfg_.span_tolerance)) {
    const int fb = model_.floating_dof();
    const int r = numerical_rank(ctx.dyn.A.topRows(fb) * first.null_space, cfg_.span_tolerance,
                                 ctx.dyn.A.topRows(fb).norm());
    throw FirstTaskDoesNotSpanBase(
        "[span_check] first task does not span the floating base: rank(S_f A N_1) = " +
        std::to_string(r) + ", expected 0");
  }

  const ReactionForces rf = stage(
      "qp", [&] { return solve_reaction_forces(ctx, first, levels.front(), weights, cfg_, qp_); });

  hierarchy_ = stage("hierarchy", [&] {
    return hierarchy_resolve(ctx, rf.qddot, first.null_space, levels, cfg_.pinv,
                             cfg_.record_hierarchy);
  });

  const TorqueResult tr =
      stage("torque", [&] { return compute_torque(ctx, hierarchy_.qddot, rf.stacked, cfg_.torque_tolerance); });

  ControlOutput out;
  out.tau = tr.tau;
  out.reaction_forces = rf.per_contact;
  out.reaction_stacked = rf.stacked;
  out.delta = rf.delta;
  out.qddot = hierarchy_.qddot;
  out.qddot_first = rf.qddot;
  out.diagnostics.qp_iterations = rf.qp_iterations;
  out.diagnostics.relaxed = rf.relaxed;
  out.diagnostics.torque_residual = tr.residual;
  for (const auto& lvl : levels)
    out.diagnostics.task_residuals.push_back(
        (lvl.jacobian * out.qddot + lvl.jdot_qdot - lvl.command).norm());
  out.diagnostics.solve_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

ControlOutput wbdc_step(const RobotModel& model, const RobotState& state,
                        const std::vector<TaskSpec>& tasks, const std::vector<ContactSpec>& contacts,
                        const std::vector<InternalConstraintSpec>& internals,
                        const QpWeights& weights, const WbdcConfig& cfg) {
  WbdcController c(model, cfg);
  return c.step(state, tasks, contacts, internals, weights);
}

}  // namespace wbdc
