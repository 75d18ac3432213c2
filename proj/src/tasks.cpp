#include <algorithm>
#include <map>

#include "wbdc/controller.hpp"
#include "wbdc/errors.hpp"

namespace wbdc {

const char* to_string(TaskKind k) {
  switch (k) {
    case TaskKind::CenterOfMass: return "com";
    case TaskKind::CentroidalMomentum: return "centroidal_momentum";
    case TaskKind::FramePosition: return "frame_position";
    case TaskKind::FrameOrientation: return "frame_orientation";
    case TaskKind::JointPosture: return "joint_posture";
  }
  return "unknown";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "com") return TaskKind::CenterOfMass;
  if (s == "centroidal_momentum") return TaskKind::CentroidalMomentum;
  if (s == "frame_position") return TaskKind::FramePosition;
  if (s == "frame_orientation") return TaskKind::FrameOrientation;
  if (s == "joint_posture") return TaskKind::JointPosture;
  throw TaskConfigError("unknown task type: " + s);
}

const CenterOfMass& TaskContext::center_of_mass() {
  if (!com) com = wbdc::center_of_mass(model, kin);
  return *com;
}

const CentroidalMomentum& TaskContext::centroidal() {
  if (!momentum) {
    momentum = centroidal_momentum(model, kin);
    momentum->momentum = momentum->matrix * state.qdot;
  }
  return *momentum;
}

namespace {

std::vector<int> posture_joints(const RobotModel& model, const TaskSpec& task) {
  std::vector<int> out;
  if (task.joints.empty()) {
    for (int j = 0; j < static_cast<int>(model.joints().size()); ++j)
      if (model.joints()[j].type != JointType::Floating) out.push_back(j);
    return out;
  }
  for (const auto& name : task.joints) {
    int j = -1;
    try {
      j = model.joint_index(name);
    } catch (const ModelParseError& e) {
      throw TaskConfigError("task " + task.name + ": " + e.what());
    }
    if (model.joints()[j].type == JointType::Floating)
      throw TaskConfigError("task " + task.name + ": posture cannot include the floating joint");
    out.push_back(j);
  }
  return out;
}

Vector or_zero(const Vector& v, Eigen::Index n) { return v.size() == n ? v : Vector::Zero(n); }

}  // namespace

int task_dimension(const RobotModel& model, const TaskSpec& task) {
  switch (task.kind) {
    case TaskKind::CenterOfMass:
    case TaskKind::FramePosition:
    case TaskKind::FrameOrientation:
      return 3;
    case TaskKind::CentroidalMomentum:
      return 6;
    case TaskKind::JointPosture:
      return static_cast<int>(posture_joints(model, task).size());
  }
  return 0;
}

TaskTerms evaluate_task(TaskContext& ctx, const TaskSpec& task) {
  const RobotModel& model = ctx.model;
  TaskTerms t;
  switch (task.kind) {
    case TaskKind::CenterOfMass: {
      const CenterOfMass& c = ctx.center_of_mass();
      t.jacobian = c.jacobian;
      t.jdot_qdot = c.jdot_qdot;
      t.position = c.position;
      break;
    }
    case TaskKind::CentroidalMomentum: {
      const CentroidalMomentum& h = ctx.centroidal();
      t.jacobian = h.matrix;
      t.jdot_qdot = h.bias;
      t.position = ctx.center_of_mass().position;
      break;
    }
    case TaskKind::FramePosition: {
      const int fi = model.frame_index(task.frame);
      t.jacobian = frame_jacobian(model, ctx.kin, fi, JacobianKind::Point3);
      t.jdot_qdot = jdot_qdot(model, ctx.kin, fi, JacobianKind::Point3);
      t.position = frame_pose(model, ctx.kin, fi).position;
      break;
    }
    case TaskKind::FrameOrientation: {
      const int fi = model.frame_index(task.frame);
      t.jacobian = frame_jacobian(model, ctx.kin, fi, JacobianKind::Full6).topRows(3);
      t.jdot_qdot = jdot_qdot(model, ctx.kin, fi, JacobianKind::Full6).head(3);
      const Eigen::Quaterniond quat(frame_pose(model, ctx.kin, fi).rotation);
      t.position = Eigen::Vector4d(quat.w(), quat.x(), quat.y(), quat.z());
      break;
    }
    case TaskKind::JointPosture: {
      const std::vector<int> js = posture_joints(model, task);
      t.jacobian = Matrix::Zero(static_cast<Eigen::Index>(js.size()), model.dof());
      t.jdot_qdot = Vector::Zero(static_cast<Eigen::Index>(js.size()));
      t.position.resize(static_cast<Eigen::Index>(js.size()));
      for (std::size_t i = 0; i < js.size(); ++i) {
        const Joint& jt = model.joints()[js[i]];
        t.jacobian(static_cast<Eigen::Index>(i), jt.v_index) = 1.0;
        t.position(static_cast<Eigen::Index>(i)) = ctx.state.q(jt.q_index);
      }
      break;
    }
  }
  t.velocity = t.jacobian * ctx.state.qdot;
  return t;
}

Vector synthesize_command(TaskContext& ctx, const TaskSpec& task, const TaskTerms& terms) {
  const auto n = terms.jacobian.rows();
  if (task.desired_acceleration) {
    if (task.desired_acceleration->size() != n)
      throw TaskConfigError("task " + task.name + ": desired acceleration has dimension " +
                            std::to_string(task.desired_acceleration->size()) + ", expected " +
                            std::to_string(n));
    return *task.desired_acceleration;
  }
  const TaskReference& ref = task.reference;
  const Gains& g = task.gains;

  switch (task.kind) {
    case TaskKind::CentroidalMomentum: {
      const double mass = ctx.model.total_mass();
      const Vec3 com = ctx.center_of_mass().position;
      const Vec3 com_vel = terms.velocity.tail<3>() / mass;
      const Vector x_ref = ref.position.size() >= 3 ? Vector(ref.position.head(3)) : Vector(com);
      const Vector v_ref = or_zero(ref.velocity, 3);
      const Vector a_ref = or_zero(ref.acceleration, 3);
      Vector cmd(6);
      cmd.head<3>() = -g.kd * terms.velocity.head<3>();
      if (ref.position.size() == 7 && ctx.model.floating_dof() == 6) {
        const Eigen::Quaterniond cur = base_orientation(ctx.model, ctx.state.q);
        Eigen::Quaterniond des(ref.position(3), ref.position(4), ref.position(5), ref.position(6));
        Eigen::Quaterniond err = des.normalized() * cur.conjugate();
        if (err.w() < 0.0) err.coeffs() *= -1.0;
        cmd.head<3>() += g.kp * (ctx.centroidal().composite_inertia * (2.0 * err.vec()));
      }
      cmd.tail<3>() = mass * (a_ref + g.kd * (v_ref - com_vel) + g.kp * (x_ref - com));
      return cmd;
    }
    case TaskKind::FrameOrientation: {
      const Eigen::Quaterniond cur(terms.position(0), terms.position(1), terms.position(2),
                                   terms.position(3));
      Eigen::Quaterniond des = cur;
      if (ref.position.size() == 4)
        des = Eigen::Quaterniond(ref.position(0), ref.position(1), ref.position(2),
                                 ref.position(3)).normalized();
      Eigen::Quaterniond err = des * cur.conjugate();
      if (err.w() < 0.0) err.coeffs() *= -1.0;
      const Vec3 e = 2.0 * err.vec();
      return or_zero(ref.acceleration, 3) + g.kd * (or_zero(ref.velocity, 3) - terms.velocity) +
             g.kp * e;
    }
    default: {
      const Vector x_ref = ref.position.size() == n ? ref.position : terms.position;
      return or_zero(ref.acceleration, n) + g.kd * (or_zero(ref.velocity, n) - terms.velocity) +
             g.kp * (x_ref - terms.position);
    }
  }
}

std::vector<TaskLevel> build_task_levels(TaskContext& ctx, const std::vector<TaskSpec>& tasks,
                                         double default_q2) {
  std::map<int, std::vector<const TaskSpec*>> by_priority;
  for (const auto& t : tasks) {
    if (t.priority < 1) throw TaskConfigError("task " + t.name + ": priority must be >= 1");
    by_priority[t.priority].push_back(&t);
  }
  int expected = 1;
  for (const auto& [prio, _] : by_priority) {
    if (prio != expected)
      throw TaskConfigError("task priorities must be contiguous from 1 (missing " +
                            std::to_string(expected) + ")");
    ++expected;
  }

  const int n = ctx.model.dof();
  std::vector<TaskLevel> levels;
  levels.reserve(by_priority.size());
  for (const auto& [prio, specs] : by_priority) {
    std::vector<TaskTerms> terms;
    std::vector<Vector> cmds;
    TaskLevel lvl;
    lvl.priority = prio;
    int rows = 0;
    for (const TaskSpec* s : specs) {
      terms.push_back(evaluate_task(ctx, *s));
      cmds.push_back(synthesize_command(ctx, *s, terms.back()));
      lvl.names.push_back(s->name);
      lvl.dims.push_back(static_cast<int>(terms.back().jacobian.rows()));
      rows += lvl.dims.back();
    }
    lvl.jacobian.resize(rows, n);
    lvl.jdot_qdot.resize(rows);
    lvl.command.resize(rows);
    lvl.relaxation_weight.resize(rows);
    int r = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const int d = lvl.dims[i];
      lvl.jacobian.middleRows(r, d) = terms[i].jacobian;
      lvl.jdot_qdot.segment(r, d) = terms[i].jdot_qdot;
      lvl.command.segment(r, d) = cmds[i];
      if (specs[i]->relaxation_weight) {
        if (specs[i]->relaxation_weight->size() != d)
          throw TaskConfigError("task " + specs[i]->name + ": relaxation weight has dimension " +
                                std::to_string(specs[i]->relaxation_weight->size()));
        lvl.relaxation_weight.segment(r, d) = *specs[i]->relaxation_weight;
      } else {
        lvl.relaxation_weight.segment(r, d).setConstant(default_q2);
      }
      r += d;
    }
    levels.push_back(std::move(lvl));
  }
  return levels;
}

}  // namespace wbdc
