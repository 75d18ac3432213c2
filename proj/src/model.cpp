#include "wbdc/model.hpp"

#include <cmath>
#include <deque>

#include "wbdc/errors.hpp"

namespace wbdc {

RobotModel::RobotModel(std::vector<Body> bodies, std::vector<Joint> joints,
                       std::vector<std::string> actuated, std::vector<Frame> frames,
                       Vec3 gravity)
    : bodies_(std::move(bodies)),
      frames_(std::move(frames)),
      actuated_names_(std::move(actuated)),
      gravity_(std::move(gravity)) {
  const int nb = static_cast<int>(bodies_.size());
  if (nb == 0) throw ModelParseError("bodies: at least one body is required");

  for (const auto& b : bodies_) {
    if (!(b.mass > 0.0) || !std::isfinite(b.mass))
      throw ModelParseError("bodies[" + b.name + "].mass: must be positive");
    if (!b.com.allFinite()) throw ModelParseError("bodies[" + b.name + "].com: not finite");
    if (!b.inertia.allFinite() || (b.inertia - b.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw ModelParseError("bodies[" + b.name + "].inertia: must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> eig(b.inertia);
    if (eig.eigenvalues().minCoeff() <= 0.0)
      throw ModelParseError("bodies[" + b.name + "].inertia: must be positive definite");
    total_mass_ += b.mass;
  }

  // Each body is the child of at most one joint; exactly one body has none.
  std::vector<int> parent_joint(nb, -1);
  int floating_count = 0;
  for (int j = 0; j < static_cast<int>(joints.size()); ++j) {
    const Joint& jt = joints[j];
    if (jt.child < 0 || jt.child >= nb)
      throw ModelTopologyError("joint " + jt.name + ": unknown child body");
    if (jt.type == JointType::Floating) {
      ++floating_count;
      if (jt.parent != -1)
        throw ModelTopologyError("joint " + jt.name + ": floating joint must attach to the world");
    } else {
      if (jt.parent < 0 || jt.parent >= nb)
        throw ModelTopologyError("joint " + jt.name + ": parent must be a body");
      if (jt.axis.norm() < 1e-12)
        throw ModelParseError("joints[" + jt.name + "].axis: zero vector");
    }
    if (parent_joint[jt.child] != -1)
      throw ModelTopologyError("body " + bodies_[jt.child].name + " has two parent joints");
    parent_joint[jt.child] = j;
  }
  if (floating_count > 1) throw ModelTopologyError("more than one floating joint");

  std::vector<int> roots;
  for (int b = 0; b < nb; ++b) {
    const int pj = parent_joint[b];
    if (pj == -1 || joints[pj].type == JointType::Floating) roots.push_back(b);
  }
  if (roots.size() != 1)
    throw ModelTopologyError("kinematic tree must have exactly one root body (found " +
                             std::to_string(roots.size()) + ")");
  root_ = roots.front();
  floating_ = floating_count == 1;
  if (floating_ && (parent_joint[root_] == -1 || joints[parent_joint[root_]].type != JointType::Floating))
    throw ModelTopologyError("floating joint must carry the root body");

  // Breadth-first order from the root; anything unreached sits on a cycle.
  std::vector<std::vector<int>> children(nb);
  for (int j = 0; j < static_cast<int>(joints.size()); ++j)
    if (joints[j].type != JointType::Floating) children[joints[j].parent].push_back(j);

  std::vector<int> order;
  std::vector<bool> seen(nb, false);
  std::deque<int> queue{root_};
  seen[root_] = true;
  if (floating_) order.push_back(parent_joint[root_]);
  while (!queue.empty()) {
    const int b = queue.front();
    queue.pop_front();
    for (int j : children[b]) {
      const int c = joints[j].child;
      if (seen[c]) throw ModelTopologyError("kinematic loop through body " + bodies_[c].name);
      seen[c] = true;
      order.push_back(j);
      queue.push_back(c);
    }
  }
  for (int b = 0; b < nb; ++b)
    if (!seen[b]) throw ModelTopologyError("body " + bodies_[b].name + " is on a cycle or detached");

  joints_.reserve(order.size());
  for (int j : order) joints_.push_back(joints[j]);

  body_joint_.assign(nb, -1);
  support_.assign(nb, {});
  int qi = 0, vi = 0;
  for (int j = 0; j < static_cast<int>(joints_.size()); ++j) {
    Joint& jt = joints_[j];
    jt.q_index = qi;
    jt.v_index = vi;
    if (jt.type == JointType::Floating) {
      qi += 7;
      vi += 6;
    } else {
      jt.axis.normalize();
      qi += 1;
      vi += 1;
      support_[jt.child] = support_[jt.parent];
    }
    support_[jt.child].push_back(j);
    body_joint_[jt.child] = j;
  }
  nq_ = qi;
  nv_ = vi;

  for (const auto& name : actuated_names_) {
    const int j = joint_index(name);
    if (joints_[j].type == JointType::Floating)
      throw ModelParseError("actuated: floating joint " + name + " cannot be actuated");
    for (int v : actuated_v_)
      if (v == joints_[j].v_index) throw ModelParseError("actuated: duplicate joint " + name);
    actuated_v_.push_back(joints_[j].v_index);
  }

  for (const auto& f : frames_) {
    if (f.body < 0 || f.body >= nb) throw ModelParseError("frames[" + f.name + "].body: unknown body");
    if (!f.offset.allFinite()) throw ModelParseError("frames[" + f.name + "].offset_xyz: not finite");
  }
  if (!gravity_.allFinite()) throw ModelParseError("gravity: not finite");
}

int RobotModel::frame_index(std::string_view name) const {
  for (int i = 0; i < static_cast<int>(frames_.size()); ++i)
    if (frames_[i].name == name) return i;
  throw FrameNotFound("unknown frame: " + std::string(name));
}

int RobotModel::joint_index(std::string_view name) const {
  for (int i = 0; i < static_cast<int>(joints_.size()); ++i)
    if (joints_[i].name == name) return i;
  throw ModelParseError("unknown joint: " + std::string(name));
}

int RobotModel::body_index(std::string_view name) const {
  for (int i = 0; i < static_cast<int>(bodies_.size()); ++i)
    if (bodies_[i].name == name) return i;
  throw ModelParseError("unknown body: " + std::string(name));
}

Matrix RobotModel::actuation_matrix() const {
  Matrix u = Matrix::Zero(num_actuated(), nv_);
  for (int i = 0; i < num_actuated(); ++i) u(i, actuated_v_[i]) = 1.0;
  return u;
}

Vector RobotModel::neutral_configuration() const {
  Vector q = Vector::Zero(nq_);
  if (floating_) q(3) = 1.0;
  return q;
}

void validate_state(const RobotModel& model, const RobotState& state) {
  if (state.q.size() != model.nq())
    throw InvalidState("q has dimension " + std::to_string(state.q.size()) + ", expected " +
                       std::to_string(model.nq()));
  if (state.qdot.size() != model.dof())
    throw InvalidState("qdot has dimension " + std::to_string(state.qdot.size()) +
                       ", expected " + std::to_string(model.dof()));
  if (!state.q.allFinite() || !state.qdot.allFinite()) throw InvalidState("state is not finite");
  if (model.floating_base() && std::abs(state.q.segment<4>(3).norm() - 1.0) > 1e-9)
    throw InvalidState("base quaternion is not unit length");
}

Eigen::Quaterniond base_orientation(const RobotModel& model, const Vector& q) {
  if (!model.floating_base()) return Eigen::Quaterniond::Identity();
  return Eigen::Quaterniond(q(3), q(4), q(5), q(6));
}

Kinematics compute_kinematics(const RobotModel& model, const RobotState& state) {
  validate_state(model, state);
  const std::size_t nb = model.bodies().size();
  const std::size_t nj = model.joints().size();
  Kinematics k;
  k.rotation.assign(nb, Mat3::Identity());
  k.position.assign(nb, Vec3::Zero());
  k.com.assign(nb, Vec3::Zero());
  k.omega.assign(nb, Vec3::Zero());
  k.velocity.assign(nb, Vec3::Zero());
  k.alpha_bias.assign(nb, Vec3::Zero());
  k.accel_bias.assign(nb, Vec3::Zero());
  k.joint_axis.assign(nj, Vec3::Zero());
  k.joint_origin.assign(nj, Vec3::Zero());

  const Vector& q = state.q;
  const Vector& v = state.qdot;
  for (std::size_t j = 0; j < nj; ++j) {
    const Joint& jt = model.joints()[j];
    const int c = jt.child;
    if (jt.type == JointType::Floating) {
      k.rotation[c] = base_orientation(model, q).toRotationMatrix();
      k.position[c] = q.segment<3>(0);
      k.omega[c] = v.segment<3>(0);
      k.velocity[c] = v.segment<3>(3);
      k.joint_axis[j] = Vec3::Zero();
      k.joint_origin[j] = k.position[c];
      continue;
    }
    const int p = jt.parent;
    const Mat3 r_joint = k.rotation[p] * jt.origin.linear();
    const Vec3 o_joint = k.position[p] + k.rotation[p] * jt.origin.translation();
    const Vec3 axis = r_joint * jt.axis;
    const double qj = q(jt.q_index);
    const double vj = v(jt.v_index);
    k.joint_axis[j] = axis;
    k.joint_origin[j] = o_joint;

    const Vec3& wp = k.omega[p];
    if (jt.type == JointType::Revolute) {
      k.rotation[c] = r_joint * Eigen::AngleAxisd(qj, jt.axis).toRotationMatrix();
      k.position[c] = o_joint;
      const Vec3 r = k.position[c] - k.position[p];
      k.omega[c] = wp + axis * vj;
      k.velocity[c] = k.velocity[p] + wp.cross(r);
      k.alpha_bias[c] = k.alpha_bias[p] + wp.cross(axis * vj);
      k.accel_bias[c] = k.accel_bias[p] + k.alpha_bias[p].cross(r) + wp.cross(wp.cross(r));
    } else {
      k.rotation[c] = r_joint;
      k.position[c] = o_joint + axis * qj;
      const Vec3 r = k.position[c] - k.position[p];
      k.omega[c] = wp;
      k.velocity[c] = k.velocity[p] + wp.cross(r) + axis * vj;
      k.alpha_bias[c] = k.alpha_bias[p];
      k.accel_bias[c] = k.accel_bias[p] + k.alpha_bias[p].cross(r) + wp.cross(wp.cross(r)) +
                        2.0 * wp.cross(axis * vj);
    }
  }
  for (std::size_t b = 0; b < nb; ++b)
    k.com[b] = k.position[b] + k.rotation[b] * model.bodies()[b].com;
  return k;
}

Matrix point_jacobian(const RobotModel& model, const Kinematics& kin, int body,
                      const Vec3& point, JacobianKind kind) {
  const int n = model.dof();
  Matrix j6 = Matrix::Zero(6, n);
  for (int ji : model.support()[body]) {
    const Joint& jt = model.joints()[ji];
    const int c = jt.v_index;
    switch (jt.type) {
      case JointType::Floating:
        j6.block<3, 3>(0, c).setIdentity();
        j6.block<3, 3>(3, c) = -skew(point - kin.joint_origin[ji]);
        j6.block<3, 3>(3, c + 3).setIdentity();
        break;
      case JointType::Revolute:
        j6.block<3, 1>(0, c) = kin.joint_axis[ji];
        j6.block<3, 1>(3, c) = kin.joint_axis[ji].cross(point - kin.joint_origin[ji]);
        break;
      case JointType::Prismatic:
        j6.block<3, 1>(3, c) = kin.joint_axis[ji];
        break;
    }
  }
  if (kind == JacobianKind::Point3) return j6.bottomRows(3);
  return j6;
}

Vector point_jdot_qdot(const Kinematics& kin, int body, const Vec3& point, JacobianKind kind) {
  const Vec3 r = point - kin.position[body];
  const Vec3& w = kin.omega[body];
  const Vec3 lin = kin.accel_bias[body] + kin.alpha_bias[body].cross(r) + w.cross(w.cross(r));
  if (kind == JacobianKind::Point3) return lin;
  Vector out(6);
  out << kin.alpha_bias[body], lin;
  return out;
}

FramePose frame_pose(const RobotModel& model, const Kinematics& kin, int frame) {
  const Frame& f = model.frames().at(frame);
  return {kin.rotation[f.body], kin.position[f.body] + kin.rotation[f.body] * f.offset};
}

FramePose frame_pose(const RobotModel& model, const RobotState& state, std::string_view frame) {
  const int fi = model.frame_index(frame);
  return frame_pose(model, compute_kinematics(model, state), fi);
}

Matrix frame_jacobian(const RobotModel& model, const Kinematics& kin, int frame, JacobianKind kind) {
  const Frame& f = model.frames().at(frame);
  return point_jacobian(model, kin, f.body, frame_pose(model, kin, frame).position, kind);
}

Matrix frame_jacobian(const RobotModel& model, const RobotState& state, std::string_view frame,
                      JacobianKind kind) {
  const int fi = model.frame_index(frame);
  return frame_jacobian(model, compute_kinematics(model, state), fi, kind);
}

Vector jdot_qdot(const RobotModel& model, const Kinematics& kin, int frame, JacobianKind kind) {
  const Frame& f = model.frames().at(frame);
  return point_jdot_qdot(kin, f.body, frame_pose(model, kin, frame).position, kind);
}

Vector jdot_qdot(const RobotModel& model, const RobotState& state, std::string_view frame,
                 JacobianKind kind) {
  const int fi = model.frame_index(frame);
  return jdot_qdot(model, compute_kinematics(model, state), fi, kind);
}

DynamicsTerms dynamics_terms(const RobotModel& model, const RobotState& state) {
  return dynamics_terms(model, state, compute_kinematics(model, state));
}

DynamicsTerms dynamics_terms(const RobotModel& model, const RobotState& /*state*/,
                             const Kinematics& kin) {
  const int n = model.dof();
  DynamicsTerms d{Matrix::Zero(n, n), Vector::Zero(n), Vector::Zero(n)};
  for (int b = 0; b < static_cast<int>(model.bodies().size()); ++b) {
    const Body& body = model.bodies()[b];
    const Matrix j6 = point_jacobian(model, kin, b, kin.com[b], JacobianKind::Full6);
    const auto jw = j6.topRows<3>();
    const auto jv = j6.bottomRows<3>();
    const Mat3 iw = kin.rotation[b] * body.inertia * kin.rotation[b].transpose();
    const Vector bias = point_jdot_qdot(kin, b, kin.com[b], JacobianKind::Full6);
    const Vec3 alpha0 = bias.head<3>();
    const Vec3 accel0 = bias.tail<3>();
    const Vec3& w = kin.omega[b];

    d.A.noalias() += body.mass * jv.transpose() * jv;
    d.A.noalias() += jw.transpose() * (iw * jw);
    d.b.noalias() += jv.transpose() * (body.mass * accel0);
    d.b.noalias() += jw.transpose() * (iw * alpha0 + w.cross(iw * w));
    d.g.noalias() -= jv.transpose() * (body.mass * model.gravity());
  }
  d.A = 0.5 * (d.A + d.A.transpose());
  return d;
}

CenterOfMass center_of_mass(const RobotModel& model, const Kinematics& kin) {
  const int n = model.dof();
  CenterOfMass c{Vec3::Zero(), Vec3::Zero(), Matrix::Zero(3, n), Vec3::Zero()};
  for (int b = 0; b < static_cast<int>(model.bodies().size()); ++b) {
    const double m = model.bodies()[b].mass;
    c.position += m * kin.com[b];
    c.jacobian.noalias() += m * point_jacobian(model, kin, b, kin.com[b], JacobianKind::Point3);
    c.jdot_qdot += m * point_jdot_qdot(kin, b, kin.com[b], JacobianKind::Point3);
    const Vec3 r = kin.com[b] - kin.position[b];
    c.velocity += m * (kin.velocity[b] + kin.omega[b].cross(r));
  }
  const double inv = 1.0 / model.total_mass();
  c.position *= inv;
  c.velocity *= inv;
  c.jacobian *= inv;
  c.jdot_qdot *= inv;
  return c;
}

CentroidalMomentum centroidal_momentum(const RobotModel& model, const Kinematics& kin) {
  const int n = model.dof();
  Vec3 com = Vec3::Zero();
  for (int b = 0; b < static_cast<int>(model.bodies().size()); ++b)
    com += model.bodies()[b].mass * kin.com[b];
  com /= model.total_mass();

  CentroidalMomentum h{Matrix::Zero(6, n), Vec6::Zero(), Vec6::Zero(), Mat3::Zero()};
  for (int b = 0; b < static_cast<int>(model.bodies().size()); ++b) {
    const Body& body = model.bodies()[b];
    const Matrix j6 = point_jacobian(model, kin, b, kin.com[b], JacobianKind::Full6);
    const Mat3 iw = kin.rotation[b] * body.inertia * kin.rotation[b].transpose();
    const Vec3 r = kin.com[b] - com;
    const Vector bias = point_jdot_qdot(kin, b, kin.com[b], JacobianKind::Full6);
    const Vec3 alpha0 = bias.head<3>();
    const Vec3 accel0 = bias.tail<3>();
    const Vec3& w = kin.omega[b];

    h.matrix.topRows<3>().noalias() += body.mass * skew(r) * j6.bottomRows<3>();
    h.matrix.topRows<3>().noalias() += iw * j6.topRows<3>();
    h.matrix.bottomRows<3>().noalias() += body.mass * j6.bottomRows<3>();
    h.bias.head<3>() += body.mass * r.cross(accel0) + iw * alpha0 + w.cross(iw * w);
    h.bias.tail<3>() += body.mass * accel0;
    h.composite_inertia += iw + body.mass * (r.squaredNorm() * Mat3::Identity() - r * r.transpose());
    const Vec3 v = kin.velocity[b] + w.cross(kin.com[b] - kin.position[b]);
    h.momentum.head<3>() += body.mass * r.cross(v) + iw * w;
    h.momentum.tail<3>() += body.mass * v;
  }
  return h;
}

Vector forward_dynamics(const RobotModel& model, const RobotState& state, const Vector& tau,
                        const std::vector<ExternalWrench>& external) {
  if (tau.size() != model.num_actuated())
    throw DimensionError("forward_dynamics: tau has dimension " + std::to_string(tau.size()) +
                         ", expected " + std::to_string(model.num_actuated()));
  const Kinematics kin = compute_kinematics(model, state);
  const DynamicsTerms d = dynamics_terms(model, state, kin);
  Vector rhs = -d.b - d.g;
  const auto& act = model.actuated_velocity_indices();
  for (int i = 0; i < tau.size(); ++i) rhs(act[i]) += tau(i);
  for (const auto& w : external) {
    const int fi = model.frame_index(w.frame);
    rhs.noalias() += frame_jacobian(model, kin, fi, JacobianKind::Full6).transpose() * w.wrench;
  }
  return d.A.llt().solve(rhs);
}

Vector integrate_configuration(const RobotModel& model, const Vector& q, const Vector& v,
                               double dt) {
  Vector out = q;
  int qi = 0;
  int vi = 0;
  if (model.floating_base()) {
    out.segment<3>(0) += dt * v.segment<3>(3);
    const Vec3 rot = dt * v.segment<3>(0);
    const double angle = rot.norm();
    Eigen::Quaterniond dq = Eigen::Quaterniond::Identity();
    if (angle > 0.0) dq = Eigen::Quaterniond(Eigen::AngleAxisd(angle, rot / angle));
    Eigen::Quaterniond next = dq * base_orientation(model, q);
    next.normalize();
    out(3) = next.w();
    out(4) = next.x();
    out(5) = next.y();
    out(6) = next.z();
    qi = 7;
    vi = 6;
  }
  out.segment(qi, model.nq() - qi) += dt * v.segment(vi, model.dof() - vi);
  return out;
}

}  // namespace wbdc
