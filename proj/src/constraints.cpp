#include "wbdc/constraints.hpp"

#include <cmath>
#include <numbers>

#include "wbdc/errors.hpp"

namespace wbdc {

InternalConstraintSpec InternalConstraintSpec::coupled(std::string a, std::string b, double ratio) {
  InternalConstraintSpec s;
  s.kind = Kind::CoupledJoints;
  s.joint_a = std::move(a);
  s.joint_b = std::move(b);
  s.ratio = ratio;
  return s;
}

InternalConstraintSpec InternalConstraintSpec::coincident(std::string a, std::string b) {
  InternalConstraintSpec s;
  s.kind = Kind::FrameCoincidence;
  s.frame_a = std::move(a);
  s.frame_b = std::move(b);
  return s;
}

std::pair<Matrix, Vector> internal_jacobian(const RobotModel& model, const Kinematics& kin,
                                            const std::vector<InternalConstraintSpec>& specs) {
  int rows = 0;
  for (const auto& s : specs) rows += s.rows();
  Matrix j = Matrix::Zero(rows, model.dof());
  Vector drift = Vector::Zero(rows);

  int r = 0;
  for (const auto& s : specs) {
    if (s.kind == InternalConstraintSpec::Kind::CoupledJoints) {
      int ja = -1, jb = -1;
      try {
        ja = model.joint_index(s.joint_a);
        jb = model.joint_index(s.joint_b);
      } catch (const ModelParseError& e) {
        throw InvalidInternalConstraint(e.what());
      }
      const Joint& a = model.joints()[ja];
      const Joint& b = model.joints()[jb];
      if (a.type == JointType::Floating || b.type == JointType::Floating)
        throw InvalidInternalConstraint("coupled joints may not reference the floating joint");
      if (ja == jb) throw InvalidInternalConstraint("coupled joints must be distinct");
      j(r, a.v_index) += 1.0;
      j(r, b.v_index) -= s.ratio;
    } else {
      int fa = -1, fb = -1;
      try {
        fa = model.frame_index(s.frame_a);
        fb = model.frame_index(s.frame_b);
      } catch (const FrameNotFound& e) {
        throw InvalidInternalConstraint(e.what());
      }
      j.middleRows(r, 3) = frame_jacobian(model, kin, fa, JacobianKind::Point3) -
                           frame_jacobian(model, kin, fb, JacobianKind::Point3);
      drift.segment(r, 3) = jdot_qdot(model, kin, fa, JacobianKind::Point3) -
                            jdot_qdot(model, kin, fb, JacobianKind::Point3);
    }
    r += s.rows();
  }

  const int nf = model.floating_dof();
  if (rows > 0 && nf > 0 && j.leftCols(nf).cwiseAbs().maxCoeff() >= 1e-10)
    throw InvalidInternalConstraint("internal constraint Jacobian acts on the floating base");
  return {std::move(j), std::move(drift)};
}

InternalProjection internal_projection(const RobotModel& model, const Kinematics& kin,
                                       const Matrix& a_inv,
                                       const std::vector<InternalConstraintSpec>& specs,
                                       const PinvConfig& cfg) {
  const int n = model.dof();
  const int nf = model.floating_dof();
  InternalProjection p;
  std::tie(p.jacobian, p.jdot_qdot) = internal_jacobian(model, kin, specs);

  const Matrix u = model.actuation_matrix();
  if (p.jacobian.rows() == 0) {
    p.j_bar = Matrix::Zero(n, 0);
    p.null_space = Matrix::Identity(n, n);
    p.bias_correction = Vector::Zero(n);
    p.actuation_map = u.transpose().bottomRows(n - nf);
    return p;
  }

  const Matrix a_inv_jt = a_inv * p.jacobian.transpose();
  Matrix lambda_inv = p.jacobian * a_inv_jt;
  lambda_inv = 0.5 * (lambda_inv + lambda_inv.transpose());
  const Matrix lambda = psd_pinv(lambda_inv, cfg);
  p.j_bar = a_inv_jt * lambda;
  p.null_space = null_projector(p.jacobian, p.j_bar);
  p.bias_correction = p.jacobian.transpose() * (lambda * p.jdot_qdot);
  p.actuation_map = (u * p.null_space).transpose().bottomRows(n - nf);
  return p;
}

InternalProjection internal_projection(const RobotModel& model, const RobotState& state,
                                       const std::vector<InternalConstraintSpec>& specs,
                                       const PinvConfig& cfg) {
  const Kinematics kin = compute_kinematics(model, state);
  const DynamicsTerms d = dynamics_terms(model, state, kin);
  const Matrix a_inv = d.A.llt().solve(Matrix::Identity(model.dof(), model.dof()));
  return internal_projection(model, kin, a_inv, specs, cfg);
}

// ---------------------------------------------------------------------------

void validate(const ContactSpec& c) {
  if (!(c.mu > 0.0)) throw InvalidConeParameter("contact " + c.frame + ": mu must be positive");
  if (c.geometry == ContactSpec::Geometry::Surface && !(c.dx > 0.0 && c.dy > 0.0))
    throw InvalidConeParameter("contact " + c.frame + ": dx and dy must be positive");
  if (c.geometry == ContactSpec::Geometry::Point && c.facets < 4)
    throw InvalidConeParameter("contact " + c.frame + ": a friction pyramid needs >= 4 facets");
  const Mat3& r = c.rotation_to_local;
  if (!r.allFinite() || (r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      r.determinant() < 0.0)
    throw InvalidConeParameter("contact " + c.frame + ": rotation is not in SO(3)");
  if (c.transition) {
    if (!(c.transition->h >= 0.0 && c.transition->h <= 1.0))
      throw InvalidTransitionPhase("contact " + c.frame + ": h outside [0, 1]");
    if (c.transition->f_min > c.transition->f_max)
      throw InvalidTransitionPhase("contact " + c.frame + ": f_min exceeds f_max");
  }
}

double ConeMatrix::violation(const Eigen::Ref<const Vector>& w) const {
  if (W.rows() == 0) return 0.0;
  return std::max(0.0, (offset - W * w).maxCoeff());
}

ConeMatrix surface_cone(double mu, double dx, double dy) {
  if (!(mu > 0.0) || !(dx > 0.0) || !(dy > 0.0))
    throw InvalidConeParameter("surface_cone: mu, dx, dy must be positive");
  // columns: tau_x tau_y tau_z f_x f_y f_z
  Matrix w = Matrix::Zero(17, 6);
  w.row(0) << 0, 0, 0, 0, 0, 1;
  w.row(1) << 0, 0, 0, -1, 0, mu;
  w.row(2) << 0, 0, 0, 1, 0, mu;
  w.row(3) << 0, 0, 0, 0, -1, mu;
  w.row(4) << 0, 0, 0, 0, 1, mu;
  w.row(5) << -1, 0, 0, 0, 0, dy;
  w.row(6) << 1, 0, 0, 0, 0, dy;
  w.row(7) << 0, -1, 0, 0, 0, dx;
  w.row(8) << 0, 1, 0, 0, 0, dx;

  // tau_z >= -mu (dx + dy) f_z + |dy f_x - mu tau_x| + |dx f_y - mu tau_y|
  // tau_z <=  mu (dx + dy) f_z - |dy f_x + mu tau_x| - |dx f_y + mu tau_y|
  const double m = mu * (dx + dy);
  int r = 9;
  for (double s1 : {1.0, -1.0}) {
    for (double s2 : {1.0, -1.0}) {
      w.row(r++) << s1 * mu, s2 * mu, 1.0, -s1 * dy, -s2 * dx, m;
      w.row(r++) << -s1 * mu, -s2 * mu, -1.0, -s1 * dy, -s2 * dx, m;
    }
  }
  return {std::move(w), Vector::Zero(17)};
}

ConeMatrix point_cone(double mu, int facets) {
  if (!(mu > 0.0)) throw InvalidConeParameter("point_cone: mu must be positive");
  if (facets < 4) throw InvalidConeParameter("point_cone: facets must be >= 4");
  Matrix w = Matrix::Zero(facets + 1, 3);
  w.row(0) << 0, 0, 1;
  // Vertices of the inscribed polygon sit at angles 2 pi k / facets.
  const double apothem = mu * std::cos(std::numbers::pi / facets);
  for (int k = 0; k < facets; ++k) {
    const double a = (2.0 * k + 1.0) * std::numbers::pi / facets;
    w.row(k + 1) << -std::cos(a), -std::sin(a), apothem;
  }
  return {std::move(w), Vector::Zero(facets + 1)};
}

ConeMatrix transition_row(double h, double f_min, double f_max, int wrench_dim) {
  if (!(h >= 0.0 && h <= 1.0)) throw InvalidTransitionPhase("transition_row: h outside [0, 1]");
  if (f_min > f_max) throw InvalidTransitionPhase("transition_row: f_min exceeds f_max");
  Matrix w = Matrix::Zero(1, wrench_dim);
  w(0, wrench_dim - 1) = -1.0;
  Vector off(1);
  off(0) = -(h * f_max + (1.0 - h) * f_min);
  return {std::move(w), std::move(off)};
}

ConeMatrix augment_cones(const std::vector<ContactSpec>& contacts) {
  std::vector<ConeMatrix> blocks;
  int rows = 0, cols = 0;
  for (const auto& c : contacts) {
    validate(c);
    ConeMatrix cone = c.geometry == ContactSpec::Geometry::Surface ? surface_cone(c.mu, c.dx, c.dy)
                                                                   : point_cone(c.mu, c.facets);
    if (c.transition) {
      const ConeMatrix t = transition_row(c.transition->h, c.transition->f_min,
                                          c.transition->f_max, c.wrench_dim());
      ConeMatrix joined{Matrix(cone.rows() + 1, c.wrench_dim()), Vector(cone.rows() + 1)};
      joined.W << cone.W, t.W;
      joined.offset << cone.offset, t.offset;
      cone = std::move(joined);
    }
    const int d = c.wrench_dim();
    Matrix rot = Matrix::Zero(d, d);
    for (int b = 0; b < d; b += 3) rot.block<3, 3>(b, b) = c.rotation_to_local;
    cone.W = cone.W * rot;
    rows += cone.rows();
    cols += d;
    blocks.push_back(std::move(cone));
  }

  ConeMatrix out{Matrix::Zero(rows, cols), Vector::Zero(rows)};
  int r = 0, col = 0;
  for (const auto& b : blocks) {
    out.W.block(r, col, b.W.rows(), b.W.cols()) = b.W;
    out.offset.segment(r, b.offset.size()) = b.offset;
    r += static_cast<int>(b.W.rows());
    col += static_cast<int>(b.W.cols());
  }
  return out;
}

std::pair<Matrix, Vector> contact_jacobian(const RobotModel& model, const Kinematics& kin,
                                           const std::vector<ContactSpec>& contacts) {
  int rows = 0;
  for (const auto& c : contacts) rows += c.wrench_dim();
  Matrix j(rows, model.dof());
  Vector drift(rows);
  int r = 0;
  for (const auto& c : contacts) {
    const int fi = model.frame_index(c.frame);
    const JacobianKind kind =
        c.geometry == ContactSpec::Geometry::Surface ? JacobianKind::Full6 : JacobianKind::Point3;
    const int d = c.wrench_dim();
    j.middleRows(r, d) = frame_jacobian(model, kin, fi, kind);
    drift.segment(r, d) = jdot_qdot(model, kin, fi, kind);
    r += d;
  }
  return {std::move(j), std::move(drift)};
}

}  // namespace wbdc
