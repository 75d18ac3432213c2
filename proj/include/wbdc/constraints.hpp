#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wbdc/linalg.hpp"
#include "wbdc/model.hpp"

namespace wbdc {

// ---------------------------------------------------------------------------
// Internal constraints

/// A holonomic constraint that does no work on the floating base.
struct InternalConstraintSpec {
  enum class Kind { CoupledJoints, FrameCoincidence };

  Kind kind = Kind::CoupledJoints;
  // CoupledJoints: q[joint_a] - ratio * q[joint_b] = 0
  std::string joint_a;
  std::string joint_b;
  double ratio = 1.0;
  // FrameCoincidence: p(frame_a) - p(frame_b) = 0
  std::string frame_a;
  std::string frame_b;

  int rows() const { return kind == Kind::CoupledJoints ? 1 : 3; }

  static InternalConstraintSpec coupled(std::string a, std::string b, double ratio = 1.0);
  static InternalConstraintSpec coincident(std::string a, std::string b);
};

struct InternalProjection {
  Matrix jacobian;         // J_int (rows x dof); empty when no constraints
  Vector jdot_qdot;        // Jdot_int * qdot
  Matrix j_bar;            // dynamically consistent inverse of J_int
  Matrix null_space;       // N_int
  Vector bias_correction;  // J_int^T (J_int A^-1 J_int^T)^+ Jdot_int qdot
  Matrix actuation_map;    // (U N_int)^T with the floating-base rows removed
};

/// Stacked internal-constraint Jacobian and its drift term.
std::pair<Matrix, Vector> internal_jacobian(const RobotModel& model, const Kinematics& kin,
                                            const std::vector<InternalConstraintSpec>& specs);

InternalProjection internal_projection(const RobotModel& model, const Kinematics& kin,
                                       const Matrix& a_inv,
                                       const std::vector<InternalConstraintSpec>& specs,
                                       const PinvConfig& cfg = {});
InternalProjection internal_projection(const RobotModel& model, const RobotState& state,
                                       const std::vector<InternalConstraintSpec>& specs,
                                       const PinvConfig& cfg = {});

// ---------------------------------------------------------------------------
// Contacts

struct TransitionSpec {
  double h = 1.0;      // 0 = unloaded, 1 = fully loaded
  double f_min = 0.0;  // N
  double f_max = 0.0;  // N
};

struct ContactSpec {
  enum class Geometry { Surface, Point };

  std::string frame;
  Geometry geometry = Geometry::Surface;
  double dx = 0.0;  // m, half length of the support rectangle
  double dy = 0.0;  // m, half width
  double mu = 0.5;
  int facets = 8;   // point contacts only
  Mat3 rotation_to_local = Mat3::Identity();  // world -> local contact frame
  std::optional<TransitionSpec> transition;

  /// 6 (torque, force) for surfaces, 3 (force) for points.
  int wrench_dim() const { return geometry == Geometry::Surface ? 6 : 3; }
};

void validate(const ContactSpec& c);

/// Inequalities W * w >= offset.
struct ConeMatrix {
  Matrix W;
  Vector offset;

  int rows() const { return static_cast<int>(W.rows()); }
  /// Largest violation (>= 0) of W * w >= offset.
  double violation(const Eigen::Ref<const Vector>& w) const;
  bool admits(const Eigen::Ref<const Vector>& w, double tol = 0.0) const {
    return violation(w) <= tol;
  }
};

/// 17 x 6 wrench cone of a rectangular contact, wrench ordered
/// (tau_x, tau_y, tau_z, f_x, f_y, f_z) at the rectangle center, local frame.
ConeMatrix surface_cone(double mu, double dx, double dy);

/// Linearized friction pyramid inscribed in the Coulomb cone, plus f_z >= 0.
ConeMatrix point_cone(double mu, int facets);

/// One row enforcing f_z <= h f_max + (1 - h) f_min on a local wrench of the
/// given dimension (force z is the last component).
ConeMatrix transition_row(double h, double f_min, double f_max, int wrench_dim = 6);

/// Block-diagonal cone for stacked world-frame contact wrenches, each block
/// rotated into its local contact frame, with transition rows appended per
/// contact.
ConeMatrix augment_cones(const std::vector<ContactSpec>& contacts);

/// Stacked contact Jacobian (world frame) and drift for a contact set.
std::pair<Matrix, Vector> contact_jacobian(const RobotModel& model, const Kinematics& kin,
                                           const std::vector<ContactSpec>& contacts);

}  // namespace wbdc
