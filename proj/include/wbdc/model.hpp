#pragma once

#include <Eigen/Geometry>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wbdc/linalg.hpp"

namespace wbdc {

enum class JointType { Floating, Revolute, Prismatic };

struct Body {
  std::string name;
  double mass = 0.0;   // kg
  Vec3 com = Vec3::Zero();          // m, body frame
  Mat3 inertia = Mat3::Identity();  // kg m^2, about the CoM, body axes
};

struct Joint {
  std::string name;
  JointType type = JointType::Revolute;
  int parent = -1;  // body index, -1 is the world
  int child = -1;
  Eigen::Isometry3d origin = Eigen::Isometry3d::Identity();  // parent body -> joint frame
  Vec3 axis = Vec3::UnitZ();  // unit, joint frame
  int q_index = 0;
  int v_index = 0;
};

struct Frame {
  std::string name;
  int body = -1;
  Vec3 offset = Vec3::Zero();  // m, body frame; orientation follows the body
};

enum class JacobianKind { Point3, Full6 };

/// Kinematic tree with inertial parameters. Immutable after construction.
///
/// Generalized coordinates for a floating model:
///   q    = [base position (3), base quaternion (w, x, y, z), joint values]
///   qdot = [base angular velocity (3), base linear velocity (3), joint rates]
/// Base velocities are expressed in the world frame; the linear part is the
/// velocity of the base body origin. Fixed-base models have q = joint values.
class RobotModel {
 public:
  RobotModel(std::vector<Body> bodies, std::vector<Joint> joints,
             std::vector<std::string> actuated, std::vector<Frame> frames, Vec3 gravity);

  int dof() const { return nv_; }
  int nq() const { return nq_; }
  bool floating_base() const { return floating_; }
  int floating_dof() const { return floating_ ? 6 : 0; }
  int num_actuated() const { return static_cast<int>(actuated_v_.size()); }
  int root_body() const { return root_; }
  double total_mass() const { return total_mass_; }
  const Vec3& gravity() const { return gravity_; }

  const std::vector<Body>& bodies() const { return bodies_; }
  /// Joints in topological order (parent bodies before children).
  const std::vector<Joint>& joints() const { return joints_; }
  const std::vector<Frame>& frames() const { return frames_; }

  /// Velocity indices of actuated joints, in declaration order of `actuated`.
  const std::vector<int>& actuated_velocity_indices() const { return actuated_v_; }
  /// Joint index for each body (-1 for a fixed root).
  const std::vector<int>& body_joint() const { return body_joint_; }
  /// Joint indices on the path from the root to each body, root first.
  const std::vector<std::vector<int>>& support() const { return support_; }

  int frame_index(std::string_view name) const;  // throws FrameNotFound
  int joint_index(std::string_view name) const;  // throws ModelParseError
  int body_index(std::string_view name) const;   // throws ModelParseError

  /// U: num_actuated x dof selection matrix (tau maps to U^T tau).
  Matrix actuation_matrix() const;

  /// Neutral configuration: identity base pose at the origin, zero joints.
  Vector neutral_configuration() const;

 private:
  std::vector<Body> bodies_;
  std::vector<Joint> joints_;
  std::vector<Frame> frames_;
  std::vector<std::string> actuated_names_;
  std::vector<int> actuated_v_;
  std::vector<int> body_joint_;
  std::vector<std::vector<int>> support_;
  Vec3 gravity_;
  int nq_ = 0;
  int nv_ = 0;
  int root_ = -1;
  bool floating_ = false;
  double total_mass_ = 0.0;
};

struct RobotState {
  Vector q;
  Vector qdot;
};

/// Throws InvalidState when dimensions or the base quaternion are off.
void validate_state(const RobotModel& model, const RobotState& state);

struct DynamicsTerms {
  Matrix A;  // mass matrix
  Vector b;  // Coriolis / centrifugal
  Vector g;  // gravity
};

/// World-frame body quantities for one configuration. Everything the
/// controller needs in a cycle is derived from one of these.
struct Kinematics {
  std::vector<Mat3> rotation;       // body -> world
  std::vector<Vec3> position;       // body origin, world
  std::vector<Vec3> com;            // body CoM, world
  std::vector<Vec3> omega;          // body angular velocity, world
  std::vector<Vec3> velocity;       // body origin velocity, world
  std::vector<Vec3> alpha_bias;     // angular acceleration at qddot = 0
  std::vector<Vec3> accel_bias;     // body origin acceleration at qddot = 0
  std::vector<Vec3> joint_axis;     // world-frame axis per joint
  std::vector<Vec3> joint_origin;   // world-frame joint frame origin per joint
};

Kinematics compute_kinematics(const RobotModel& model, const RobotState& state);

DynamicsTerms dynamics_terms(const RobotModel& model, const RobotState& state);
DynamicsTerms dynamics_terms(const RobotModel& model, const RobotState& state,
                             const Kinematics& kin);

struct FramePose {
  Mat3 rotation;
  Vec3 position;
};
FramePose frame_pose(const RobotModel& model, const Kinematics& kin, int frame);
FramePose frame_pose(const RobotModel& model, const RobotState& state, std::string_view frame);

/// Jacobian of a point rigidly attached to `body` at world position `point`.
/// Full6 rows are (angular, linear).
Matrix point_jacobian(const RobotModel& model, const Kinematics& kin, int body,
                      const Vec3& point, JacobianKind kind);
/// Jdot*qdot for the same point.
Vector point_jdot_qdot(const Kinematics& kin, int body, const Vec3& point, JacobianKind kind);

Matrix frame_jacobian(const RobotModel& model, const Kinematics& kin, int frame, JacobianKind kind);
Matrix frame_jacobian(const RobotModel& model, const RobotState& state, std::string_view frame,
                      JacobianKind kind);
Vector jdot_qdot(const RobotModel& model, const Kinematics& kin, int frame, JacobianKind kind);
Vector jdot_qdot(const RobotModel& model, const RobotState& state, std::string_view frame,
                 JacobianKind kind);

/// Whole-body center of mass quantities.
struct CenterOfMass {
  Vec3 position;
  Vec3 velocity;
  Matrix jacobian;    // 3 x dof
  Vec3 jdot_qdot;
};
CenterOfMass center_of_mass(const RobotModel& model, const Kinematics& kin);

/// Centroidal momentum h = [k; l] (angular about the CoM, then linear) with
/// h = matrix * qdot and hdot = matrix * qddot + bias.
struct CentroidalMomentum {
  Matrix matrix;  // 6 x dof
  Vec6 bias;
  Vec6 momentum;
  Mat3 composite_inertia;  // about the CoM, world frame
};
CentroidalMomentum centroidal_momentum(const RobotModel& model, const Kinematics& kin);

/// World-frame wrench (torque, force) applied at a frame origin.
struct ExternalWrench {
  std::string frame;
  Vec6 wrench;
};

/// qddot = A^-1 (U^T tau + sum J^T F - b - g).
Vector forward_dynamics(const RobotModel& model, const RobotState& state, const Vector& tau,
                        const std::vector<ExternalWrench>& external = {});

/// Integrates a configuration along a generalized velocity for time `dt`.
Vector integrate_configuration(const RobotModel& model, const Vector& q, const Vector& v,
                               double dt);

/// Quaternion (w, x, y, z) stored at q[3..6] of a floating model.
Eigen::Quaterniond base_orientation(const RobotModel& model, const Vector& q);

/// Parses a model description document (JSON). Throws ModelParseError or
/// ModelTopologyError.
RobotModel load_model(std::string_view text);
RobotModel load_model_file(const std::string& path);

}  // namespace wbdc
