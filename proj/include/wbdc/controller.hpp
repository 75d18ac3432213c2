#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wbdc/constraints.hpp"
#include "wbdc/linalg.hpp"
#include "wbdc/model.hpp"
#include "wbdc/qp.hpp"

namespace wbdc {

// ---------------------------------------------------------------------------
// Tasks

enum class TaskKind { CenterOfMass, CentroidalMomentum, FramePosition, FrameOrientation, JointPosture };

const char* to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);  // throws TaskConfigError

struct Gains {
  double kp = 100.0;
  double kd = 20.0;
};

/// Reference trajectory sample. `position` is task-specific:
///   CenterOfMass / CentroidalMomentum: CoM position (3)
///   FramePosition: frame origin (3)
///   FrameOrientation: quaternion (w, x, y, z)
///   JointPosture: joint values
/// `velocity` and `acceleration` have the task dimension (3 for the
/// centroidal task, where they refer to the CoM).
struct TaskReference {
  Vector position;
  Vector velocity;
  Vector acceleration;
};

struct TaskSpec {
  std::string name;
  TaskKind kind = TaskKind::JointPosture;
  int priority = 1;
  std::string frame;                // frame tasks
  std::vector<std::string> joints;  // joint posture; empty selects every non-floating joint
  Gains gains;
  TaskReference reference;
  /// When set, used verbatim instead of the PD law on `reference`.
  std::optional<Vector> desired_acceleration;
  /// Per-dimension relaxation weight (first priority only); defaults to the
  /// scalar Q2 weight.
  std::optional<Vector> relaxation_weight;
};

/// Jacobian, drift and current value of one task at the current state.
struct TaskTerms {
  Matrix jacobian;
  Vector jdot_qdot;
  Vector position;  // current value (quaternion for orientation tasks)
  Vector velocity;  // J * qdot
};

/// Shared per-cycle quantities that several tasks draw on.
struct TaskContext {
  const RobotModel& model;
  const RobotState& state;
  const Kinematics& kin;
  std::optional<CenterOfMass> com;
  std::optional<CentroidalMomentum> momentum;

  const CenterOfMass& center_of_mass();
  const CentroidalMomentum& centroidal();
};

int task_dimension(const RobotModel& model, const TaskSpec& task);
TaskTerms evaluate_task(TaskContext& ctx, const TaskSpec& task);

/// xdd_des = a_ref + kd (v_ref - v) + kp (x_ref - x); orientation errors use
/// the vector part of the error quaternion and the centroidal task commands
/// momentum rates (angular: -kd k, linear: mass times the CoM PD law).
/// A centroidal reference may carry a base quaternion (w, x, y, z) after the
/// CoM position; the angular rows then add kp * I_c * (base orientation error).
Vector synthesize_command(TaskContext& ctx, const TaskSpec& task, const TaskTerms& terms);

/// Tasks sharing a priority, stacked.
struct TaskLevel {
  int priority = 1;
  std::vector<std::string> names;
  std::vector<int> dims;
  Matrix jacobian;
  Vector jdot_qdot;
  Vector command;  // desired task acceleration
  Vector relaxation_weight;
};

/// Sorts by priority and stacks equal priorities. Priorities must be
/// contiguous from 1 (TaskConfigError otherwise).
std::vector<TaskLevel> build_task_levels(TaskContext& ctx, const std::vector<TaskSpec>& tasks,
                                         double default_q2);

// ---------------------------------------------------------------------------
// Pipeline

enum class RelaxationMode {
  /// Solve with delta = 0 first; fall back to the relaxed QP only when that is
  /// infeasible.
  FeasibilityFirst,
  /// Always solve the weighted relaxed QP.
  Weighted,
};

struct WbdcConfig {
  PinvConfig pinv;
  double span_tolerance = 1e-6;
  double torque_tolerance = 1e-6;
  int qp_max_iterations = 1000;
  RelaxationMode relaxation = RelaxationMode::FeasibilityFirst;
  bool record_hierarchy = false;
};

struct QpWeights {
  double q1 = 1.0;
  double q2 = 100.0;
};

/// Model update for one control cycle.
struct CycleContext {
  const RobotModel* model = nullptr;
  RobotState state;
  Kinematics kin;
  DynamicsTerms dyn;
  Matrix a_inv;
  InternalProjection internal;
  std::vector<ContactSpec> contacts;
  Matrix contact_jacobian;   // J_c
  Vector contact_drift;      // Jdot_c qdot
};

CycleContext prepare_cycle(const RobotModel& model, const RobotState& state,
                           const std::vector<ContactSpec>& contacts,
                           const std::vector<InternalConstraintSpec>& internals,
                           const PinvConfig& cfg = {});

struct ContactLevel {
  Vector qddot;                // qdd_c|int
  Matrix projected_jacobian;   // J_c N_int
  Matrix j_bar;
  Matrix null_space;           // projector onto motions that keep contacts and internal constraints
};

ContactLevel contact_consistent_accel(const CycleContext& ctx, const PinvConfig& cfg = {});

struct FirstTaskLevel {
  Vector qddot_base;          // qdd_1 with delta = 0
  Matrix delta_map;           // d qdd_1 / d delta
  Matrix projected_jacobian;  // J_1 N_c|int
  Matrix null_space;          // N_1 (includes the contact projector)
};

FirstTaskLevel first_task_accel(const CycleContext& ctx, const ContactLevel& contact,
                                const TaskLevel& first, const PinvConfig& cfg = {});
Vector first_task_qddot(const FirstTaskLevel& first, const Vector& delta);

/// rank(S_f A N_1) == 0, with the cutoff relative to the size of S_f A.
bool check_floating_base_span(const CycleContext& ctx, const FirstTaskLevel& first,
                              double tol = 1e-6);

struct ReactionForces {
  Vector stacked;                   // F_r, world frame, per-contact blocks
  std::vector<Vector> per_contact;
  Vector delta;
  Vector qddot;                     // qdd_1 with delta substituted back
  int qp_iterations = 0;
  bool relaxed = false;
};

ReactionForces solve_reaction_forces(const CycleContext& ctx, const FirstTaskLevel& first,
                                     const TaskLevel& first_level, const QpWeights& weights,
                                     const WbdcConfig& cfg, QpSolver& solver);

/// Builds the QP inputs shared by build_wbdc_qp / build_unrelaxed_qp.
WbdcQpInputs wbdc_qp_inputs(const CycleContext& ctx, const FirstTaskLevel& first);

struct HierarchyLevelRecord {
  Matrix projected_jacobian;  // J_k N_prec(k)
  Matrix null_space_before;   // N_prec(k)
  Vector qddot;               // qdd_k
};

struct HierarchyState {
  Vector qddot;
  std::vector<HierarchyLevelRecord> levels;  // populated when recording
};

/// Resolves levels[1..] (priority 2 onward) starting from qdd_1 and N_1.
HierarchyState hierarchy_resolve(const CycleContext& ctx, const Vector& qddot_first,
                                 const Matrix& null_first, const std::vector<TaskLevel>& levels,
                                 const PinvConfig& cfg = {}, bool record = false,
                                 std::size_t max_levels = static_cast<std::size_t>(-1));

struct TorqueResult {
  Vector tau;
  double residual = 0.0;  // inf-norm over all rows of the projected dynamics
};

/// Throws TorqueInconsistency when the residual exceeds `tol`.
TorqueResult compute_torque(const CycleContext& ctx, const Vector& qddot,
                            const Vector& reaction_forces, double tol = 1e-6);

struct Diagnostics {
  int qp_iterations = 0;
  double solve_time_s = 0.0;
  bool relaxed = false;
  double torque_residual = 0.0;
  std::vector<double> task_residuals;  // per priority level
};

struct ControlOutput {
  Vector tau;
  std::vector<Vector> reaction_forces;
  Vector reaction_stacked;
  Vector delta;
  Vector qddot;
  Vector qddot_first;
  Diagnostics diagnostics;
};

/// One control cycle. Mutable scratch lives here, so a controller instance
/// handles one step at a time; instances sharing a model may run in parallel.
class WbdcController {
 public:
  explicit WbdcController(const RobotModel& model, WbdcConfig cfg = {});

  ControlOutput step(const RobotState& state, const std::vector<TaskSpec>& tasks,
                     const std::vector<ContactSpec>& contacts,
                     const std::vector<InternalConstraintSpec>& internals = {},
                     const QpWeights& weights = {});

  const WbdcConfig& config() const { return cfg_; }
  WbdcConfig& config() { return cfg_; }
  /// Hierarchy of the last step (levels only when record_hierarchy is set).
  const HierarchyState& hierarchy() const { return hierarchy_; }

 private:
  const RobotModel& model_;
  WbdcConfig cfg_;
  QpSolver qp_;
  HierarchyState hierarchy_;
};

ControlOutput wbdc_step(const RobotModel& model, const RobotState& state,
                        const std::vector<TaskSpec>& tasks, const std::vector<ContactSpec>& contacts,
                        const std::vector<InternalConstraintSpec>& internals = {},
                        const QpWeights& weights = {}, const WbdcConfig& cfg = {});

}  // namespace wbdc
