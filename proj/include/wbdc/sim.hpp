#pragma once

#include <string>
#include <vector>

#include "wbdc/constraints.hpp"
#include "wbdc/controller.hpp"
#include "wbdc/errors.hpp"
#include "wbdc/model.hpp"
#include "wbdc/scenario.hpp"

namespace wbdc {

/// Rigid-constraint forward dynamics: contacts are bilateral and
/// internal constraints are enforced exactly.
struct ConstrainedAccel {
  Vector qddot;
  Vector contact_forces;   // stacked world-frame wrenches, contact order
  Vector internal_forces;
};

ConstrainedAccel constrained_forward_dynamics(const RobotModel& model, const RobotState& state,
                                              const Vector& tau,
                                              const std::vector<ContactSpec>& contacts,
                                              const std::vector<InternalConstraintSpec>& internals = {},
                                              const std::vector<ExternalWrench>& external = {});

/// Removes the constraint-violating part of qdot (an impulse). Returns the
/// projected velocity; the generalized impulse is written to `impulse`.
Vector project_velocity(const RobotModel& model, const RobotState& state,
                        const std::vector<ContactSpec>& contacts,
                        const std::vector<InternalConstraintSpec>& internals = {},
                        Vector* impulse = nullptr);

struct StepResult {
  RobotState state;
  ConstrainedAccel dynamics;
  std::vector<ContactSpec> contacts;       // contacts that stayed engaged
  std::vector<std::string> released;       // frames released during the step
  Vector impulse;                          // generalized impulse of the velocity projection
};

/// Semi-implicit Euler step. Contacts whose normal force would have to pull
/// are released and the step is re-solved without them.
StepResult integrate_step(const RobotModel& model, const RobotState& state, const Vector& tau,
                          const std::vector<ContactSpec>& contacts, double dt,
                          const std::vector<InternalConstraintSpec>& internals = {});

struct SimEvent {
  double t = 0.0;
  std::string frame;
  std::string kind;  // "engage", "release", "lift_off"
};

struct TraceRecord {
  double t = 0.0;
  RobotState state;
  std::vector<int> contact_scripts;  // script index of each engaged contact
  std::vector<ContactSpec> contacts;
  std::vector<TaskSpec> tasks;
  ControlOutput output;
  Vector sim_contact_forces;  // forces the simulator applied over the step
  Vector impulse;             // touchdown impulse applied before the control step
  Vector step_impulse;        // impulse of the end-of-step velocity projection
};

struct Trace {
  std::vector<TraceRecord> records;
  std::vector<SimEvent> events;
};

/// Raised when the controller fails mid-run; carries everything recorded so far.
class SimulationAborted : public Error {
 public:
  SimulationAborted(const std::string& what, Trace partial, double t)
      : Error(what), partial_(std::move(partial)), t_(t) {}
  const Trace& partial() const { return partial_; }
  double time() const { return t_; }

 private:
  Trace partial_;
  double t_;
};

/// Closed loop: wbdc_step then integrate_step, once per dt.
Trace run_scenario(const Scenario& scenario);

}  // namespace wbdc
