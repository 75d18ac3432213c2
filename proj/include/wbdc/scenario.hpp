#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wbdc/constraints.hpp"
#include "wbdc/controller.hpp"
#include "wbdc/model.hpp"

namespace wbdc {

/// Reference offsets relative to a task's origin (its value at t = 0 unless
/// given explicitly). For orientation tasks the offset is a rotation vector.
struct Trajectory {
  enum class Kind { Hold, Sinusoid, Waypoints };
  struct Waypoint {
    double t = 0.0;
    Vector value;
  };

  Kind kind = Kind::Hold;
  Vector amplitude;  // sinusoid
  double frequency = 0.0;
  double phase = 0.0;
  double ramp = 0.0;  // sinusoid amplitude blends in over this many seconds
  std::vector<Waypoint> waypoints;  // quintic blends between samples, held outside

  struct Sample {
    Vector position;
    Vector velocity;
    Vector acceleration;
  };
  Sample sample(double t, int dim) const;
};

struct ScriptedTask {
  TaskSpec spec;
  Trajectory trajectory;
  std::optional<Vector> origin;
  double start = 0.0;
  double stop = std::numeric_limits<double>::infinity();

  bool active(double t) const { return t >= start && t < stop; }
};

struct ContactWindow {
  double engage = 0.0;
  double release = std::numeric_limits<double>::infinity();
};

struct ContactScript {
  ContactSpec spec;
  std::vector<ContactWindow> windows;
  /// Length of the load ramps at each end of a window; 0 disables the
  /// transition constraint entirely.
  double transition = 0.0;
  double f_min = 0.0;
  double f_max = 1000.0;

  /// Window index containing t, or -1.
  int window_at(double t) const;
  /// Loading phase h in [0, 1] at time t (1 outside ramps).
  double phase(double t) const;
};

struct TaskSet {
  std::string name;
  std::vector<std::string> tasks;
};

struct Scenario {
  std::string name;
  std::shared_ptr<const RobotModel> model;
  RobotState initial;
  std::vector<ScriptedTask> tasks;
  std::vector<ContactScript> contacts;
  std::vector<InternalConstraintSpec> internals;
  double duration = 1.0;
  double dt = 1e-3;
  QpWeights weights;
  WbdcConfig config;
  std::vector<TaskSet> task_sets;

  int num_steps() const;
};

/// Parses a scenario document; relative model paths resolve against
/// `base_dir`. Throws ScenarioError (and model errors from the model file).
Scenario parse_scenario(std::string_view text, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

/// Checks the invariants of a scenario (dt, frames, task priorities).
void validate(const Scenario& s);

/// Fills missing task origins from the initial state.
void resolve_origins(Scenario& s);

/// Contacts engaged by the script at time t, with transition phases applied.
/// `index_out` receives the script index of each returned contact.
std::vector<ContactSpec> scripted_contacts(const Scenario& s, double t,
                                           std::vector<int>* index_out = nullptr);

/// Active tasks at time t with references filled in. Priorities are compacted
/// so they stay contiguous from 1 when some tasks are inactive.
std::vector<TaskSpec> scripted_tasks(const Scenario& s, double t,
                                     const std::vector<std::string>* subset = nullptr);

}  // namespace wbdc
