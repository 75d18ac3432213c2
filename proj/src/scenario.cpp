#include "wbdc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wbdc/errors.hpp"

namespace wbdc {

using nlohmann::json;

Trajectory::Sample Trajectory::sample(double t, int dim) const {
  Sample s{Vector::Zero(dim), Vector::Zero(dim), Vector::Zero(dim)};
  switch (kind) {
    case Kind::Hold:
      break;
    case Kind::Sinusoid: {
      if (amplitude.size() != dim) break;
      const double w = 2.0 * std::numbers::pi * frequency;
      const double a = w * t + phase;
      const double f = std::sin(a), fd = w * std::cos(a), fdd = -w * w * std::sin(a);
      // Envelope e(t) rises with a quintic smoothstep; product rule below.
      double e = 1.0, ed = 0.0, edd = 0.0;
      if (ramp > 0.0 && t < ramp) {
        const double u = std::max(t, 0.0) / ramp;
        e = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
        ed = 30.0 * u * u * (1.0 - u) * (1.0 - u) / ramp;
        edd = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u) / (ramp * ramp);
      }
      s.position = amplitude * (e * f);
      s.velocity = amplitude * (ed * f + e * fd);
      s.acceleration = amplitude * (edd * f + 2.0 * ed * fd + e * fdd);
      break;
    }
    case Kind::Waypoints: {
      if (waypoints.empty()) break;
      if (t <= waypoints.front().t) {
        s.position = waypoints.front().value;
        break;
      }
      if (t >= waypoints.back().t) {
        s.position = waypoints.back().value;
        break;
      }
      std::size_t i = 1;
      while (waypoints[i].t <= t) ++i;
      const Waypoint& p0 = waypoints[i - 1];
      const Waypoint& p1 = waypoints[i];
      const double span = p1.t - p0.t;
      const double u = (t - p0.t) / span;
      // Quintic smoothstep: zero velocity and acceleration at both ends.
      const double sp = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
      const double sv = 30.0 * u * u * (1.0 - u) * (1.0 - u) / span;
      const double sa = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u) / (span * span);
      const Vector d = p1.value - p0.value;
      s.position = p0.value + sp * d;
      s.velocity = sv * d;
      s.acceleration = sa * d;
      break;
    }
  }
  return s;
}

int ContactScript::window_at(double t) const {
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (t >= windows[i].engage && t < windows[i].release) return static_cast<int>(i);
  return -1;
}

double ContactScript::phase(double t) const {
  const int w = window_at(t);
  if (w < 0) return 0.0;
  if (transition <= 0.0) return 1.0;
  const ContactWindow& win = windows[static_cast<std::size_t>(w)];
  double h = 1.0;
  if (win.engage > 0.0 && t < win.engage + transition) h = (t - win.engage) / transition;
  if (std::isfinite(win.release) && t > win.release - transition)
    h = std::min(h, (win.release - t) / transition);
  return std::clamp(h, 0.0, 1.0);
}

int Scenario::num_steps() const { return static_cast<int>(std::llround(duration / dt)); }

// ---------------------------------------------------------------------------
// Parsing

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ScenarioError("scenario: " + path + ": " + msg);
}

double num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::string str(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Vector vec(const json& j, const std::string& path, int expect = -1) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  if (expect >= 0 && static_cast<int>(j.size()) != expect)
    fail(path, "expected " + std::to_string(expect) + " entries, got " + std::to_string(j.size()));
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = num(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

double num_or(const json& obj, const char* key, double def, const std::string& path) {
  return obj.contains(key) ? num(obj[key], path + "." + key) : def;
}

Mat3 rpy_matrix(const Vector& rpy) {
  return (Eigen::AngleAxisd(rpy(2), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy(1), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy(0), Vec3::UnitX()))
      .toRotationMatrix();
}

Trajectory parse_trajectory(const json& j, const std::string& path) {
  Trajectory tr;
  if (!j.is_object()) fail(path, "expected an object");
  const std::string kind = j.contains("kind") ? str(j["kind"], path + ".kind") : "hold";
  if (kind == "hold") {
    tr.kind = Trajectory::Kind::Hold;
  } else if (kind == "sinusoid") {
    tr.kind = Trajectory::Kind::Sinusoid;
    if (!j.contains("amplitude")) fail(path, "sinusoid needs an amplitude");
    tr.amplitude = vec(j["amplitude"], path + ".amplitude");
    tr.frequency = num_or(j, "frequency", 1.0, path);
    tr.phase = num_or(j, "phase", 0.0, path);
    tr.ramp = num_or(j, "ramp", 0.0, path);
    if (tr.ramp < 0.0) fail(path + ".ramp", "must be non-negative");
  } else if (kind == "waypoints") {
    tr.kind = Trajectory::Kind::Waypoints;
    if (!j.contains("points") || !j["points"].is_array() || j["points"].empty())
      fail(path + ".points", "expected a non-empty array");
    double last = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < j["points"].size(); ++i) {
      const std::string p = path + ".points[" + std::to_string(i) + "]";
      const json& w = j["points"][i];
      Trajectory::Waypoint wp;
      wp.t = num(w.at("t"), p + ".t");
      if (!(wp.t > last)) fail(p, "waypoint times must increase");
      last = wp.t;
      wp.value = vec(w.at("value"), p + ".value");
      if (!tr.waypoints.empty() && wp.value.size() != tr.waypoints.front().value.size())
        fail(p, "waypoint dimension differs from the first waypoint");
      tr.waypoints.push_back(std::move(wp));
    }
  } else {
    fail(path + ".kind", "unknown trajectory kind '" + kind + "'");
  }
  return tr;
}

ScriptedTask parse_task(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  ScriptedTask st;
  TaskSpec& t = st.spec;
  t.name = str(j.at("name"), path + ".name");
  try {
    t.kind = task_kind_from_string(str(j.at("type"), path + ".type"));
  } catch (const TaskConfigError& e) {
    fail(path + ".type", e.what());
  }
  t.priority = static_cast<int>(num_or(j, "priority", 1, path));
  if (j.contains("frame")) t.frame = str(j["frame"], path + ".frame");
  if (j.contains("joints")) {
    if (!j["joints"].is_array()) fail(path + ".joints", "expected an array of names");
    for (std::size_t i = 0; i < j["joints"].size(); ++i)
      t.joints.push_back(str(j["joints"][i], path + ".joints[" + std::to_string(i) + "]"));
  }
  if (j.contains("gains")) {
    t.gains.kp = num_or(j["gains"], "kp", t.gains.kp, path + ".gains");
    t.gains.kd = num_or(j["gains"], "kd", t.gains.kd, path + ".gains");
  }
  if (j.contains("relaxation_weight"))
    t.relaxation_weight = vec(j["relaxation_weight"], path + ".relaxation_weight");
  if (j.contains("trajectory")) st.trajectory = parse_trajectory(j["trajectory"], path + ".trajectory");
  if (j.contains("origin")) st.origin = vec(j["origin"], path + ".origin");
  st.start = num_or(j, "start", 0.0, path);
  st.stop = num_or(j, "stop", std::numeric_limits<double>::infinity(), path);
  return st;
}

ContactScript parse_contact(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  ContactScript cs;
  ContactSpec& c = cs.spec;
  c.frame = str(j.at("frame"), path + ".frame");
  const std::string geom = j.contains("geometry") ? str(j["geometry"], path + ".geometry") : "surface";
  if (geom == "surface") {
    c.geometry = ContactSpec::Geometry::Surface;
  } else if (geom == "point") {
    c.geometry = ContactSpec::Geometry::Point;
  } else {
    fail(path + ".geometry", "expected 'surface' or 'point'");
  }
  c.mu = num_or(j, "mu", c.mu, path);
  c.dx = num_or(j, "dx", c.dx, path);
  c.dy = num_or(j, "dy", c.dy, path);
  c.facets = static_cast<int>(num_or(j, "facets", c.facets, path));
  if (j.contains("rotation_rpy")) c.rotation_to_local = rpy_matrix(vec(j["rotation_rpy"], path + ".rotation_rpy", 3)).transpose();
  cs.transition = num_or(j, "transition", 0.0, path);
  cs.f_min = num_or(j, "f_min", cs.f_min, path);
  cs.f_max = num_or(j, "f_max", cs.f_max, path);
  if (j.contains("windows")) {
    if (!j["windows"].is_array()) fail(path + ".windows", "expected an array");
    for (std::size_t i = 0; i < j["windows"].size(); ++i) {
      const std::string p = path + ".windows[" + std::to_string(i) + "]";
      const json& w = j["windows"][i];
      ContactWindow win;
      win.engage = num_or(w, "engage", 0.0, p);
      win.release = num_or(w, "release", std::numeric_limits<double>::infinity(), p);
      if (!(win.release > win.engage)) fail(p, "release must come after engage");
      if (!cs.windows.empty() && win.engage < cs.windows.back().release)
        fail(p, "windows must be ordered and disjoint");
      cs.windows.push_back(win);
    }
  } else {
    cs.windows.push_back(ContactWindow{});
  }
  try {
    validate(c);
  } catch (const Error& e) {
    fail(path, e.what());
  }
  if (cs.transition < 0.0) fail(path + ".transition", "must be non-negative");
  if (cs.f_min > cs.f_max) fail(path, "f_min exceeds f_max");
  return cs;
}

InternalConstraintSpec parse_internal(const json& j, const std::string& path) {
  const std::string type = str(j.at("type"), path + ".type");
  if (type == "coupled")
    return InternalConstraintSpec::coupled(str(j.at("joint_a"), path + ".joint_a"),
                                           str(j.at("joint_b"), path + ".joint_b"),
                                           num_or(j, "ratio", 1.0, path));
  if (type == "coincident")
    return InternalConstraintSpec::coincident(str(j.at("frame_a"), path + ".frame_a"),
                                              str(j.at("frame_b"), path + ".frame_b"));
  fail(path + ".type", "expected 'coupled' or 'coincident'");
}

RobotState parse_initial(const RobotModel& model, const json& j, const std::string& path) {
  RobotState s{model.neutral_configuration(), Vector::Zero(model.dof())};
  if (j.is_null()) return s;
  if (!j.is_object()) fail(path, "expected an object");
  if (model.floating_base()) {
    if (j.contains("base_position")) s.q.head<3>() = vec(j["base_position"], path + ".base_position", 3);
    if (j.contains("base_rpy")) {
      const Eigen::Quaterniond quat(rpy_matrix(vec(j["base_rpy"], path + ".base_rpy", 3)));
      s.q.segment<4>(3) << quat.w(), quat.x(), quat.y(), quat.z();
    }
  }
  auto joint_map = [&](const char* key, bool velocity) {
    if (!j.contains(key)) return;
    if (!j[key].is_object()) fail(path + "." + key, "expected an object of joint values");
    for (const auto& [name, val] : j[key].items()) {
      int ji = -1;
      try {
        ji = model.joint_index(name);
      } catch (const Error&) {
        fail(path + "." + key + "." + name, "unknown joint");
      }
      const Joint& jt = model.joints()[ji];
      if (jt.type == JointType::Floating) fail(path + "." + key + "." + name, "use base_* keys");
      const double v = num(val, path + "." + key + "." + name);
      if (velocity)
        s.qdot(jt.v_index) = v;
      else
        s.q(jt.q_index) = v;
    }
  };
  joint_map("joints", false);
  joint_map("joint_velocities", true);
  return s;
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("<root>", "expected an object");

  Scenario s;
  try {
    s.name = doc.contains("name") ? str(doc["name"], "name") : "scenario";
    const std::string model_path = str(doc.at("model"), "model");
    std::filesystem::path mp(model_path);
    if (mp.is_relative()) mp = std::filesystem::path(base_dir) / mp;
    s.model = std::make_shared<const RobotModel>(load_model_file(mp.string()));

    s.duration = num(doc.at("duration"), "duration");
    s.dt = num_or(doc, "dt", 1e-3, "");
    if (doc.contains("weights")) {
      s.weights.q1 = num_or(doc["weights"], "q1", s.weights.q1, "weights");
      s.weights.q2 = num_or(doc["weights"], "q2", s.weights.q2, "weights");
    }
    if (doc.contains("relaxation")) {
      const std::string r = str(doc["relaxation"], "relaxation");
      if (r == "feasibility_first")
        s.config.relaxation = RelaxationMode::FeasibilityFirst;
      else if (r == "weighted")
        s.config.relaxation = RelaxationMode::Weighted;
      else
        fail("relaxation", "expected 'feasibility_first' or 'weighted'");
    }
    s.initial = parse_initial(*s.model, doc.contains("initial") ? doc["initial"] : json(), "initial");

    if (!doc.contains("tasks") || !doc["tasks"].is_array()) fail("tasks", "expected an array");
    for (std::size_t i = 0; i < doc["tasks"].size(); ++i)
      s.tasks.push_back(parse_task(doc["tasks"][i], "tasks[" + std::to_string(i) + "]"));
    if (doc.contains("contacts")) {
      if (!doc["contacts"].is_array()) fail("contacts", "expected an array");
      for (std::size_t i = 0; i < doc["contacts"].size(); ++i)
        s.contacts.push_back(parse_contact(doc["contacts"][i], "contacts[" + std::to_string(i) + "]"));
    }
    if (doc.contains("internals")) {
      if (!doc["internals"].is_array()) fail("internals", "expected an array");
      for (std::size_t i = 0; i < doc["internals"].size(); ++i)
        s.internals.push_back(parse_internal(doc["internals"][i], "internals[" + std::to_string(i) + "]"));
    }
    if (doc.contains("task_sets")) {
      if (!doc["task_sets"].is_array()) fail("task_sets", "expected an array");
      for (std::size_t i = 0; i < doc["task_sets"].size(); ++i) {
        const std::string p = "task_sets[" + std::to_string(i) + "]";
        const json& ts = doc["task_sets"][i];
        TaskSet set;
        set.name = str(ts.at("name"), p + ".name");
        if (!ts.contains("tasks") || !ts["tasks"].is_array()) fail(p + ".tasks", "expected an array");
        for (std::size_t k = 0; k < ts["tasks"].size(); ++k)
          set.tasks.push_back(str(ts["tasks"][k], p + ".tasks[" + std::to_string(k) + "]"));
        s.task_sets.push_back(std::move(set));
      }
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario: missing or malformed field: ") + e.what());
  }

  validate(s);
  resolve_origins(s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string base = std::filesystem::path(path).parent_path().string();
  return parse_scenario(ss.str(), base.empty() ? "." : base);
}

void validate(const Scenario& s) {
  if (!s.model) throw ScenarioError("scenario: no model");
  if (!(s.dt > 0.0) || s.dt > 5e-3) throw ScenarioError("scenario: dt must lie in (0, 0.005]");
  if (!(s.duration > 0.0)) throw ScenarioError("scenario: duration must be positive");
  try {
    validate_state(*s.model, s.initial);
  } catch (const Error& e) {
    throw ScenarioError(std::string("scenario: initial state: ") + e.what());
  }
  if (s.tasks.empty()) throw ScenarioError("scenario: no tasks");
  std::set<std::string> names;
  for (const auto& t : s.tasks) {
    if (!names.insert(t.spec.name).second)
      throw ScenarioError("scenario: duplicate task name '" + t.spec.name + "'");
    if (t.spec.priority < 1) throw ScenarioError("scenario: task " + t.spec.name + ": priority < 1");
    if (t.spec.kind == TaskKind::FramePosition || t.spec.kind == TaskKind::FrameOrientation) {
      try {
        s.model->frame_index(t.spec.frame);
      } catch (const FrameNotFound&) {
        throw ScenarioError("scenario: task " + t.spec.name + ": unknown frame '" + t.spec.frame + "'");
      }
    }
    int dim = 0;
    try {
      dim = task_dimension(*s.model, t.spec);
    } catch (const Error& e) {
      throw ScenarioError(std::string("scenario: ") + e.what());
    }
    const int traj_dim = t.spec.kind == TaskKind::CentroidalMomentum ? 3 : dim;
    if (t.trajectory.kind == Trajectory::Kind::Sinusoid && t.trajectory.amplitude.size() != traj_dim)
      throw ScenarioError("scenario: task " + t.spec.name + ": amplitude has the wrong dimension");
    if (t.trajectory.kind == Trajectory::Kind::Waypoints &&
        t.trajectory.waypoints.front().value.size() != traj_dim)
      throw ScenarioError("scenario: task " + t.spec.name + ": waypoints have the wrong dimension");
  }
  for (const auto& c : s.contacts) {
    try {
      s.model->frame_index(c.spec.frame);
    } catch (const FrameNotFound&) {
      throw ScenarioError("scenario: contact on unknown frame '" + c.spec.frame + "'");
    }
  }
  for (const auto& set : s.task_sets)
    for (const auto& n : set.tasks)
      if (!names.count(n))
        throw ScenarioError("scenario: task set " + set.name + " names unknown task '" + n + "'");
}

void resolve_origins(Scenario& s) {
  const Kinematics kin = compute_kinematics(*s.model, s.initial);
  TaskContext ctx{*s.model, s.initial, kin, std::nullopt, std::nullopt};
  for (auto& t : s.tasks) {
    if (t.origin) continue;
    t.origin = evaluate_task(ctx, t.spec).position;
    // The momentum task also holds the base at its starting orientation.
    if (t.spec.kind == TaskKind::CentroidalMomentum && s.model->floating_dof() == 6) {
      const Eigen::Quaterniond q0 = base_orientation(*s.model, s.initial.q);
      Vector o(7);
      o << *t.origin, q0.w(), q0.x(), q0.y(), q0.z();
      t.origin = o;
    }
  }
}

std::vector<ContactSpec> scripted_contacts(const Scenario& s, double t, std::vector<int>* index_out) {
  std::vector<ContactSpec> out;
  if (index_out) index_out->clear();
  for (std::size_t i = 0; i < s.contacts.size(); ++i) {
    const ContactScript& cs = s.contacts[i];
    if (cs.window_at(t) < 0) continue;
    ContactSpec c = cs.spec;
    if (cs.transition > 0.0) c.transition = TransitionSpec{cs.phase(t), cs.f_min, cs.f_max};
    out.push_back(std::move(c));
    if (index_out) index_out->push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<TaskSpec> scripted_tasks(const Scenario& s, double t,
                                     const std::vector<std::string>* subset) {
  std::vector<TaskSpec> out;
  for (const auto& st : s.tasks) {
    if (subset) {
      if (std::find(subset->begin(), subset->end(), st.spec.name) == subset->end()) continue;
    } else if (!st.active(t)) {
      continue;
    }
    TaskSpec spec = st.spec;
    const Vector origin = st.origin ? *st.origin : Vector();
    if (spec.kind == TaskKind::FrameOrientation) {
      const Trajectory::Sample smp = st.trajectory.sample(t, 3);
      Eigen::Quaterniond q0 = Eigen::Quaterniond::Identity();
      if (origin.size() == 4) q0 = Eigen::Quaterniond(origin(0), origin(1), origin(2), origin(3));
      const double angle = smp.position.norm();
      const Eigen::Quaterniond dq =
          angle > 0.0 ? Eigen::Quaterniond(Eigen::AngleAxisd(angle, smp.position / angle))
                      : Eigen::Quaterniond::Identity();
      const Eigen::Quaterniond q = (dq * q0).normalized();
      spec.reference.position = Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
      spec.reference.velocity = smp.velocity;
      spec.reference.acceleration = smp.acceleration;
    } else if (spec.kind == TaskKind::CentroidalMomentum) {
      const Trajectory::Sample smp = st.trajectory.sample(t, 3);
      spec.reference.position = origin;
      if (origin.size() >= 3) spec.reference.position.head(3) += smp.position;
      spec.reference.velocity = smp.velocity;
      spec.reference.acceleration = smp.acceleration;
    } else {
      const int dim = static_cast<int>(origin.size());
      const Trajectory::Sample smp = st.trajectory.sample(t, dim);
      spec.reference.position = origin + smp.position;
      spec.reference.velocity = smp.velocity;
      spec.reference.acceleration = smp.acceleration;
    }
    out.push_back(std::move(spec));
  }
  // Compact priorities so the active set stays contiguous.
  std::vector<int> prios;
  for (const auto& t2 : out) prios.push_back(t2.priority);
  std::sort(prios.begin(), prios.end());
  prios.erase(std::unique(prios.begin(), prios.end()), prios.end());
  for (auto& t2 : out)
    t2.priority = static_cast<int>(std::lower_bound(prios.begin(), prios.end(), t2.priority) - prios.begin()) + 1;
  return out;
}

}  // namespace wbdc
