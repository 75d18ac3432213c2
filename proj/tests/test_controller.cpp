#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "wbdc/controller.hpp"
#include "wbdc/errors.hpp"
#include "wbdc/scenario.hpp"
#include "wbdc/sim.hpp"

using namespace wbdc;
using namespace wbdc::testing;

namespace {

Scenario scenario(const std::string& name) {
  Scenario s = load_scenario(data_path("scenarios/" + name + ".json"));
  resolve_origins(s);
  return s;
}

TaskSpec frame_task(const std::string& name, TaskKind kind, const std::string& frame, int priority) {
  TaskSpec t;
  t.name = name;
  t.kind = kind;
  t.frame = frame;
  t.priority = priority;
  t.desired_acceleration = Vector::Zero(3);
  return t;
}

TaskSpec posture(const RobotModel& m, int priority) {
  TaskSpec t;
  t.name = "JP";
  t.kind = TaskKind::JointPosture;
  t.priority = priority;
  t.desired_acceleration = Vector::Zero(m.dof() - m.floating_dof());
  return t;
}

bool spans(const RobotModel& m, const RobotState& s, const std::vector<TaskSpec>& tasks,
           const std::vector<ContactSpec>& contacts) {
  const CycleContext ctx = prepare_cycle(m, s, contacts, {});
  TaskContext tctx{m, ctx.state, ctx.kin, std::nullopt, std::nullopt};
  const auto levels = build_task_levels(tctx, tasks, 100.0);
  const ContactLevel c = contact_consistent_accel(ctx);
  const FirstTaskLevel f = first_task_accel(ctx, c, levels.front());
  return check_floating_base_span(ctx, f);
}

}  // namespace

TEST(SpanCheck, PostureFirstSpans) {
  const Scenario s = scenario("biped_stand");
  std::vector<TaskSpec> tasks{posture(*s.model, 1)};
  EXPECT_TRUE(spans(*s.model, s.initial, tasks, scripted_contacts(s, 0.0)));
}

TEST(SpanCheck, CentroidalFirstSpansInDoubleSupport) {
  const Scenario s = scenario("biped_stand");
  EXPECT_TRUE(spans(*s.model, s.initial, scripted_tasks(s, 0.0), scripted_contacts(s, 0.0)));
}

TEST(SpanCheck, HandOnlyFirstTaskFails) {
  const Scenario s = scenario("humanoid_sway");
  const RobotModel& m = *s.model;
  std::vector<TaskSpec> tasks{frame_task("RHP", TaskKind::FramePosition, "r_hand", 1), posture(m, 2)};
  EXPECT_FALSE(spans(m, s.initial, tasks, scripted_contacts(s, 0.0)));
  EXPECT_THROW(wbdc_step(m, s.initial, tasks, scripted_contacts(s, 0.0)), FirstTaskDoesNotSpanBase);
}

TEST(Hierarchy, LowerLevelsLeaveHigherTasksUntouched) {
  const Scenario s = scenario("biped_hierarchy");
  const RobotModel& m = *s.model;
  WbdcConfig cfg;
  cfg.record_hierarchy = true;
  WbdcController c(m, cfg);
  std::mt19937 rng(41);
  // Single support: in double support the contacts and the centroidal task
  // already fix every DoF and the lower levels would have nothing to do.
  auto contacts = scripted_contacts(s, 0.0);
  contacts.pop_back();
  for (int trial = 0; trial < 20; ++trial) {
    RobotState st = s.initial;
    // Perturb joints and velocities only, so the feet stay where the contacts are.
    st.q.tail(m.nq() - 7) += random_vector(rng, m.nq() - 7, 0.05);
    st.qdot = random_vector(rng, m.dof(), 0.2);
    const ControlOutput out = c.step(st, scripted_tasks(s, 0.01 * trial), contacts);
    const CycleContext ctx = prepare_cycle(m, st, contacts, {});
    // Contacts hold through every level.
    EXPECT_LT((ctx.contact_jacobian * (out.qddot - out.qddot_first)).norm(), 1e-8);
    EXPECT_GT((out.qddot - out.qddot_first).norm(), 1e-3);
    const auto& levels = c.hierarchy().levels;
    ASSERT_EQ(levels.size(), 3u);
    for (std::size_t k = 0; k < levels.size(); ++k) {
      // Motions added after level k lie in its null space.
      const Matrix& jp = levels[k].projected_jacobian;
      for (std::size_t later = k + 1; later < levels.size(); ++later)
        EXPECT_LT((jp * levels[later].null_space_before).norm(), 1e-8) << k << " " << later;
    }
  }
}

TEST(Torque, GravityCompensationOnArm) {
  const RobotModel m = load_fixture("revolute_arm");
  for (double th : {0.0, 0.4, -1.1, 2.0}) {
    RobotState s{Vector::Constant(1, th), Vector::Zero(1)};
    const ControlOutput out = wbdc_step(m, s, {posture(m, 1)}, {});
    // Potential V = -m g (L sin th) with L = 0.5, so tau = dV/dth.
    EXPECT_NEAR(out.tau(0), -1.0 * 9.81 * 0.5 * std::cos(th), 1e-10) << th;
  }
}

TEST(Torque, RoundTripThroughForwardDynamics) {
  for (const char* name : {"biped_stand", "humanoid_sway", "biped_hierarchy"}) {
    const Scenario s = scenario(name);
    const RobotModel& m = *s.model;
    std::mt19937 rng(42);
    WbdcController c(m);
    for (int trial = 0; trial < 10; ++trial) {
      RobotState st = s.initial;
      st.q.tail(m.nq() - 7) += random_vector(rng, m.nq() - 7, 0.03);
      st.qdot = random_vector(rng, m.dof(), 0.1);
      const auto contacts = scripted_contacts(s, 0.0);
      const ControlOutput out = c.step(st, scripted_tasks(s, 0.0), contacts);
      const ConstrainedAccel fd = constrained_forward_dynamics(m, st, out.tau, contacts);
      EXPECT_LT((fd.qddot - out.qddot).cwiseAbs().maxCoeff(), 1e-6) << name;
      EXPECT_LT((fd.contact_forces - out.reaction_stacked).cwiseAbs().maxCoeff(), 1e-6) << name;
    }
  }
}

TEST(ReactionForces, SymmetricStanceSharesWeight) {
  const Scenario s = scenario("biped_stand");
  const RobotModel& m = *s.model;
  const ControlOutput out = wbdc_step(m, s.initial, scripted_tasks(s, 0.0), scripted_contacts(s, 0.0));
  ASSERT_EQ(out.reaction_forces.size(), 2u);
  const double fz_l = out.reaction_forces[0](5), fz_r = out.reaction_forces[1](5);
  EXPECT_NEAR(fz_l, fz_r, 1e-8);
  EXPECT_NEAR(fz_l + fz_r, m.total_mass() * 9.81, 1e-8);
  EXPECT_FALSE(out.diagnostics.relaxed);
  EXPECT_LT(out.delta.norm(), 1e-12);
}

TEST(ReactionForces, FeasibleCommandNeedsNoRelaxation) {
  const Scenario s = scenario("humanoid_sway");
  for (double t : {0.0, 0.05, 0.1}) {
    const ControlOutput out =
        wbdc_step(*s.model, s.initial, scripted_tasks(s, t), scripted_contacts(s, t));
    EXPECT_FALSE(out.diagnostics.relaxed);
    EXPECT_LT(out.delta.norm(), 1e-8);
  }
}

TEST(ReactionForces, InfeasibleCommandRelaxesWithinCones) {
  const Scenario s = scenario("humanoid_infeasible_push");
  const auto contacts = scripted_contacts(s, 0.03);
  const ControlOutput out =
      wbdc_step(*s.model, s.initial, scripted_tasks(s, 0.03), contacts);
  EXPECT_TRUE(out.diagnostics.relaxed);
  EXPECT_GT(out.delta.norm(), 1e-6);
  const ConeMatrix cones = augment_cones(contacts);
  EXPECT_LT(cones.violation(out.reaction_stacked), 1e-8);
}

TEST(ReactionForces, HeavierRelaxationWeightShrinksDelta) {
  const Scenario s = scenario("humanoid_infeasible_push");
  WbdcConfig cfg;
  cfg.relaxation = RelaxationMode::Weighted;
  const auto tasks = scripted_tasks(s, 0.03);
  const auto contacts = scripted_contacts(s, 0.03);
  const ControlOutput light = wbdc_step(*s.model, s.initial, tasks, contacts, {}, {1.0, 1.0}, cfg);
  const ControlOutput heavy = wbdc_step(*s.model, s.initial, tasks, contacts, {}, {1.0, 1e4}, cfg);
  EXPECT_LT(heavy.delta.norm(), light.delta.norm());
}

TEST(TaskLevels, PrioritiesMustBeContiguous) {
  const Scenario s = scenario("biped_stand");
  auto tasks = scripted_tasks(s, 0.0);
  tasks[1].priority = 3;
  EXPECT_THROW(wbdc_step(*s.model, s.initial, tasks, scripted_contacts(s, 0.0)), StageError);
  EXPECT_THROW(wbdc_step(*s.model, s.initial, {}, scripted_contacts(s, 0.0)), Error);
}

TEST(TaskLevels, EqualPrioritiesStack) {
  const Scenario s = scenario("humanoid_sway");
  const RobotModel& m = *s.model;
  const CycleContext ctx = prepare_cycle(m, s.initial, {}, {});
  TaskContext tctx{m, ctx.state, ctx.kin, std::nullopt, std::nullopt};
  std::vector<TaskSpec> tasks{frame_task("a", TaskKind::FramePosition, "r_hand", 2),
                              frame_task("b", TaskKind::FrameOrientation, "l_hand", 2),
                              posture(m, 1)};
  const auto levels = build_task_levels(tctx, tasks, 100.0);
  ASSERT_EQ(levels.size(), 2u);
  EXPECT_EQ(levels[0].names, std::vector<std::string>{"JP"});
  EXPECT_EQ(levels[1].jacobian.rows(), 6);
  EXPECT_EQ(levels[1].dims, (std::vector<int>{3, 3}));
}
