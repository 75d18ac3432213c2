#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "test_util.hpp"
#include "wbdc/errors.hpp"
#include "wbdc/scenario.hpp"
#include "wbdc/sim.hpp"

using namespace wbdc;
using namespace wbdc::testing;

namespace {

double energy(const RobotModel& m, const RobotState& s) {
  const Kinematics kin = compute_kinematics(m, s);
  const double kinetic = 0.5 * s.qdot.dot(dynamics_terms(m, s).A * s.qdot);
  const double potential = -m.total_mass() * m.gravity().dot(center_of_mass(m, kin).position);
  return kinetic + potential;
}

}  // namespace

TEST(Integrate, BallisticPointMass) {
  const RobotModel m = load_fixture("point_mass");
  RobotState s{m.neutral_configuration(), Vector::Zero(6)};
  s.qdot(3) = 1.0;  // linear x
  s.qdot(5) = 2.0;  // linear z
  const double dt = 1e-3;
  const int n = 500;
  for (int k = 0; k < n; ++k) s = integrate_step(m, s, Vector::Zero(0), {}, dt).state;
  const double t = n * dt;
  // Semi-implicit Euler on constant gravity: z = v0 t - g dt^2 n (n + 1) / 2.
  EXPECT_NEAR(s.q(0), t, 1e-12);
  EXPECT_NEAR(s.q(2), 2.0 * t - 9.81 * dt * dt * n * (n + 1) / 2.0, 1e-10);
  EXPECT_NEAR(s.qdot(5), 2.0 - 9.81 * t, 1e-10);
}

TEST(Integrate, SupportedMassStaysPut) {
  const RobotModel m = load_fixture("point_mass");
  ContactSpec c;
  c.frame = "center";
  c.geometry = ContactSpec::Geometry::Point;
  RobotState s{m.neutral_configuration(), Vector::Zero(6)};
  const Vector q0 = s.q;
  for (int k = 0; k < 100; ++k) {
    const StepResult r = integrate_step(m, s, Vector::Zero(0), {c}, 1e-3);
    ASSERT_EQ(r.contacts.size(), 1u);
    EXPECT_NEAR(r.dynamics.contact_forces(2), m.total_mass() * 9.81, 1e-9);
    s = r.state;
  }
  EXPECT_LT((s.q - q0).norm(), 1e-12);
}

TEST(Integrate, PullingContactIsReleased) {
  const RobotModel m = load_fixture("point_mass");
  ContactSpec ceiling;
  ceiling.frame = "center";
  ceiling.geometry = ContactSpec::Geometry::Point;
  // A contact whose normal points down would have to pull against gravity.
  RobotState s{m.neutral_configuration(), Vector::Zero(6)};
  ceiling.rotation_to_local = Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitX()).toRotationMatrix();
  const StepResult r = integrate_step(m, s, Vector::Zero(0), {ceiling}, 1e-3);
  EXPECT_TRUE(r.contacts.empty());
  ASSERT_EQ(r.released.size(), 1u);
  EXPECT_NEAR(r.state.qdot(5), -9.81e-3, 1e-12);
}

TEST(Integrate, PendulumEnergyDriftIsSmall) {
  const RobotModel m = load_fixture("double_pendulum");
  RobotState s{Vector::Zero(2), Vector::Zero(2)};
  s.q << 0.3, -0.4;
  const double e0 = energy(m, s);
  double worst = 0.0;
  const double dt = 1e-3;
  for (int k = 0; k < 2000; ++k) {
    s = integrate_step(m, s, Vector::Zero(2), {}, dt).state;
    worst = std::max(worst, std::abs(energy(m, s) - e0));
  }
  // Swing amplitude sets the energy scale, not the arbitrary potential zero.
  const double scale = 2.0 * 9.81 * 3.0;
  EXPECT_LT(worst / scale, 5e-3);
}

TEST(Integrate, FreeFlightConservesAngularMomentum) {
  const RobotModel m = load_fixture("toy_biped");
  std::mt19937 rng(51);
  RobotState s = random_state(m, rng, 0.3, 0.5);
  const auto momentum = [&](const RobotState& st) {
    return Vec6(centroidal_momentum(m, compute_kinematics(m, st)).momentum);
  };
  const Vec3 k0 = momentum(s).head<3>();
  for (int k = 0; k < 200; ++k)
    s = integrate_step(m, s, Vector::Zero(m.num_actuated()), {}, 5e-4).state;
  EXPECT_LT((momentum(s).head<3>() - k0).norm(), 2e-3 * (1.0 + k0.norm()));
}

TEST(Integrate, RejectsBadStep) {
  const RobotModel m = load_fixture("point_mass");
  const RobotState s{m.neutral_configuration(), Vector::Zero(6)};
  EXPECT_THROW(integrate_step(m, s, Vector::Zero(0), {}, 0.0), InvalidState);
  EXPECT_THROW(integrate_step(m, s, Vector::Zero(0), {}, 0.01), InvalidState);
  EXPECT_NO_THROW(integrate_step(m, s, Vector::Zero(0), {}, 5e-3));
}

TEST(ProjectVelocity, RemovesContactVelocity) {
  const RobotModel m = load_fixture("toy_biped");
  Scenario sc = load_scenario(data_path("scenarios/biped_stand.json"));
  std::mt19937 rng(52);
  RobotState s = sc.initial;
  s.qdot = random_vector(rng, m.dof());
  const auto contacts = scripted_contacts(sc, 0.0);
  Vector impulse;
  const Vector v = project_velocity(m, s, contacts, {}, &impulse);
  const CycleContext ctx = prepare_cycle(m, {s.q, v}, contacts, {});
  EXPECT_LT((ctx.contact_jacobian * v).norm(), 1e-10);
  // The impulse is the momentum change.
  EXPECT_LT((impulse - dynamics_terms(m, s).A * (v - s.qdot)).norm(), 1e-8);
}

TEST(RunScenario, DeterministicAndFinite) {
  Scenario sc = load_scenario(data_path("scenarios/biped_stand.json"));
  sc.duration = 0.1;
  const Trace a = run_scenario(sc);
  const Trace b = run_scenario(sc);
  ASSERT_EQ(a.records.size(), 100u);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].state.q, b.records[i].state.q);
    EXPECT_EQ(a.records[i].output.tau, b.records[i].output.tau);
    EXPECT_TRUE(a.records[i].output.tau.allFinite());
  }
}

TEST(RunScenario, StandingHoldsTheCenterOfMass) {
  Scenario sc = load_scenario(data_path("scenarios/biped_stand.json"));
  sc.duration = 0.5;
  const RobotModel& m = *sc.model;
  const Trace tr = run_scenario(sc);
  const Vec3 c0 = center_of_mass(m, compute_kinematics(m, sc.initial)).position;
  const Vec3 c1 = center_of_mass(m, compute_kinematics(m, tr.records.back().state)).position;
  EXPECT_LT((c1 - c0).norm(), 1e-6);
  EXPECT_TRUE(tr.events.empty());
}

TEST(RunScenario, FailureCarriesPartialTrace) {
  Scenario sc = load_scenario(data_path("scenarios/biped_stand.json"));
  sc.tasks.front().spec.kind = TaskKind::FramePosition;
  sc.tasks.front().spec.frame = "l_sole";
  try {
    run_scenario(sc);
    FAIL() << "expected the span check to fail";
  } catch (const SimulationAborted& e) {
    EXPECT_EQ(e.time(), 0.0);
    EXPECT_TRUE(e.partial().records.empty());
  }
}
