#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "test_util.hpp"
#include "wbdc/errors.hpp"
#include "wbdc/model.hpp"

using namespace wbdc;
using namespace wbdc::testing;

namespace {

constexpr double kFdStep = 1e-6;

Vector step_config(const RobotModel& m, const Vector& q, const Vector& v, double h) {
  return integrate_configuration(m, q, v, h);
}

Matrix mass_matrix(const RobotModel& m, const Vector& q) {
  return dynamics_terms(m, RobotState{q, Vector::Zero(m.dof())}).A;
}

// Rotation vector taking r0 to r1, world frame.
Vec3 rotation_delta(const Mat3& r0, const Mat3& r1) {
  const Eigen::AngleAxisd aa(r1 * r0.transpose());
  return aa.angle() * aa.axis();
}

// Column i of the Full6 Jacobian by central differences along unit velocity e_i.
Matrix fd_frame_jacobian(const RobotModel& m, const Vector& q, const std::string& frame) {
  Matrix j(6, m.dof());
  for (int i = 0; i < m.dof(); ++i) {
    const Vector e = Vector::Unit(m.dof(), i);
    const FramePose p = frame_pose(m, RobotState{step_config(m, q, e, kFdStep), Vector::Zero(m.dof())}, frame);
    const FramePose n = frame_pose(m, RobotState{step_config(m, q, e, -kFdStep), Vector::Zero(m.dof())}, frame);
    j.col(i).head<3>() = rotation_delta(n.rotation, p.rotation) / (2 * kFdStep);
    j.col(i).tail<3>() = (p.position - n.position) / (2 * kFdStep);
  }
  return j;
}

Vec3 com_of(const RobotModel& m, const Vector& q) {
  const Kinematics kin = compute_kinematics(m, RobotState{q, Vector::Zero(m.dof())});
  Vec3 c = Vec3::Zero();
  for (std::size_t b = 0; b < m.bodies().size(); ++b) c += m.bodies()[b].mass * kin.com[b];
  return c / m.total_mass();
}

// Centroidal momentum summed body by body, with body velocities taken from
// finite differences of the kinematics along qdot.
Vec6 direct_momentum(const RobotModel& m, const RobotState& s) {
  const Kinematics k0 = compute_kinematics(m, s);
  const Kinematics kp = compute_kinematics(m, RobotState{step_config(m, s.q, s.qdot, kFdStep), s.qdot});
  const Kinematics kn = compute_kinematics(m, RobotState{step_config(m, s.q, s.qdot, -kFdStep), s.qdot});
  const Vec3 c = com_of(m, s.q);
  Vec6 h = Vec6::Zero();
  for (std::size_t b = 0; b < m.bodies().size(); ++b) {
    const Body& body = m.bodies()[b];
    const Vec3 v = (kp.com[b] - kn.com[b]) / (2 * kFdStep);
    const Vec3 w = rotation_delta(kn.rotation[b], kp.rotation[b]) / (2 * kFdStep);
    const Mat3 iw = k0.rotation[b] * body.inertia * k0.rotation[b].transpose();
    h.head<3>() += iw * w + (k0.com[b] - c).cross(body.mass * v);
    h.tail<3>() += body.mass * v;
  }
  return h;
}

}  // namespace

TEST(Model, DoublePendulumMassMatrixClosedForm) {
  const RobotModel m = load_fixture("double_pendulum");
  // Point masses of 1 kg at the ends of two 1 m links:
  // A = [[3 + 2 cos t2, 1 + cos t2], [1 + cos t2, 1]].
  for (double t2 : {0.0, 0.4, std::numbers::pi / 2, -1.3}) {
    Vector q(2);
    q << 0.7, t2;
    const Matrix a = mass_matrix(m, q);
    Matrix expect(2, 2);
    expect << 3 + 2 * std::cos(t2), 1 + std::cos(t2), 1 + std::cos(t2), 1;
    EXPECT_LT((a - expect).cwiseAbs().maxCoeff(), 1e-5) << "t2 = " << t2;
  }
  Vector q(2);
  q << 0.0, std::numbers::pi / 2;
  Matrix expect(2, 2);
  expect << 3, 1, 1, 1;
  EXPECT_LT((mass_matrix(m, q) - expect).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Model, MassMatrixSymmetricPositiveDefinite) {
  std::mt19937 rng(11);
  for (const char* name : {"toy_biped", "toy_humanoid", "coupled_arm"}) {
    const RobotModel m = load_fixture(name);
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix a = dynamics_terms(m, random_state(m, rng)).A;
      EXPECT_LT((a - a.transpose()).norm(), 1e-10 * a.norm()) << name;
      EXPECT_EQ(a.llt().info(), Eigen::Success) << name;
    }
  }
}

TEST(Model, CoriolisMatchesChristoffelOracle) {
  std::mt19937 rng(12);
  for (const char* name : {"double_pendulum", "coupled_arm"}) {
    const RobotModel m = load_fixture(name);
    for (int trial = 0; trial < 5; ++trial) {
      const RobotState s = random_state(m, rng, 1.0, 1.5);
      const int n = m.dof();
      // dA/dq_k by central differences; fixed base so q and v index alike.
      std::vector<Matrix> da(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k) {
        Vector qp = s.q, qn = s.q;
        qp(k) += kFdStep;
        qn(k) -= kFdStep;
        da[static_cast<std::size_t>(k)] = (mass_matrix(m, qp) - mass_matrix(m, qn)) / (2 * kFdStep);
      }
      Vector b = Vector::Zero(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            b(i) += (da[static_cast<std::size_t>(k)](i, j) - 0.5 * da[static_cast<std::size_t>(i)](j, k)) *
                    s.qdot(j) * s.qdot(k);
      const Vector got = dynamics_terms(m, s).b;
      EXPECT_LT((got - b).cwiseAbs().maxCoeff(), 1e-5 * (1.0 + b.norm())) << name;
    }
  }
}

TEST(Model, GravityIsPotentialGradient) {
  std::mt19937 rng(13);
  for (const char* name : {"toy_humanoid", "coupled_arm"}) {
    const RobotModel m = load_fixture(name);
    const RobotState s = random_state(m, rng);
    const auto potential = [&](const Vector& q) { return -m.total_mass() * m.gravity().dot(com_of(m, q)); };
    Vector g(m.dof());
    for (int i = 0; i < m.dof(); ++i) {
      const Vector e = Vector::Unit(m.dof(), i);
      g(i) = (potential(step_config(m, s.q, e, kFdStep)) - potential(step_config(m, s.q, e, -kFdStep))) /
             (2 * kFdStep);
    }
    EXPECT_LT((dynamics_terms(m, s).g - g).cwiseAbs().maxCoeff(), 1e-5) << name;
  }
}

TEST(Model, ZeroVelocityHasNoCoriolis) {
  const RobotModel m = load_fixture("toy_humanoid");
  std::mt19937 rng(14);
  RobotState s = random_state(m, rng);
  s.qdot.setZero();
  EXPECT_EQ(dynamics_terms(m, s).b.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Model, PointMass) {
  const RobotModel m = load_fixture("point_mass");
  ASSERT_EQ(m.dof(), 6);
  std::mt19937 rng(15);
  const RobotState s = random_state(m, rng, 0.5, 0.0);
  const Matrix a = dynamics_terms(m, s).A;
  EXPECT_LT((a.bottomRightCorner(3, 3) - m.total_mass() * Mat3::Identity()).norm(), 1e-12);

  const Vector fall = forward_dynamics(m, s, Vector::Zero(0));
  EXPECT_LT((fall.tail<3>() - m.gravity()).norm(), 1e-12);
  EXPECT_LT(fall.head<3>().norm(), 1e-12);

  Vec6 push = Vec6::Zero();
  push.tail<3>() = -m.total_mass() * m.gravity();
  const Vector held = forward_dynamics(m, s, Vector::Zero(0), {{"center", push}});
  EXPECT_LT(held.norm(), 1e-12);
}

TEST(Model, RevoluteArmLeverArm) {
  const RobotModel m = load_fixture("revolute_arm");
  const RobotState s{Vector::Zero(1), Vector::Zero(1)};
  const Matrix j = frame_jacobian(m, s, "tip", JacobianKind::Point3);
  // Axis y, tip 1 m along x: omega x r = (0, 1, 0) x (1, 0, 0).
  EXPECT_LT((j.col(0) - Vec3(0, 0, -1)).norm(), 1e-12);
  EXPECT_NEAR(j.col(0).norm(), 1.0, 1e-12);
}

TEST(Model, FrameJacobianMatchesFiniteDifferences) {
  std::mt19937 rng(16);
  for (const auto& [name, frame] : {std::pair{"toy_humanoid", "r_hand"}, std::pair{"toy_biped", "l_sole"},
                                    std::pair{"coupled_arm", "tool"}}) {
    const RobotModel m = load_fixture(name);
    for (int trial = 0; trial < 3; ++trial) {
      const RobotState s = random_state(m, rng);
      const Matrix fd = fd_frame_jacobian(m, s.q, frame);
      const Matrix j = frame_jacobian(m, s, frame, JacobianKind::Full6);
      EXPECT_LT((j - fd).cwiseAbs().maxCoeff(), 1e-6) << name;
      EXPECT_LT((frame_jacobian(m, s, frame, JacobianKind::Point3) - j.bottomRows(3)).norm(), 1e-14);
    }
  }
}

TEST(Model, JdotQdotMatchesFiniteDifferences) {
  std::mt19937 rng(17);
  for (const auto& [name, frame] : {std::pair{"toy_humanoid", "l_hand"}, std::pair{"coupled_arm", "tool"}}) {
    const RobotModel m = load_fixture(name);
    const RobotState s = random_state(m, rng);
    const auto jv = [&](double h) {
      const RobotState t{step_config(m, s.q, s.qdot, h), s.qdot};
      return Vector(frame_jacobian(m, t, frame, JacobianKind::Full6) * s.qdot);
    };
    const Vector fd = (jv(kFdStep) - jv(-kFdStep)) / (2 * kFdStep);
    EXPECT_LT((jdot_qdot(m, s, frame, JacobianKind::Full6) - fd).cwiseAbs().maxCoeff(), 1e-5) << name;
  }
}

TEST(Model, CenterOfMassJacobian) {
  const RobotModel m = load_fixture("toy_humanoid");
  std::mt19937 rng(18);
  const RobotState s = random_state(m, rng);
  const CenterOfMass com = center_of_mass(m, compute_kinematics(m, s));
  EXPECT_LT((com.position - com_of(m, s.q)).norm(), 1e-12);
  Matrix fd(3, m.dof());
  for (int i = 0; i < m.dof(); ++i) {
    const Vector e = Vector::Unit(m.dof(), i);
    fd.col(i) = (com_of(m, step_config(m, s.q, e, kFdStep)) - com_of(m, step_config(m, s.q, e, -kFdStep))) /
                (2 * kFdStep);
  }
  EXPECT_LT((com.jacobian - fd).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((com.velocity - fd * s.qdot).norm(), 1e-6);
}

TEST(Model, CentroidalMomentumMatrix) {
  std::mt19937 rng(19);
  for (const char* name : {"toy_humanoid", "toy_biped"}) {
    const RobotModel m = load_fixture(name);
    const RobotState s = random_state(m, rng);
    const CentroidalMomentum h = centroidal_momentum(m, compute_kinematics(m, s));
    const Vec6 direct = direct_momentum(m, s);
    EXPECT_LT((h.matrix * s.qdot - direct).cwiseAbs().maxCoeff(), 1e-6) << name;
    EXPECT_LT((h.momentum - h.matrix * s.qdot).cwiseAbs().maxCoeff(), 1e-10) << name;
    // Linear rows are total mass times the CoM Jacobian.
    const CenterOfMass com = center_of_mass(m, compute_kinematics(m, s));
    EXPECT_LT((h.matrix.bottomRows(3) - m.total_mass() * com.jacobian).norm(), 1e-10) << name;

    // Bias: rate of change of CMM * qdot along constant qdot.
    const auto hv = [&](double dt) {
      const RobotState t{step_config(m, s.q, s.qdot, dt), s.qdot};
      return Vec6(centroidal_momentum(m, compute_kinematics(m, t)).matrix * s.qdot);
    };
    const Vec6 fd = (hv(kFdStep) - hv(-kFdStep)) / (2 * kFdStep);
    EXPECT_LT((h.bias - fd).cwiseAbs().maxCoeff(), 1e-5 * (1.0 + fd.norm())) << name;
  }
}

TEST(Model, CompositeInertiaOfSingleBody) {
  const RobotModel m = load_fixture("point_mass");
  std::mt19937 rng(20);
  const RobotState s = random_state(m, rng);
  const Kinematics kin = compute_kinematics(m, s);
  const Mat3 r = kin.rotation[0];
  const Mat3 expect = r * m.bodies()[0].inertia * r.transpose();
  EXPECT_LT((centroidal_momentum(m, kin).composite_inertia - expect).norm(), 1e-12);
}

TEST(ModelIo, FixtureShapes) {
  const RobotModel biped = load_fixture("toy_biped");
  EXPECT_EQ(biped.dof(), 6 + biped.num_actuated());
  EXPECT_EQ(biped.num_actuated(), 12);
  EXPECT_NO_THROW(biped.frame_index("l_sole"));
  EXPECT_NO_THROW(biped.frame_index("r_sole"));
  EXPECT_THROW(biped.frame_index("nope"), FrameNotFound);

  const RobotModel humanoid = load_fixture("toy_humanoid");
  EXPECT_EQ(humanoid.num_actuated(), 20);
  EXPECT_EQ(humanoid.dof(), 26);
  EXPECT_EQ(humanoid.nq(), 27);
}

TEST(ModelIo, MinimalFloatingBody) {
  const RobotModel m = load_model(R"({"bodies": [{"name": "b", "mass": 2.0, "inertia": [1, 1, 1, 0, 0, 0]}],
                                       "joints": [{"name": "root", "type": "floating", "child": "b"}]})");
  EXPECT_EQ(m.dof(), 6);
  EXPECT_EQ(m.num_actuated(), 0);
  EXPECT_DOUBLE_EQ(m.total_mass(), 2.0);
}

TEST(ModelIo, RejectsBadDocuments) {
  EXPECT_THROW(load_model(R"({"bodies": [{"name": "b", "mass": -1.0}], "joints": []})"), ModelParseError);
  EXPECT_THROW(load_model("{not json"), ModelParseError);
  EXPECT_THROW(load_model(R"({"bodies": [{"name": "a", "mass": 1}, {"name": "b", "mass": 1}],
                             "joints": [{"name": "j", "type": "revolute", "parent": "b", "child": "b"}]})"),
               Error);
}

TEST(ModelIo, InvalidStateRejected) {
  const RobotModel m = load_fixture("toy_biped");
  RobotState s{m.neutral_configuration(), Vector::Zero(m.dof())};
  EXPECT_NO_THROW(validate_state(m, s));
  s.q(3) = 0.0;  // zero quaternion
  EXPECT_THROW(validate_state(m, s), InvalidState);
  RobotState short_state{Vector::Zero(3), Vector::Zero(m.dof())};
  EXPECT_THROW(validate_state(m, short_state), InvalidState);
}
