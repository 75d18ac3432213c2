#pragma once

#include <random>
#include <string>

#include "wbdc/linalg.hpp"
#include "wbdc/model.hpp"

namespace wbdc::testing {

inline std::string data_path(const std::string& rel) { return std::string(WBDC_DATA_DIR) + "/" + rel; }

inline RobotModel load_fixture(const std::string& name) {
  return load_model_file(data_path("models/" + name + ".json"));
}

inline Matrix random_matrix(std::mt19937& rng, int rows, int cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline Vector random_vector(std::mt19937& rng, int n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale);
}

inline Matrix random_spd(std::mt19937& rng, int n) {
  const Matrix m = random_matrix(rng, n, n);
  return m * m.transpose() + n * Matrix::Identity(n, n);
}

/// Random configuration near the neutral one; joints within +-spread rad and
/// a random unit base quaternion for floating models.
inline RobotState random_state(const RobotModel& model, std::mt19937& rng, double spread = 0.5,
                               double vel = 1.0) {
  RobotState s{model.neutral_configuration(), Vector::Zero(model.dof())};
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int first_joint_q = 0;
  if (model.floating_base()) {
    for (int i = 0; i < 3; ++i) s.q(i) = 0.2 * u(rng);
    Eigen::Quaterniond qt(1.0, 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng));
    qt.normalize();
    s.q.segment<4>(3) << qt.w(), qt.x(), qt.y(), qt.z();
    first_joint_q = 7;
  }
  for (int i = first_joint_q; i < model.nq(); ++i) s.q(i) = spread * u(rng);
  for (int i = 0; i < model.dof(); ++i) s.qdot(i) = vel * u(rng);
  return s;
}

}  // namespace wbdc::testing
