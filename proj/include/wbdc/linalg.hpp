#pragma once

#include <Eigen/Dense>

namespace wbdc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

struct PinvConfig {
  // Singular values below tolerance * sigma_max are treated as zero.
  double singular_value_tolerance = 1e-8;
};

void validate(const PinvConfig& cfg);

/// Moore-Penrose pseudoinverse through a full SVD. Throws InvalidMatrix on
/// non-finite input.
Matrix svd_pinv(const Eigen::Ref<const Matrix>& m, const PinvConfig& cfg = {});

/// Pseudoinverse of a symmetric positive semi-definite matrix. For such
/// matrices the eigendecomposition is the SVD, so the cutoff rule is the same
/// as svd_pinv. A positive `reference_scale` raises the cutoff to
/// tolerance * max(largest eigenvalue, reference_scale), so a matrix that is
/// numerically zero relative to the reference is treated as zero.
Matrix psd_pinv(const Eigen::Ref<const Matrix>& m, const PinvConfig& cfg = {},
                double reference_scale = 0.0);

/// Dynamically consistent inverse A^-1 J^T (J A^-1 J^T)^+. For a projected
/// Jacobian J N, pass the unprojected J as `reference` so directions the
/// projection removed are not amplified.
Matrix dyn_consistent_inv(const Eigen::Ref<const Matrix>& j,
                          const Eigen::Ref<const Matrix>& a_inv,
                          const PinvConfig& cfg = {});
Matrix dyn_consistent_inv(const Eigen::Ref<const Matrix>& j,
                          const Eigen::Ref<const Matrix>& a_inv,
                          const Eigen::Ref<const Matrix>& reference,
                          const PinvConfig& cfg = {});

/// N = I - j_bar * j. A Jacobian with zero rows yields the identity.
Matrix null_projector(const Eigen::Ref<const Matrix>& j,
                      const Eigen::Ref<const Matrix>& j_bar);

/// Number of singular values above tol * sigma_max; zero for a zero matrix.
int numerical_rank(const Eigen::Ref<const Matrix>& m, double tol);

/// Rank with the cutoff measured against an external scale instead of the
/// matrix's own largest singular value. Use this when the matrix is expected
/// to vanish (a relative cutoff would count rounding noise as rank).
int numerical_rank(const Eigen::Ref<const Matrix>& m, double tol, double reference_scale);

bool all_finite(const Eigen::Ref<const Matrix>& m);

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace wbdc
