#include <algorithm>
#include "wbdc/linalg.hpp"

#include <string>

#include "wbdc/errors.hpp"

namespace wbdc {

void validate(const PinvConfig& cfg) {
  if (!(cfg.singular_value_tolerance > 0.0 && cfg.singular_value_tolerance < 1.0))
    throw InvalidMatrix("pseudoinverse tolerance must lie in (0, 1)");
}

int numerical_rank(const Eigen::Ref<const Matrix>& m, double tol, double reference_scale) {
  if (!m.allFinite()) throw InvalidMatrix("numerical_rank: non-finite entry");
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol * reference_scale) ++rank;
  return rank;
}

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

Matrix svd_pinv(const Eigen::Ref<const Matrix>& m, const PinvConfig& cfg) {
  validate(cfg);
  if (!m.allFinite()) throw InvalidMatrix("svd_pinv: non-finite entry");
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = cfg.singular_value_tolerance * (sv.size() ? sv(0) : 0.0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix psd_pinv(const Eigen::Ref<const Matrix>& m, const PinvConfig& cfg,
                double reference_scale) {
  validate(cfg);
  if (!m.allFinite()) throw InvalidMatrix("psd_pinv: non-finite entry");
  if (m.rows() != m.cols()) throw DimensionError("psd_pinv: matrix is not square");
  if (m.size() == 0) return Matrix::Zero(0, 0);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const Vector& ev = eig.eigenvalues();  // ascending
  const double largest = ev.cwiseAbs().maxCoeff();
  const double cutoff = cfg.singular_value_tolerance * std::max(largest, reference_scale);
  Vector inv = Vector::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cutoff && ev(i) > 0.0) inv(i) = 1.0 / ev(i);
  const Matrix& v = eig.eigenvectors();
  return v * inv.asDiagonal() * v.transpose();
}

Matrix dyn_consistent_inv(const Eigen::Ref<const Matrix>& j,
                          const Eigen::Ref<const Matrix>& a_inv,
                          const PinvConfig& cfg) {
  if (a_inv.rows() != a_inv.cols())
    throw DimensionError("dyn_consistent_inv: A^-1 is not square");
  if (j.cols() != a_inv.rows())
    throw DimensionError("dyn_consistent_inv: J has " + std::to_string(j.cols()) +
                         " columns, A^-1 is " + std::to_string(a_inv.rows()) + "x" +
                         std::to_string(a_inv.cols()));
  if (!j.allFinite() || !a_inv.allFinite())
    throw InvalidMatrix("dyn_consistent_inv: non-finite entry");
  if (j.rows() == 0) return Matrix::Zero(a_inv.rows(), 0);

  const Matrix a_inv_jt = a_inv * j.transpose();
  Matrix lambda_inv = j * a_inv_jt;
  lambda_inv = 0.5 * (lambda_inv + lambda_inv.transpose());
  return a_inv_jt * psd_pinv(lambda_inv, cfg);
}

Matrix dyn_consistent_inv(const Eigen::Ref<const Matrix>& j,
                          const Eigen::Ref<const Matrix>& a_inv,
                          const Eigen::Ref<const Matrix>& reference,
                          const PinvConfig& cfg) {
  if (reference.cols() != a_inv.rows())
    throw DimensionError("dyn_consistent_inv: reference Jacobian has the wrong column count");
  if (j.rows() == 0 || reference.rows() == 0) return dyn_consistent_inv(j, a_inv, cfg);
  if (j.cols() != a_inv.rows()) return dyn_consistent_inv(j, a_inv, cfg);  // throws
  // Trace of J A^-1 J^T bounds its largest eigenvalue from above.
  const double scale = (reference * a_inv * reference.transpose()).trace();
  const Matrix a_inv_jt = a_inv * j.transpose();
  Matrix lambda_inv = j * a_inv_jt;
  lambda_inv = 0.5 * (lambda_inv + lambda_inv.transpose());
  return a_inv_jt * psd_pinv(lambda_inv, cfg, scale);
}

Matrix null_projector(const Eigen::Ref<const Matrix>& j,
                      const Eigen::Ref<const Matrix>& j_bar) {
  if (j_bar.rows() != j.cols() || j_bar.cols() != j.rows())
    throw DimensionError("null_projector: j_bar must be the transpose shape of j");
  Matrix n = Matrix::Identity(j.cols(), j.cols());
  if (j.rows() > 0) n.noalias() -= j_bar * j;
  return n;
}

int numerical_rank(const Eigen::Ref<const Matrix>& m, double tol) {
  if (!m.allFinite()) throw InvalidMatrix("numerical_rank: non-finite entry");
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol * sv(0)) ++rank;
  return rank;
}

}  // namespace wbdc
