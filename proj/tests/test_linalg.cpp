#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "test_util.hpp"
#include "wbdc/errors.hpp"
#include "wbdc/linalg.hpp"

using namespace wbdc;
using namespace wbdc::testing;

namespace {

// Moore-Penrose conditions, checked directly.
void expect_penrose(const Matrix& m, const Matrix& p, double tol) {
  EXPECT_LT((m * p * m - m).norm(), tol);
  EXPECT_LT((p * m * p - p).norm(), tol);
  EXPECT_LT((m * p - (m * p).transpose()).norm(), tol);
  EXPECT_LT((p * m - (p * m).transpose()).norm(), tol);
}

}  // namespace

TEST(Pinv, PenroseConditionsFullRank) {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = random_matrix(rng, 4, 7);
    expect_penrose(m, svd_pinv(m), 1e-10);
  }
}

TEST(Pinv, PenroseConditionsRankDeficient) {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = random_matrix(rng, 6, 2) * random_matrix(rng, 2, 5);
    const Matrix p = svd_pinv(m);
    expect_penrose(m, p, 1e-9);
    EXPECT_EQ(numerical_rank(p, 1e-8), 2);
  }
}

TEST(Pinv, PsdMatchesSvd) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix b = random_matrix(rng, 6, 3);
    const Matrix m = b * b.transpose();
    EXPECT_LT((psd_pinv(m) - svd_pinv(m)).norm(), 1e-8 * (1.0 + svd_pinv(m).norm()));
  }
}

TEST(Pinv, ReferenceScaleDropsNoise) {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = 1e-14;
  EXPECT_GT(psd_pinv(m).norm(), 1e13);  // relative cutoff keeps it
  EXPECT_EQ(psd_pinv(m, {}, 1.0).norm(), 0.0);
}

TEST(Pinv, ZeroMatrix) {
  EXPECT_EQ(svd_pinv(Matrix::Zero(3, 2)).norm(), 0.0);
  EXPECT_EQ(svd_pinv(Matrix::Zero(3, 2)).rows(), 2);
  EXPECT_EQ(numerical_rank(Matrix::Zero(3, 3), 1e-6), 0);
}

TEST(Pinv, RejectsNonFinite) {
  Matrix m = Matrix::Identity(2, 2);
  m(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(svd_pinv(m), InvalidMatrix);
  PinvConfig bad;
  bad.singular_value_tolerance = -1.0;
  EXPECT_THROW(validate(bad), InvalidMatrix);
}

TEST(DynConsistentInv, RightInverseAndProjector) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 8;
    const Matrix a = random_spd(rng, n);
    const Matrix a_inv = a.inverse();
    const Matrix j = random_matrix(rng, 3, n);
    const Matrix jb = dyn_consistent_inv(j, a_inv);
    EXPECT_LT((j * jb - Matrix::Identity(3, 3)).norm(), 1e-10);

    const Matrix nproj = null_projector(j, jb);
    EXPECT_LT((nproj * nproj - nproj).norm(), 1e-10);
    EXPECT_LT((j * nproj).norm(), 1e-10);
    // Dynamic consistency: N A^-1 is symmetric.
    const Matrix na = nproj * a_inv;
    EXPECT_LT((na - na.transpose()).norm(), 1e-10);
  }
}

TEST(DynConsistentInv, MatchesWeightedLeastNormOracle) {
  // x = jb * y solves min x^T A x s.t. J x = y; the KKT system gives the oracle.
  std::mt19937 rng(5);
  const int n = 6, m = 2;
  const Matrix a = random_spd(rng, n);
  const Matrix j = random_matrix(rng, m, n);
  const Vector y = random_vector(rng, m);
  Matrix kkt = Matrix::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = a;
  kkt.topRightCorner(n, m) = j.transpose();
  kkt.bottomLeftCorner(m, n) = j;
  Vector rhs = Vector::Zero(n + m);
  rhs.tail(m) = y;
  const Vector oracle = kkt.lu().solve(rhs).head(n);
  const Vector x = dyn_consistent_inv(j, a.inverse()) * y;
  EXPECT_LT((x - oracle).norm(), 1e-10);
}

TEST(DynConsistentInv, ProjectedZeroJacobianStaysZero) {
  std::mt19937 rng(6);
  const int n = 5;
  const Matrix a_inv = random_spd(rng, n).inverse();
  const Matrix raw = random_matrix(rng, 2, n);
  const Matrix tiny = 1e-15 * random_matrix(rng, 2, n);
  EXPECT_LT(dyn_consistent_inv(tiny, a_inv, raw).norm(), 1e-12);
}

TEST(DynConsistentInv, EmptyJacobianGivesIdentityProjector) {
  const Matrix j(0, 4);
  const Matrix jb = dyn_consistent_inv(j, Matrix::Identity(4, 4));
  EXPECT_EQ(jb.rows(), 4);
  EXPECT_EQ(jb.cols(), 0);
  EXPECT_TRUE(null_projector(j, jb).isIdentity());
}

TEST(Rank, ReferenceScale) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1e-9;
  EXPECT_EQ(numerical_rank(m, 1e-6), 1);
  EXPECT_EQ(numerical_rank(m, 1e-6, 1.0), 0);
  EXPECT_EQ(numerical_rank(Matrix::Identity(3, 3), 1e-6, 1.0), 3);
}

TEST(Skew, CrossProduct) {
  const Vec3 a(1.0, -2.0, 0.5), b(0.3, 0.7, -1.1);
  EXPECT_LT((skew(a) * b - a.cross(b)).norm(), 1e-15);
}
