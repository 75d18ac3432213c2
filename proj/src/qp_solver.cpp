#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wbdc/errors.hpp"
#include "wbdc/qp.hpp"

namespace wbdc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative threshold below which a step direction is treated as zero.
constexpr double kDependencyTol = 1e-20;

}  // namespace

void validate(const QpProblem& p) {
  const auto n = p.H.rows();
  if (p.H.cols() != n || p.c.size() != n)
    throw DimensionError("qp: H must be n x n and c of length n");
  if (p.A_eq.rows() != p.b_eq.size() || (p.A_eq.rows() > 0 && p.A_eq.cols() != n))
    throw DimensionError("qp: equality block has inconsistent dimensions");
  if (p.A_in.rows() != p.b_in.size() || (p.A_in.rows() > 0 && p.A_in.cols() != n))
    throw DimensionError("qp: inequality block has inconsistent dimensions");
  if (p.A_eq.rows() > n) throw DimensionError("qp: more equalities than variables");
  if (!p.H.allFinite() || !p.c.allFinite() || !p.A_eq.allFinite() || !p.b_eq.allFinite() ||
      !p.A_in.allFinite() || !p.b_in.allFinite())
    throw InvalidMatrix("qp: non-finite problem data");
}

// Givens update that appends d (already J^T n) as a new column of R and
// rotates the trailing part of J so that d[iq+1:] = 0.
bool QpSolver::add_constraint(Vector& d, int& iq, double& r_norm) {
  const int n = static_cast<int>(J_.rows());
  for (int j = n - 1; j >= iq + 1; --j) {
    double cc = d(j - 1);
    double ss = d(j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    d(j) = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d(j - 1) = -h;
    } else {
      d(j - 1) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = 0; k < n; ++k) {
      const double t1 = J_(k, j - 1);
      const double t2 = J_(k, j);
      J_(k, j - 1) = t1 * cc + t2 * ss;
      J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
    }
  }
  ++iq;
  R_.col(iq - 1).head(iq) = d.head(iq);
  if (std::abs(d(iq - 1)) <= std::numeric_limits<double>::epsilon() * r_norm) return false;
  r_norm = std::max(r_norm, std::abs(d(iq - 1)));
  return true;
}

void QpSolver::delete_constraint(std::vector<int>& active, Vector& u, int& iq, int qq) {
  const int n = static_cast<int>(J_.rows());
  for (int i = qq; i < iq - 1; ++i) {
    active[i] = active[i + 1];
    u(i) = u(i + 1);
    R_.col(i) = R_.col(i + 1);
  }
  active[iq - 1] = active[iq];
  u(iq - 1) = u(iq);
  active[iq] = 0;
  u(iq) = 0.0;
  R_.col(iq - 1).setZero();
  --iq;
  if (iq == 0) return;

  for (int j = qq; j < iq; ++j) {
    double cc = R_(j, j);
    double ss = R_(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    cc /= h;
    ss /= h;
    R_(j + 1, j) = 0.0;
    if (cc < 0.0) {
      R_(j, j) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      R_(j, j) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = j + 1; k < iq; ++k) {
      const double t1 = R_(j, k);
      const double t2 = R_(j + 1, k);
      R_(j, k) = t1 * cc + t2 * ss;
      R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
    }
    for (int k = 0; k < n; ++k) {
      const double t1 = J_(k, j);
      const double t2 = J_(k, j + 1);
      J_(k, j) = t1 * cc + t2 * ss;
      J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
    }
  }
}

QpSolution QpSolver::solve(const QpProblem& p, int max_iterations) {
  validate(p);
  const int n = p.num_variables();
  const int me = static_cast<int>(p.A_eq.rows());
  const int mi = static_cast<int>(p.A_in.rows());

  QpSolution sol;
  sol.eq_multipliers = Vector::Zero(me);
  sol.ineq_multipliers = Vector::Zero(mi);

  if ((p.H - p.H.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + p.H.cwiseAbs().maxCoeff())) {
    sol.status = QpStatus::NotConvex;
    return sol;
  }
  Eigen::LLT<Matrix> llt(p.H);
  if (llt.info() != Eigen::Success) {
    sol.status = QpStatus::NotConvex;
    return sol;
  }
  const Matrix l = llt.matrixL();
  if (l.diagonal().minCoeff() <= 0.0) {
    sol.status = QpStatus::NotConvex;
    return sol;
  }

  // J = L^-T, R empty.
  J_ = l.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(n, n));
  R_ = Matrix::Zero(n, n);
  double r_norm = 1.0;

  Vector x = -llt.solve(p.c);
  double f = 0.5 * p.c.dot(x);

  // Active set entries: equalities as -(i+1), inequalities as i.
  std::vector<int> active(n + 1, 0);
  Vector u = Vector::Zero(n + 1);
  int iq = 0;
  Vector d(n), z(n), r(n + 1);

  auto compute_direction = [&](const Vector& np) {
    d.noalias() = J_.transpose() * np;
    z.noalias() = J_.rightCols(n - iq) * d.tail(n - iq);
    if (iq > 0)
      r.head(iq) = R_.topLeftCorner(iq, iq).triangularView<Eigen::Upper>().solve(d.head(iq));
  };
  auto direction_is_zero = [&]() {
    return d.tail(n - iq).squaredNorm() <= kDependencyTol * std::max(d.squaredNorm(), 1e-300);
  };

  auto finish = [&](QpStatus status) {
    sol.status = status;
    sol.x = x;
    sol.objective = 0.5 * x.dot(p.H * x) + p.c.dot(x);
    sol.active_set.clear();
    for (int i = 0; i < iq; ++i) {
      if (active[i] < 0) {
        sol.eq_multipliers(-active[i] - 1) = u(i);
      } else {
        sol.ineq_multipliers(active[i]) = u(i);
        sol.active_set.push_back(active[i]);
      }
    }
    std::sort(sol.active_set.begin(), sol.active_set.end());
    return sol;
  };

  // Equalities first; their multipliers carry no sign restriction.
  for (int i = 0; i < me; ++i) {
    const Vector np = p.A_eq.row(i).transpose();
    compute_direction(np);
    const double s = np.dot(x) - p.b_eq(i);
    if (direction_is_zero()) {
      // Linearly dependent on constraints already active.
      if (std::abs(s) <= 1e-9 * (1.0 + std::abs(p.b_eq(i)) + np.norm() * x.norm())) continue;
      sol.certificate.push_back(-(i + 1));
      for (int k = 0; k < iq; ++k) sol.certificate.push_back(active[k]);
      return finish(QpStatus::Infeasible);
    }
    const double t2 = -s / z.dot(np);
    x += t2 * z;
    u(iq) = t2;
    if (iq > 0) u.head(iq) -= t2 * r.head(iq);
    f += 0.5 * t2 * t2 * z.dot(np);
    active[iq] = -(i + 1);
    if (!add_constraint(d, iq, r_norm)) {
      --iq;
      sol.certificate.push_back(-(i + 1));
      return finish(QpStatus::Infeasible);
    }
  }
  sol.dual_objective_trace.push_back(f);

  std::vector<char> is_active(mi, 0);
  auto slack = [&](int i) { return p.A_in.row(i).dot(x) - p.b_in(i); };
  auto feas_tol = [&](int i) {
    return 1e-12 * (1.0 + std::abs(p.b_in(i)) + p.A_in.row(i).norm() * x.norm());
  };

  int iterations = 0;
  while (true) {
    // Step 1: choose the most violated inequality (lowest index on ties).
    int p_idx = -1;
    double worst = 0.0;
    for (int i = 0; i < mi; ++i) {
      if (is_active[i]) continue;
      const double s = slack(i);
      if (s < -feas_tol(i) && (p_idx < 0 || s < worst)) {
        p_idx = i;
        worst = s;
      }
    }
    if (p_idx < 0) {
      sol.iterations = iterations;
      return finish(QpStatus::Optimal);
    }

    const Vector np = p.A_in.row(p_idx).transpose();
    double s_p = worst;
    u(iq) = 0.0;
    active[iq] = p_idx;

    // Step 2: move until constraint p becomes active.
    while (true) {
      if (++iterations > max_iterations) {
        sol.iterations = iterations;
        return finish(QpStatus::IterationLimit);
      }
      compute_direction(np);

      // Partial (dual) step: the first active inequality whose multiplier hits zero.
      double t1 = kInf;
      int l_pos = -1;
      for (int k = 0; k < iq; ++k) {
        if (active[k] < 0) continue;
        if (r(k) > 0.0) {
          const double ratio = u(k) / r(k);
          if (ratio < t1 || (ratio == t1 && l_pos >= 0 && active[k] < active[l_pos])) {
            t1 = ratio;
            l_pos = k;
          }
        }
      }
      // Full (primal) step.
      const bool zero_dir = direction_is_zero();
      const double t2 = zero_dir ? kInf : -s_p / z.dot(np);
      const double t = std::min(t1, t2);

      if (t == kInf) {
        sol.certificate.push_back(p_idx);
        for (int k = 0; k < iq; ++k) sol.certificate.push_back(active[k]);
        sol.iterations = iterations;
        return finish(QpStatus::Infeasible);
      }

      if (t2 == kInf) {
        // Dual step only.
        if (iq > 0) u.head(iq) -= t * r.head(iq);
        u(iq) += t;
        is_active[active[l_pos]] = 0;
        delete_constraint(active, u, iq, l_pos);
        active[iq] = p_idx;
        continue;
      }

      x += t * z;
      f += t * z.dot(np) * (0.5 * t + u(iq));
      if (iq > 0) u.head(iq) -= t * r.head(iq);
      u(iq) += t;
      sol.dual_objective_trace.push_back(f);

      if (t == t2) {
        if (!add_constraint(d, iq, r_norm)) {
          // Numerically dependent: treat as satisfied and move on.
          --iq;
          u(iq) = 0.0;
          is_active[p_idx] = 1;
        } else {
          is_active[p_idx] = 1;
        }
        break;
      }

      is_active[active[l_pos]] = 0;
      delete_constraint(active, u, iq, l_pos);
      active[iq] = p_idx;
      s_p = slack(p_idx);
    }
  }
}

QpSolution qp_solve(const QpProblem& p, int max_iterations) {
  QpSolver solver;
  QpSolution s = solver.solve(p, max_iterations);
  switch (s.status) {
    case QpStatus::Optimal:
      return s;
    case QpStatus::Infeasible:
      throw Infeasible("qp: constraints are inconsistent", s.certificate);
    case QpStatus::IterationLimit:
      throw IterationLimit("qp: iteration limit " + std::to_string(max_iterations) + " reached");
    case QpStatus::NotConvex:
      throw NotConvex("qp: Hessian is not symmetric positive definite");
  }
  return s;
}

}  // namespace wbdc
