#pragma once

#include <vector>

#include "wbdc/constraints.hpp"
#include "wbdc/linalg.hpp"

namespace wbdc {

/// min 1/2 x^T H x + c^T x  s.t.  A_eq x = b_eq,  A_in x >= b_in
struct QpProblem {
  Matrix H;
  Vector c;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_in;
  Vector b_in;

  int num_variables() const { return static_cast<int>(H.rows()); }
};

enum class QpStatus { Optimal, Infeasible, IterationLimit, NotConvex };

struct QpSolution {
  QpStatus status = QpStatus::Optimal;
  Vector x;
  std::vector<int> active_set;     // tight inequality indices, ascending
  Vector eq_multipliers;           // y: H x + c = A_eq^T y + A_in^T lambda
  Vector ineq_multipliers;         // lambda >= 0, zero off the active set
  double objective = 0.0;
  int iterations = 0;
  std::vector<int> certificate;    // on Infeasible: see wbdc::Infeasible
  std::vector<double> dual_objective_trace;  // objective after each primal step
};

/// Goldfarb-Idnani dual active-set method for strictly convex QPs.
///
/// The solver owns its factorization workspace; one solve at a time per
/// instance. Violated constraints enter in order of largest violation, ties
/// going to the lowest index, so results are deterministic.
class QpSolver {
 public:
  QpSolution solve(const QpProblem& p, int max_iterations = 1000);

 private:
  bool add_constraint(Vector& d, int& iq, double& r_norm);
  void delete_constraint(std::vector<int>& active, Vector& u, int& iq, int l_pos);

  Matrix J_;  // L^-T Q
  Matrix R_;  // upper triangular
};

/// Throwing wrapper: Infeasible, IterationLimit, NotConvex.
QpSolution qp_solve(const QpProblem& p, int max_iterations = 1000);

void validate(const QpProblem& p);

// ---------------------------------------------------------------------------
// Reaction-force QP

/// Everything the reaction-force QP needs from one control cycle.
struct WbdcQpInputs {
  Matrix A;                   // mass matrix
  Vector b_plus_g;            // N_int^T (b + g)
  Matrix contact_jacobian;    // J_c (projected by N_int: J_c N_int)
  Vector qddot_base;          // first-task acceleration with delta = 0
  Matrix delta_map;           // d qddot_1 / d delta = (J_1 N_c|int)-bar
  int floating_dof = 6;
};

/// Layout of the decision vector x = [F_r; delta].
struct WbdcQpLayout {
  int num_force = 0;
  int num_delta = 0;
};

/// Builds min F^T Q1 F + delta^T Q2 delta subject to the floating-base rows of
/// the projected dynamics (with qddot_1 affine in delta substituted in) and
/// the augmented contact cone.
QpProblem build_wbdc_qp(const WbdcQpInputs& in, const ConeMatrix& cone, const Vector& q1_weight,
                        const Vector& q2_weight);

/// Same problem with delta pinned to zero (decision vector F_r only).
QpProblem build_unrelaxed_qp(const WbdcQpInputs& in, const ConeMatrix& cone,
                             const Vector& q1_weight);

}  // namespace wbdc
