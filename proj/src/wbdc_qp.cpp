#include <string>

#include "wbdc/errors.hpp"
#include "wbdc/qp.hpp"

namespace wbdc {
namespace {

void check_inputs(const WbdcQpInputs& in, const ConeMatrix& cone, const Vector& q1) {
  const auto n = in.A.rows();
  if (in.A.cols() != n || in.b_plus_g.size() != n || in.qddot_base.size() != n)
    throw AssemblyError("wbdc qp: dynamics terms have inconsistent dimensions");
  if (in.floating_dof < 0 || in.floating_dof > n)
    throw AssemblyError("wbdc qp: floating dof out of range");
  if (in.contact_jacobian.rows() > 0 && in.contact_jacobian.cols() != n)
    throw AssemblyError("wbdc qp: contact Jacobian has " +
                        std::to_string(in.contact_jacobian.cols()) + " columns, expected " +
                        std::to_string(n));
  if (in.delta_map.rows() != n)
    throw AssemblyError("wbdc qp: relaxation map must have one row per generalized velocity");
  const auto nf = in.contact_jacobian.rows();
  if (cone.W.cols() != nf || cone.offset.size() != cone.W.rows())
    throw AssemblyError("wbdc qp: cone matrix does not match the reaction force dimension");
  if (q1.size() != nf) throw AssemblyError("wbdc qp: Q1 weight has the wrong dimension");
  if (nf > 0 && q1.minCoeff() <= 0.0) throw AssemblyError("wbdc qp: Q1 weights must be positive");
}

}  // namespace

QpProblem build_wbdc_qp(const WbdcQpInputs& in, const ConeMatrix& cone, const Vector& q1_weight,
                        const Vector& q2_weight) {
  check_inputs(in, cone, q1_weight);
  const int nd = static_cast<int>(in.delta_map.cols());
  if (q2_weight.size() != nd) throw AssemblyError("wbdc qp: Q2 weight has the wrong dimension");
  if (nd > 0 && q2_weight.minCoeff() <= 0.0)
    throw AssemblyError("wbdc qp: Q2 weights must be positive");

  const int nf = static_cast<int>(in.contact_jacobian.rows());
  const int fb = in.floating_dof;
  const int nx = nf + nd;

  QpProblem p;
  p.H = Matrix::Zero(nx, nx);
  p.H.diagonal() << 2.0 * q1_weight, 2.0 * q2_weight;
  p.c = Vector::Zero(nx);

  // S_f (A (qdd_base + D delta) + b + g) = S_f J_c^T F
  p.A_eq.resize(fb, nx);
  p.A_eq.leftCols(nf) = -in.contact_jacobian.leftCols(fb).transpose();
  p.A_eq.rightCols(nd) = in.A.topRows(fb) * in.delta_map;
  p.b_eq = -(in.A.topRows(fb) * in.qddot_base + in.b_plus_g.head(fb));

  p.A_in = Matrix::Zero(cone.rows(), nx);
  p.A_in.leftCols(nf) = cone.W;
  p.b_in = cone.offset;
  return p;
}

QpProblem build_unrelaxed_qp(const WbdcQpInputs& in, const ConeMatrix& cone,
                             const Vector& q1_weight) {
  check_inputs(in, cone, q1_weight);
  const int nf = static_cast<int>(in.contact_jacobian.rows());
  const int fb = in.floating_dof;

  QpProblem p;
  p.H = Matrix::Zero(nf, nf);
  p.H.diagonal() = 2.0 * q1_weight;
  p.c = Vector::Zero(nf);
  p.A_eq = -in.contact_jacobian.leftCols(fb).transpose();
  p.b_eq = -(in.A.topRows(fb) * in.qddot_base + in.b_plus_g.head(fb));
  p.A_in = cone.W;
  p.b_in = cone.offset;
  return p;
}

}  // namespace wbdc
