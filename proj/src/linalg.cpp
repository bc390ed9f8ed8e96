#include "cavity/linalg.hpp"

#include <algorithm>

namespace cavity {

LinearOperator as_operator(const SparseOperator& m) {
  return {m.rows(), [&m](const CVector& in, CVector& out) { out.noalias() = m * in; }};
}

LinearOperator as_operator(const CMatrix& m) {
  return {m.rows(), [&m](const CVector& in, CVector& out) { out.noalias() = m * in; }};
}

double hermiticity_defect(const CMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double hermiticity_defect(const SparseOperator& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  const SparseOperator diff = m - SparseOperator(m.adjoint());
  double worst = 0.0;
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(diff, k); it; ++it)
      worst = std::max(worst, std::abs(it.value()));
  return worst;
}

CMatrix to_dense(const LinearOperator& op) {
  CMatrix out(op.dim, op.dim);
  CVector e = CVector::Zero(op.dim);
  CVector col(op.dim);
  for (Eigen::Index j = 0; j < op.dim; ++j) {
    e(j) = 1.0;
    op.apply(e, col);
    out.col(j) = col;
    e(j) = 0.0;
  }
  return out;
}

}  // namespace cavity
