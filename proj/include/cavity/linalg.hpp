#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cavity {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using SparseOperator = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

/// Raised when a requested Hilbert space exceeds a configured size cap.
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix-free hermitian operator: `apply(in, out)` overwrites `out` with H*in.
struct LinearOperator {
  Eigen::Index dim = 0;
  std::function<void(const CVector&, CVector&)> apply;

  CVector operator()(const CVector& v) const {
    CVector out(dim);
    apply(v, out);
    return out;
  }
};

LinearOperator as_operator(const SparseOperator& m);
LinearOperator as_operator(const CMatrix& m);

/// max_ij |A_ij - conj(A_ji)|
double hermiticity_defect(const CMatrix& m);
double hermiticity_defect(const SparseOperator& m);

/// Dense copy of a matrix-free operator, built column by column.
CMatrix to_dense(const LinearOperator& op);

}  // namespace cavity
