#include "cavity/spin.hpp"

#include <cmath>

namespace cavity {

SpinOperatorSet spin_matrices(double S) {
  const double twice = 2.0 * S;
  if (!std::isfinite(S) || S < 0.0 || std::abs(twice - std::round(twice)) > 1e-12) {
    throw std::invalid_argument("spin_matrices: S must be a non-negative half-integer");
  }
  const auto dim = static_cast<Eigen::Index>(std::lround(twice)) + 1;

  SpinOperatorSet ops;
  ops.S = std::round(twice) / 2.0;
  ops.dim = dim;
  ops.Sz = CMatrix::Zero(dim, dim);
  ops.Splus = CMatrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double m = ops.S - static_cast<double>(i);
    ops.Sz(i, i) = m;
    // <m+1| S+ |m> = sqrt(S(S+1) - m(m+1)); |m+1> sits at row i-1
    if (i > 0) ops.Splus(i - 1, i) = std::sqrt(ops.S * (ops.S + 1.0) - m * (m + 1.0));
  }
  ops.Sminus = ops.Splus.adjoint();
  ops.Sx = 0.5 * (ops.Splus + ops.Sminus);
  ops.Sy = Complex(0.0, -0.5) * (ops.Splus - ops.Sminus);
  return ops;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace cavity
