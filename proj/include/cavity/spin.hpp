#pragma once

#include "cavity/linalg.hpp"

namespace cavity {

/// Dense spin-S matrices in the |S, m> basis ordered m = S, S-1, ..., -S.
struct SpinOperatorSet {
  double S = 0.5;
  Eigen::Index dim = 2;
  CMatrix Sx, Sy, Sz, Splus, Sminus;
};

/// Throws std::invalid_argument unless 2S is a non-negative integer.
SpinOperatorSet spin_matrices(double S);

/// Kronecker product a (x) b.
CMatrix kron(const CMatrix& a, const CMatrix& b);

}  // namespace cavity
