#pragma once

#include "cavity/linalg.hpp"

namespace cavity {

/// Partition functions of the cavity-spin problem, all returned as natural logs.

struct FullPartition {
  double log_Z = 0.0;
  int n_fock = 0;
  double top_occupation = 0.0;   // thermal weight of the highest Fock level kept
};

/// Z = Tr exp(-beta H) for the truncated full Hamiltonian. n_fock starts at
/// `n_fock_start` and doubles until the top Fock level holds less than
/// `occupation_tol` of the thermal weight.
FullPartition full_partition_function(const SparseOperator& H_S, const SparseOperator& O,
                                      double Omega, double beta, double occupation_tol = 1e-10,
                                      int n_fock_start = 8, int n_fock_max = 4096);

/// Zbar = Tr_S (1/pi) int d^2 alpha exp(-beta H(alpha)),
///   H(alpha) = H_S + Omega |alpha|^2 + (alpha + alpha^*) O.
/// The imaginary part of alpha integrates in closed form; the real part by adaptive
/// Gauss-Kronrod quadrature of the spin trace.
double log_coherent_partition_function(const SparseOperator& H_S, const SparseOperator& O,
                                       double Omega, double beta);

/// Tr_S exp(-beta H_eff) with H_eff = H_S - O^2/Omega.
double log_effective_trace(const SparseOperator& H_S, const SparseOperator& O, double Omega,
                           double beta);

/// log Tr exp(-beta H) of a dense hermitian matrix.
double log_trace_exp(const CMatrix& H, double beta);

}  // namespace cavity
