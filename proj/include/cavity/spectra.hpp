#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "cavity/linalg.hpp"

namespace cavity {

enum class SpectrumMethod { dense, lanczos };

/// Eigenpairs sorted by ascending eigenvalue.
struct Spectrum {
  RVector eigenvalues;
  CMatrix eigenvectors;          // one column per eigenvalue
  RVector residuals;             // ||H v - e v||
  std::vector<bool> converged;
  SpectrumMethod method = SpectrumMethod::dense;
  int krylov_dim = 0;
  Eigen::Index hilbert_dim = 0;
  int restarts = 0;              // lanczos only
  int passes = 0;                // lanczos only: seeded runs
  double gram_defect = 0.0;      // lanczos only: max |V^dag V - 1| over the final basis

  Eigen::Index size() const { return eigenvalues.size(); }
  bool complete() const { return size() == hilbert_dim; }
  bool all_converged() const;
};

inline constexpr Eigen::Index kDefaultDenseCap = 4096;

/// Full spectrum of a hermitian matrix. Rejects matrices whose hermiticity defect
/// exceeds 1e-10 relative to max(1, max|H_ij|).
Spectrum dense_eigh(const CMatrix& H, Eigen::Index max_dim = kDefaultDenseCap);
RVector dense_eigenvalues(const CMatrix& H, Eigen::Index max_dim = kDefaultDenseCap);

struct LanczosOptions {
  double tol = 1e-8;        // converged when ||Hv - ev|| <= tol * max(1, |e|)
  int max_restarts = 2000;
  int max_passes = 8;
  /// Applied to every Krylov vector, e.g. a symmetry-sector projector that commutes with H.
  std::function<void(CVector&)> projector;
};

/// Lowest `n_eigenpairs` eigenpairs by thick-restart Lanczos with full
/// reorthogonalization. Degenerate eigenvalues are recovered by repeated seeded
/// runs in the orthogonal complement of already locked vectors; the result is a
/// deterministic function of `seed`.
Spectrum lanczos(const LinearOperator& H, int n_eigenpairs, int krylov_dim, std::uint64_t seed,
                 const LanczosOptions& options = {});

/// Plain Lanczos tridiagonalization of H on the Krylov space of `start`,
/// orthogonal to the columns of `deflate`. Used for resolvent quadratures.
struct KrylovTridiagonal {
  RVector alpha;
  RVector beta;            // beta(i) couples basis vectors i and i+1
  double start_norm = 0.0;
  double gram_defect = 0.0;
};
KrylovTridiagonal krylov_tridiagonalize(const LinearOperator& H, const CVector& start,
                                        int krylov_dim, const CMatrix& deflate);

}  // namespace cavity
