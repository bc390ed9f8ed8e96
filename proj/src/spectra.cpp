#include "cavity/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace cavity {

bool Spectrum::all_converged() const {
  return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
}

namespace {

void check_dense_input(const CMatrix& H, Eigen::Index max_dim) {
  if (H.rows() != H.cols()) throw std::invalid_argument("dense_eigh: matrix is not square");
  if (H.rows() > max_dim) throw ResourceLimitError("dense_eigh: dimension exceeds dense cap");
  const double scale = std::max(1.0, H.size() ? H.cwiseAbs().maxCoeff() : 0.0);
  if (hermiticity_defect(H) > 1e-10 * scale)
    throw std::invalid_argument("dense_eigh: matrix is not hermitian");
}

bool is_real(const CMatrix& H) { return H.imag().cwiseAbs().maxCoeff() == 0.0; }

}  // namespace

Spectrum dense_eigh(const CMatrix& H, Eigen::Index max_dim) {
  check_dense_input(H, max_dim);
  Spectrum out;
  out.method = SpectrumMethod::dense;
  out.hilbert_dim = H.rows();
  if (H.rows() == 0) return out;
  if (is_real(H)) {
    Eigen::MatrixXd re = H.real();
    re = 0.5 * (re + re.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(re);
    out.eigenvalues = es.eigenvalues();
    out.eigenvectors = es.eigenvectors().cast<Complex>();
  } else {
    CMatrix sym = 0.5 * (H + H.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(sym);
    out.eigenvalues = es.eigenvalues();
    out.eigenvectors = es.eigenvectors();
  }
  const CMatrix r = H * out.eigenvectors - out.eigenvectors * out.eigenvalues.asDiagonal();
  out.residuals = r.colwise().norm().transpose();
  out.converged.assign(static_cast<std::size_t>(H.rows()), true);
  return out;
}

RVector dense_eigenvalues(const CMatrix& H, Eigen::Index max_dim) {
  check_dense_input(H, max_dim);
  if (H.rows() == 0) return {};
  if (is_real(H)) {
    Eigen::MatrixXd re = H.real();
    re = 0.5 * (re + re.transpose()).eval();
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(re, Eigen::EigenvaluesOnly).eigenvalues();
  }
  CMatrix sym = 0.5 * (H + H.adjoint());
  return Eigen::SelfAdjointEigenSolver<CMatrix>(sym, Eigen::EigenvaluesOnly).eigenvalues();
}

namespace {

// Two rounds of classical Gram-Schmidt (DGKS) against the given columns.
// Returns the accumulated projection coefficients.
CVector orthogonalize(CVector& w, const CMatrix& basis, Eigen::Index ncols) {
  CVector coeffs = CVector::Zero(ncols);
  if (ncols == 0) return coeffs;
  for (int pass = 0; pass < 2; ++pass) {
    const CVector h = basis.leftCols(ncols).adjoint() * w;
    w.noalias() -= basis.leftCols(ncols) * h;
    coeffs += h;
  }
  return coeffs;
}

CVector random_vector(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = Complex(normal(rng), normal(rng));
  return v;
}

struct RitzResult {
  RVector values;
  CMatrix vectors;
  std::vector<bool> converged;
  int restarts = 0;
  double gram_defect = 0.0;
};

class KrylovSchur {
 public:
  KrylovSchur(const LinearOperator& op, const CMatrix& locked, const LanczosOptions& opts,
              std::mt19937_64& rng)
      : op_(op), locked_(locked), opts_(opts), rng_(rng) {}

  RitzResult run(int nev, int m) {
    const Eigen::Index dim = op_.dim;
    const Eigen::Index free_dim = dim - locked_.cols();
    m = static_cast<int>(std::min<Eigen::Index>(m, free_dim));
    nev = std::min(nev, m);
    RitzResult result;
    if (nev <= 0) return result;

    CMatrix V = CMatrix::Zero(dim, m + 1);
    CMatrix Hbar = CMatrix::Zero(m + 1, m);
    bool have_next = fresh_vector(V, 0);
    int k = 0;
    int restarts = 0;
    Eigen::Index ncols_valid = have_next ? 1 : 0;

    RVector theta;
    Eigen::MatrixXcd Y;
    int width = m;
    while (true) {
      int j = k;
      for (; j < m && have_next; ++j) {
        CVector w(dim);
        op_.apply(V.col(j), w);
        if (opts_.projector) opts_.projector(w);
        orthogonalize_locked(w);
        const CVector h = orthogonalize(w, V, j + 1);
        Hbar.col(j).head(j + 1) = h;
        const double beta = w.norm();
        const double scale = std::max(1.0, Hbar.col(j).head(j + 1).cwiseAbs().maxCoeff());
        if (beta > 1e-12 * scale) {
          Hbar(j + 1, j) = beta;
          V.col(j + 1) = w / beta;
          ncols_valid = j + 2;
        } else {
          // invariant subspace reached: continue with a fresh seeded direction
          Hbar(j + 1, j) = 0.0;
          have_next = fresh_vector(V, j + 1);
          ncols_valid = have_next ? j + 2 : j + 1;
        }
      }
      width = j;
      CMatrix Hm = Hbar.topLeftCorner(width, width);
      Hm = (0.5 * (Hm + Hm.adjoint())).eval();
      Eigen::SelfAdjointEigenSolver<CMatrix> es(Hm);
      theta = es.eigenvalues();
      Y = es.eigenvectors();

      const double beta_m = width < m + 1 ? std::abs(Hbar(width, width - 1)) : 0.0;
      const int want = std::min(nev, width);
      int n_conv = 0;
      for (int i = 0; i < want; ++i) {
        const double res = beta_m * std::abs(Y(width - 1, i));
        if (res <= opts_.tol * std::max(1.0, std::abs(theta(i)))) ++n_conv;
      }
      if (n_conv == want || !have_next || width < m || restarts >= opts_.max_restarts) break;

      // thick restart: keep the lowest `keep` Ritz vectors plus the residual direction
      const int keep = std::min(m - 1, nev + std::max(1, (m - nev) / 2));
      CMatrix kept = V.leftCols(width) * Y.leftCols(keep);
      CVector next = V.col(width);
      const Complex beta_last = Hbar(width, width - 1);
      V.setZero();
      V.leftCols(keep) = kept;
      V.col(keep) = next;
      Hbar.setZero();
      for (int i = 0; i < keep; ++i) {
        Hbar(i, i) = theta(i);
        Hbar(keep, i) = beta_last * Y(width - 1, i);
      }
      k = keep;
      ncols_valid = keep + 1;
      ++restarts;
    }

    const int want = std::min(nev, width);
    result.values = theta.head(want);
    result.vectors = V.leftCols(width) * Y.leftCols(want);
    result.restarts = restarts;
    const CMatrix gram = V.leftCols(ncols_valid).adjoint() * V.leftCols(ncols_valid);
    result.gram_defect =
        (gram - CMatrix::Identity(ncols_valid, ncols_valid)).cwiseAbs().maxCoeff();
    return result;
  }

 private:
  void orthogonalize_locked(CVector& w) const { orthogonalize(w, locked_, locked_.cols()); }

  bool fresh_vector(CMatrix& V, int col) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      CVector v = random_vector(op_.dim, rng_);
      if (opts_.projector) opts_.projector(v);
      orthogonalize_locked(v);
      orthogonalize(v, V, col);
      const double nrm = v.norm();
      if (nrm > 1e-8) {
        V.col(col) = v / nrm;
        return true;
      }
    }
    return false;
  }

  const LinearOperator& op_;
  const CMatrix& locked_;
  const LanczosOptions& opts_;
  std::mt19937_64& rng_;
};

double residual_norm(const LinearOperator& op, const CVector& v, double e) {
  CVector hv(op.dim);
  op.apply(v, hv);
  return (hv - e * v).norm();
}

}  // namespace

Spectrum lanczos(const LinearOperator& H, int n_eigenpairs, int krylov_dim, std::uint64_t seed,
                 const LanczosOptions& options) {
  if (n_eigenpairs < 1) throw std::invalid_argument("lanczos: n_eigenpairs must be >= 1");
  if (krylov_dim < n_eigenpairs)
    throw std::invalid_argument("lanczos: krylov_dim must be >= n_eigenpairs");
  if (H.dim < 1 || !H.apply) throw std::invalid_argument("lanczos: empty operator");

  std::mt19937_64 rng(seed);
  const Eigen::Index dim = H.dim;
  CMatrix locked(dim, 0);
  RVector locked_values;
  Spectrum out;
  out.method = SpectrumMethod::lanczos;
  out.krylov_dim = krylov_dim;
  out.hilbert_dim = dim;

  RVector previous;
  for (int pass = 0; pass < options.max_passes; ++pass) {
    if (locked.cols() >= dim) break;
    KrylovSchur solver(H, locked, options, rng);
    RitzResult found = solver.run(n_eigenpairs, krylov_dim);
    out.restarts += found.restarts;
    out.gram_defect = std::max(out.gram_defect, found.gram_defect);
    ++out.passes;
    if (found.values.size() == 0) break;

    // merge and keep the lowest n_eigenpairs
    const Eigen::Index total = locked.cols() + found.values.size();
    RVector values(total);
    values << locked_values, found.values;
    CMatrix vectors(dim, total);
    vectors << locked, found.vectors;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return values(a) < values(b); });
    const Eigen::Index keep = std::min<Eigen::Index>(n_eigenpairs, total);
    locked_values.resize(keep);
    locked.resize(dim, keep);
    for (Eigen::Index i = 0; i < keep; ++i) {
      locked_values(i) = values(order[static_cast<std::size_t>(i)]);
      locked.col(i) = vectors.col(order[static_cast<std::size_t>(i)]);
    }

    const bool unchanged =
        previous.size() == locked_values.size() &&
        ((previous - locked_values).cwiseAbs().array() <=
         options.tol * locked_values.cwiseAbs().cwiseMax(1.0).array())
            .all();
    // at least two seeded passes, then stop once a pass finds nothing new below the top
    if (pass >= 1 && unchanged) break;
    previous = locked_values;
  }

  out.eigenvalues = locked_values;
  out.eigenvectors = locked;
  out.residuals.resize(locked_values.size());
  out.converged.resize(static_cast<std::size_t>(locked_values.size()));
  for (Eigen::Index i = 0; i < locked_values.size(); ++i) {
    out.residuals(i) = residual_norm(H, locked.col(i), locked_values(i));
    out.converged[static_cast<std::size_t>(i)] =
        out.residuals(i) <= options.tol * std::max(1.0, std::abs(locked_values(i)));
  }
  return out;
}

KrylovTridiagonal krylov_tridiagonalize(const LinearOperator& H, const CVector& start,
                                        int krylov_dim, const CMatrix& deflate) {
  KrylovTridiagonal out;
  CVector v = start;
  orthogonalize(v, deflate, deflate.cols());
  out.start_norm = v.norm();
  if (out.start_norm == 0.0 || krylov_dim < 1) return out;

  const Eigen::Index dim = H.dim;
  const int m = static_cast<int>(std::min<Eigen::Index>(krylov_dim, dim - deflate.cols()));
  CMatrix V = CMatrix::Zero(dim, m);
  V.col(0) = v / out.start_norm;
  std::vector<double> alpha, beta;
  int used = 0;
  for (int j = 0; j < m; ++j) {
    CVector w(dim);
    H.apply(V.col(j), w);
    orthogonalize(w, deflate, deflate.cols());
    const CVector h = orthogonalize(w, V, j + 1);
    alpha.push_back(h(j).real());
    used = j + 1;
    const double b = w.norm();
    const double scale = std::max(1.0, std::abs(alpha.back()));
    if (j + 1 == m || b <= 1e-12 * scale) break;
    beta.push_back(b);
    V.col(j + 1) = w / b;
  }
  out.alpha = Eigen::Map<RVector>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
  out.beta = Eigen::Map<RVector>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  const CMatrix gram = V.leftCols(used).adjoint() * V.leftCols(used);
  out.gram_defect = (gram - CMatrix::Identity(used, used)).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace cavity
