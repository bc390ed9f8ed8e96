#include "cavity/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cavity/models.hpp"
#include "cavity/spectra.hpp"

namespace cavity {

namespace {

double log_sum_exp(const RVector& energies, double beta) {
  const double e0 = energies.minCoeff();
  return -beta * e0 + std::log((-beta * (energies.array() - e0)).exp().sum());
}

// Index sets of the connected components of the sparsity graph of H.
std::vector<std::vector<Eigen::Index>> connected_blocks(const SparseOperator& H) {
  const Eigen::Index n = H.rows();
  std::vector<Eigen::Index> label(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<Eigen::Index>> blocks;
  for (Eigen::Index seed = 0; seed < n; ++seed) {
    if (label[seed] >= 0) continue;
    const auto id = static_cast<Eigen::Index>(blocks.size());
    std::vector<Eigen::Index> members{seed};
    label[seed] = id;
    for (std::size_t k = 0; k < members.size(); ++k)
      for (SparseOperator::InnerIterator it(H, members[k]); it; ++it)
        if (it.value() != Complex(0.0) && label[it.col()] < 0) {
          label[it.col()] = id;
          members.push_back(it.col());
        }
    std::sort(members.begin(), members.end());
    blocks.push_back(std::move(members));
  }
  return blocks;
}

}  // namespace

double log_trace_exp(const CMatrix& H, double beta) {
  return log_sum_exp(dense_eigenvalues(H, H.rows()), beta);
}

FullPartition full_partition_function(const SparseOperator& H_S, const SparseOperator& O,
                                      double Omega, double beta, double occupation_tol,
                                      int n_fock_start, int n_fock_max) {
  if (!(beta > 0.0)) throw std::invalid_argument("partition: beta must be > 0");
  FullPartition out;
  // a free mode needs n with exp(-beta Omega n) ~ tol; start from there
  int n_fock = std::max(1, n_fock_start);
  const double free_need = -std::log(occupation_tol) / (beta * Omega);
  while (n_fock < free_need && 2 * n_fock <= n_fock_max) n_fock *= 2;
  for (; n_fock <= n_fock_max; n_fock *= 2) {
    const SparseOperator H = build_full_hamiltonian(H_S, O, Omega, n_fock);
    const Eigen::Index dim = H.rows();
    RVector e(dim);
    RVector top_amp(dim);  // |<top Fock level|eigenvector>|^2 summed over spin states
    Eigen::Index filled = 0;
    const Eigen::Index nb = n_fock + 1;
    for (const auto& block : connected_blocks(H)) {
      const auto nblk = static_cast<Eigen::Index>(block.size());
      CMatrix sub(nblk, nblk);
      for (Eigen::Index i = 0; i < nblk; ++i)
        for (Eigen::Index j = 0; j < nblk; ++j) sub(i, j) = H.coeff(block[i], block[j]);
      Eigen::MatrixXd amp2;
      if (sub.imag().cwiseAbs().maxCoeff() == 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub.real());
        e.segment(filled, nblk) = es.eigenvalues();
        amp2 = es.eigenvectors().cwiseAbs2();
      } else {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(sub);
        e.segment(filled, nblk) = es.eigenvalues();
        amp2 = es.eigenvectors().cwiseAbs2();
      }
      RVector t = RVector::Zero(nblk);
      for (Eigen::Index i = 0; i < nblk; ++i)
        if (block[i] % nb == n_fock) t += amp2.row(i).transpose();
      top_amp.segment(filled, nblk) = t;
      filled += nblk;
    }
    const double e0 = e.minCoeff();
    const RVector w = (-beta * (e.array() - e0)).exp();
    out.top_occupation = top_amp.dot(w) / w.sum();
    out.log_Z = -beta * e0 + std::log(w.sum());
    out.n_fock = n_fock;
    if (out.top_occupation < occupation_tol) return out;
  }
  throw ResourceLimitError("partition: Fock truncation did not converge below n_fock_max");
}

double log_effective_trace(const SparseOperator& H_S, const SparseOperator& O, double Omega,
                           double beta) {
  return log_trace_exp(CMatrix(effective_hamiltonian_matrix(H_S, O, Omega)), beta);
}

double log_coherent_partition_function(const SparseOperator& H_S, const SparseOperator& O,
                                       double Omega, double beta) {
  if (!(beta > 0.0) || !(Omega > 0.0))
    throw std::invalid_argument("partition: beta and Omega must be > 0");
  const CMatrix hs = CMatrix(H_S);
  const CMatrix o = CMatrix(O);
  // H(x) >= H_S - O^2/Omega for every real x, so this reference keeps the integrand bounded
  const double reference = dense_eigenvalues(hs - o * o / Omega, hs.rows()).minCoeff();
  const RVector o_spec = dense_eigenvalues(o, o.rows());
  const double o_norm = o_spec.cwiseAbs().maxCoeff();

  auto integrand = [&](double x) {
    const RVector e = dense_eigenvalues(hs + 2.0 * x * o, hs.rows());
    return (-beta * (e.array() + Omega * x * x - reference)).exp().sum();
  };
  const double width = 1.0 / std::sqrt(beta * Omega);
  const double centre = o_norm / Omega;
  const double reach = centre + 12.0 * width;
  // split at the displaced Gaussian centres so each panel is smooth and single-peaked
  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  double total = 0.0;
  const double cuts[] = {-reach, -centre, 0.0, centre, reach};
  for (int i = 0; i + 1 < 5; ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    total += Quad::integrate(integrand, cuts[i], cuts[i + 1], 15, 1e-13);
  }
  // (1/pi) * int dy exp(-beta Omega y^2) = 1/sqrt(pi beta Omega)
  return -beta * reference + std::log(total) - 0.5 * std::log(std::numbers::pi * beta * Omega);
}

}  // namespace cavity
