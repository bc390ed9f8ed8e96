#include "cavity/response.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cavity {

ResponseResult make_response_result(double R, double kT, double Omega, bool truncated) {
  ResponseResult r;
  r.R = R;
  r.kT = kT;
  r.margin = std::abs(R) / (0.5 * Omega);
  r.superradiant = r.margin >= 1.0;
  r.truncation_warning = truncated;
  return r;
}

namespace {

CMatrix matrix_elements(const Spectrum& spectrum, const LinearOperator& O) {
  const Eigen::Index k = spectrum.size();
  CMatrix ov(O.dim, k);
  CVector tmp(O.dim);
  for (Eigen::Index j = 0; j < k; ++j) {
    O.apply(spectrum.eigenvectors.col(j), tmp);
    ov.col(j) = tmp;
  }
  return spectrum.eigenvectors.adjoint() * ov;
}

double ground_manifold_tolerance(const RVector& e) {
  const double scale = std::max(1.0, e.cwiseAbs().maxCoeff());
  return 1e-10 * scale;
}

}  // namespace

ResponseResult static_response(const Spectrum& spectrum, const LinearOperator& O, double kT,
                               double Omega) {
  if (!(kT >= 0.0)) throw std::invalid_argument("static_response: temperature must be >= 0");
  if (!(Omega > 0.0)) throw std::invalid_argument("static_response: Omega must be > 0");
  const Eigen::Index k = spectrum.size();
  if (k == 0 || spectrum.eigenvectors.cols() != k || spectrum.eigenvectors.rows() != O.dim)
    throw std::invalid_argument("static_response: spectrum has no matching eigenvectors");

  const RVector& e = spectrum.eigenvalues;
  const CMatrix elems = matrix_elements(spectrum, O);
  const RVector shifted = e.array() - e(0);

  if (kT == 0.0) {
    const double tol = ground_manifold_tolerance(e);
    Eigen::Index g = 1;
    while (g < k && shifted(g) <= tol) ++g;
    double sum = 0.0;
    double within = 0.0;
    for (Eigen::Index a = 0; a < g; ++a) {
      for (Eigen::Index b = 0; b < g; ++b) within += std::norm(elems(b, a));
      for (Eigen::Index n = g; n < k; ++n) sum += 2.0 * std::norm(elems(n, a)) / shifted(n);
    }
    const double scale = std::max(1.0, elems.cwiseAbs2().maxCoeff());
    // a matrix element inside the ground manifold carries the beta -> infinity limit
    const double R = within > 1e-24 * scale ? -std::numeric_limits<double>::infinity()
                                            : -sum / static_cast<double>(g);
    return make_response_result(R, kT, Omega, false);
  }

  const double beta = 1.0 / kT;
  const RVector w = (-beta * shifted.array()).exp();
  const double Z = w.sum();
  double sum = 0.0;
  for (Eigen::Index m = 0; m < k; ++m) {
    for (Eigen::Index n = 0; n < k; ++n) {
      const double weight = std::norm(elems(m, n));
      if (weight == 0.0) continue;
      const double delta = shifted(m) - shifted(n);
      const double x = beta * delta;
      double f;
      if (x == 0.0) {
        f = w(m) * beta;
      } else if (std::abs(x) < 1.0) {
        f = w(m) * beta * (std::expm1(x) / x);
      } else {
        f = (w(n) - w(m)) / delta;
      }
      sum += weight * f;
    }
  }
  bool truncated = false;
  if (!spectrum.complete()) truncated = w(k - 1) > 1e-12;
  return make_response_result(-sum / Z, kT, Omega, truncated);
}

ResponseResult static_response(const Spectrum& spectrum, const SparseOperator& O, double kT,
                               double Omega) {
  return static_response(spectrum, as_operator(O), kT, Omega);
}

KrylovResponse krylov_zero_temperature_response(const LinearOperator& H, const LinearOperator& O,
                                                double Omega, int krylov_dim, std::uint64_t seed,
                                                const LanczosOptions& options) {
  if (H.dim != O.dim) throw std::invalid_argument("krylov response: dimension mismatch");
  KrylovResponse out;
  const int n_pairs = static_cast<int>(std::min<Eigen::Index>(2, H.dim));
  out.ground = lanczos(H, n_pairs, std::max(krylov_dim, n_pairs), seed, options);
  const RVector& e = out.ground.eigenvalues;
  const double tol = ground_manifold_tolerance(e);
  Eigen::Index g = 1;
  while (g < e.size() && e(g) - e(0) <= tol) ++g;
  out.ground_degeneracy = static_cast<int>(g);
  const CMatrix ground = out.ground.eigenvectors.leftCols(g);

  double sum = 0.0;
  bool divergent = false;
  for (Eigen::Index a = 0; a < g; ++a) {
    const CVector phi = O(ground.col(a));
    const CVector inside = ground.adjoint() * phi;
    if (inside.squaredNorm() > 1e-24 * std::max(1.0, phi.squaredNorm())) divergent = true;
    const KrylovTridiagonal tri = krylov_tridiagonalize(H, phi, krylov_dim, ground);
    out.gram_defect = std::max(out.gram_defect, tri.gram_defect);
    if (tri.start_norm == 0.0) continue;
    const Eigen::Index m = tri.alpha.size();
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    T.diagonal() = tri.alpha;
    for (Eigen::Index i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = tri.beta(i);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double gap = es.eigenvalues()(i) - e(0);
      const double weight = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
      if (gap <= 0.0) {
        divergent = true;
        continue;
      }
      sum += 2.0 * tri.start_norm * tri.start_norm * weight / gap;
    }
  }
  const double R = divergent ? -std::numeric_limits<double>::infinity()
                             : -sum / static_cast<double>(g);
  out.response = make_response_result(R, 0.0, Omega, false);
  return out;
}

double dicke_bracket(double beta_omega_z, double S) {
  const double x = 0.5 * beta_omega_z;
  const double n = 2.0 * S + 1.0;
  if (std::isinf(x)) return 2.0 * S;
  if (n * x < 1e-3) {
    // coth y = 1/y + y/3 - y^3/45 + ...
    return x / 3.0 * (n * n - 1.0) - x * x * x / 45.0 * (n * n * n * n - 1.0);
  }
  auto coth = [](double y) { return 1.0 / std::tanh(y); };
  return n * coth(n * x) - coth(x);
}

double dicke_critical_coupling(double omega_z, double Omega, double S, double kT) {
  if (!(omega_z > 0.0) || !(Omega > 0.0))
    throw std::invalid_argument("dicke_critical_coupling: omega_z and Omega must be > 0");
  if (!(kT >= 0.0)) throw std::invalid_argument("dicke_critical_coupling: T must be >= 0");
  if (!(S > 0.0)) throw std::invalid_argument("dicke_critical_coupling: S must be > 0");
  const double bracket =
      kT == 0.0 ? 2.0 * S : dicke_bracket(omega_z / kT, S);
  return std::sqrt(omega_z * Omega / (4.0 * bracket));
}

double dicke_zero_field_critical_temperature(double Omega, double S, double lambda_bar) {
  return 8.0 * S * (S + 1.0) * lambda_bar * lambda_bar / (3.0 * Omega);
}

std::optional<double> dicke_critical_omega_z(double Omega, double S, double lambda_bar,
                                             double kT) {
  if (!(lambda_bar > 0.0)) return std::nullopt;
  if (kT > 0.0 && kT >= dicke_zero_field_critical_temperature(Omega, S, lambda_bar))
    return std::nullopt;
  // lambda_c grows monotonically with omega_z; bracket the crossing and bisect
  auto excess = [&](double wz) { return dicke_critical_coupling(wz, Omega, S, kT) - lambda_bar; };
  double lo = 0.0;
  double hi = std::max(Omega, 1e-300);
  while (excess(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= 0.0 || excess(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double lambda_bar_from_material(double rho, double nu, double Omega, const PhysicalConstants& c) {
  if (!(rho > 0.0)) throw std::invalid_argument("lambda_bar_from_material: rho must be > 0");
  if (!(nu >= 0.0 && nu <= 1.0))
    throw std::invalid_argument("lambda_bar_from_material: nu must lie in [0, 1]");
  if (!(Omega > 0.0)) throw std::invalid_argument("lambda_bar_from_material: Omega must be > 0");
  return std::sqrt(c.g_e * c.g_e * c.mu_B * c.mu_B * c.mu_0 * rho * nu * Omega / (8.0 * c.hbar));
}

RmsReduction rms_reduce(const std::vector<double>& site_couplings) {
  if (site_couplings.empty()) throw std::invalid_argument("rms_reduce: empty coupling list");
  double sum = 0.0, sum_sq = 0.0;
  for (double l : site_couplings) {
    if (!(l >= 0.0)) throw std::invalid_argument("rms_reduce: couplings must be >= 0");
    sum += l;
    sum_sq += l * l;
  }
  const double n = static_cast<double>(site_couplings.size());
  const double mean = sum / n;
  const double mean_sq = sum_sq / n;
  return {std::sqrt(mean_sq), std::max(0.0, mean_sq - mean * mean)};
}

}  // namespace cavity
