#include "cavity/transmission.hpp"

#include <cmath>

#include "cavity/meanfield.hpp"
#include "cavity/phase.hpp"
#include "cavity/response.hpp"

namespace cavity {

Complex transverse_susceptibility(double omega, double omega_z, double Omega, double lambda_bar,
                                  double gamma, double sz0, double sx0) {
  // (omega + i gamma)^2 keeps Im chi >= 0 for omega > 0, so |t| <= 1
  const Complex w(omega, gamma);
  const double l2 = lambda_bar * lambda_bar;
  const double soft = 16.0 * l2 * l2 * sx0 * sx0 / (Omega * Omega);
  const Complex denom = w * w - omega_z * omega_z - soft;
  if (denom == Complex(0.0, 0.0))
    throw std::invalid_argument("transmission: susceptibility denominator vanishes");
  return omega_z * sz0 / denom;
}

Complex transmission_point(double omega, double omega_z, double Omega, double lambda_bar,
                           double kappa, double gamma, double sz0, double sx0) {
  if (!(kappa > 0.0)) throw std::invalid_argument("transmission: kappa must be > 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("transmission: gamma must be >= 0");
  Complex denom(omega - Omega, kappa);
  if (lambda_bar != 0.0)
    denom += 4.0 * lambda_bar * lambda_bar *
             transverse_susceptibility(omega, omega_z, Omega, lambda_bar, gamma, sz0, sx0);
  if (denom == Complex(0.0, 0.0))
    throw std::invalid_argument("transmission: denominator vanishes");
  return Complex(0.0, -kappa) / denom;
}

TransmissionGrid transmission_map(const std::vector<double>& omega_grid,
                                  const std::vector<double>& omega_z_grid, double kT,
                                  const CavitySpec& cavity, double kappa, double gamma,
                                  int threads) {
  validate(cavity);
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    if (!(omega_grid[i] > omega_grid[i - 1]))
      throw std::invalid_argument("transmission_map: omega grid must be increasing");
  for (std::size_t i = 1; i < omega_z_grid.size(); ++i)
    if (!(omega_z_grid[i] > omega_z_grid[i - 1]))
      throw std::invalid_argument("transmission_map: omega_z grid must be increasing");

  TransmissionGrid grid;
  grid.omega_grid = omega_grid;
  grid.omega_z_grid = omega_z_grid;
  grid.kT = kT;
  grid.kappa = kappa;
  grid.gamma = gamma;
  grid.cavity = cavity;
  const auto nz = static_cast<Eigen::Index>(omega_z_grid.size());
  const auto nw = static_cast<Eigen::Index>(omega_grid.size());
  grid.t.resize(nz, nw);
  grid.columns.resize(omega_z_grid.size());

  parallel_for(static_cast<int>(nz), threads, [&](int i) {
    const double wz = omega_z_grid[static_cast<std::size_t>(i)];
    MeanFieldProblem p;
    IsingChainModel spin;
    spin.omega_z = wz;
    p.model = spin;
    p.cavity = cavity;
    p.cavity.rho.reset();
    p.cavity.nu.reset();
    p.kT = kT;
    MeanFieldSolution sol = solve_selfconsistent(p);
    TransmissionColumn& col = grid.columns[static_cast<std::size_t>(i)];
    col.omega_z = wz;
    col.converged = sol.converged;
    if (!sol.converged) {
      const std::vector<double> zero{0.0};
      const CMatrix h = site_hamiltonian(p, zero).front();
      const SiteModel site = site_model(p);
      sol.m = zero;
      sol.m_uniform = 0.0;
      sol.sz = thermal_expectation(h, site.Sz, kT);
    }
    col.sz0 = 2.0 * sol.sz;
    col.sx0 = 2.0 * sol.m_uniform;
    col.ordered = std::abs(sol.m_uniform) > 1e-4 * 0.5;
    col.superradiant =
        cavity.lambda_bar > 0.0 &&
        cavity.lambda_bar >= dicke_critical_coupling(wz, cavity.Omega, 0.5, kT);
    for (Eigen::Index j = 0; j < nw; ++j)
      grid.t(i, j) = transmission_point(omega_grid[static_cast<std::size_t>(j)], wz, cavity.Omega,
                                        cavity.lambda_bar, kappa, gamma, col.sz0, col.sx0);
  });
  for (const auto& col : grid.columns)
    if (!col.converged)
      grid.warnings.push_back("omega_z = " + std::to_string(col.omega_z) +
                              ": mean field unconverged, m = 0 branch used");
  return grid;
}

std::vector<std::size_t> transmission_peaks(const CMatrix& t, Eigen::Index row,
                                            double min_height) {
  std::vector<std::size_t> out;
  const Eigen::Index n = t.cols();
  for (Eigen::Index j = 1; j + 1 < n; ++j) {
    const double a = std::abs(t(row, j));
    if (a > std::abs(t(row, j - 1)) && a >= std::abs(t(row, j + 1)) && a > min_height)
      out.push_back(static_cast<std::size_t>(j));
  }
  return out;
}

}  // namespace cavity
