#pragma once

#include <string>
#include <vector>

#include "cavity/linalg.hpp"
#include "cavity/models.hpp"

namespace cavity {

/// Probe transmission through the cavity loaded by a spin-1/2 ensemble,
///   t = -i kappa / [ (omega - Omega) + i kappa + 4 lambda^2 chi(omega) ],
///   chi(omega) = omega_z sz0 / [ (omega + i gamma)^2 - omega_z^2 - 16 lambda^4 sx0^2 / Omega^2 ],
/// with sz0, sx0 the equilibrium Pauli expectations per spin.
Complex transmission_point(double omega, double omega_z, double Omega, double lambda_bar,
                           double kappa, double gamma, double sz0, double sx0);

Complex transverse_susceptibility(double omega, double omega_z, double Omega, double lambda_bar,
                                  double gamma, double sz0, double sx0);

struct TransmissionColumn {
  double omega_z = 0.0;
  double sz0 = 0.0;          // <sigma_z>
  double sx0 = 0.0;          // <sigma_x>
  bool superradiant = false; // lambda_bar >= lambda_c(omega_z, T) of the spin-1/2 Dicke model
  bool ordered = false;      // mean-field order parameter above threshold
  bool converged = true;
};

struct TransmissionGrid {
  std::vector<double> omega_grid;
  std::vector<double> omega_z_grid;
  double kT = 0.0;
  double kappa = 0.0;
  double gamma = 0.0;
  CavitySpec cavity;
  CMatrix t;                 // rows: omega_z, columns: omega
  std::vector<TransmissionColumn> columns;
  std::vector<std::string> warnings;
};

/// For every omega_z solves the spin-1/2 Dicke mean field at temperature kT and fills
/// the transmission row. Unconverged columns fall back to the m = 0 branch.
TransmissionGrid transmission_map(const std::vector<double>& omega_grid,
                                  const std::vector<double>& omega_z_grid, double kT,
                                  const CavitySpec& cavity, double kappa, double gamma,
                                  int threads = 1);

/// Local maxima of |t| along one row whose height exceeds `min_height`.
std::vector<std::size_t> transmission_peaks(const CMatrix& t, Eigen::Index row,
                                            double min_height);

}  // namespace cavity
