#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cavity/linalg.hpp"
#include "cavity/spectra.hpp"
#include "cavity/units.hpp"

namespace cavity {

/// Static response of the bare spin system to the coupling operator and the
/// superradiance criterion |R| >= Omega/2 (hbar = 1).
struct ResponseResult {
  double R = 0.0;            // rad/s, never positive
  double kT = 0.0;           // k_B T / hbar in rad/s
  double margin = 0.0;       // |R| / (Omega/2)
  bool superradiant = false; // margin >= 1
  bool truncation_warning = false;
};

ResponseResult make_response_result(double R, double kT, double Omega, bool truncated);

/// Thermal spectral sum
///   R = -sum_{m,n} w_m |<m|O|n>|^2 (e^{beta D_mn} - 1)/D_mn / sum_m w_m,  D_mn = e_m - e_n,
/// evaluated as (w_n - w_m)/D_mn with energies shifted by the ground level, and the
/// D -> 0 pairs by their limit w_m * beta. kT = 0 uses the ground-manifold sum.
ResponseResult static_response(const Spectrum& spectrum, const LinearOperator& O, double kT,
                               double Omega);
ResponseResult static_response(const Spectrum& spectrum, const SparseOperator& O, double kT,
                               double Omega);

/// Zero-temperature response of a large chain: ground manifold from `lanczos`, then
/// for each ground vector g the resolvent <g|O (H - e_0)^-1 O|g> by a Lanczos
/// quadrature seeded with O|g> projected off the ground manifold.
struct KrylovResponse {
  ResponseResult response;
  Spectrum ground;                 // lowest pairs used to build the ground manifold
  int ground_degeneracy = 1;
  double gram_defect = 0.0;
};
KrylovResponse krylov_zero_temperature_response(const LinearOperator& H, const LinearOperator& O,
                                                double Omega, int krylov_dim, std::uint64_t seed,
                                                const LanczosOptions& options = {});

/// Collective critical coupling of N free spins S with H_S = omega_z sum_j Sz_j:
///   lambda_c^2 = (omega_z Omega / 4) [ (2S+1) coth(beta omega_z (2S+1)/2) - coth(beta omega_z/2) ]^-1.
/// kT = 0 uses the limit of the bracket, 2S.
double dicke_critical_coupling(double omega_z, double Omega, double S, double kT);

/// The bracket above, computed without cancellation at small beta*omega_z.
double dicke_bracket(double beta_omega_z, double S);

/// Zero-field critical temperature (k_B T_c / hbar) of the spin-S Dicke model:
/// the omega_z -> 0 limit, 8 S (S+1) lambda^2 / (3 Omega).
double dicke_zero_field_critical_temperature(double Omega, double S, double lambda_bar);

/// omega_z,c(T): the splitting at which lambda_bar equals the critical coupling.
/// Empty when the system is normal for every omega_z > 0 (T >= T_c(0)).
std::optional<double> dicke_critical_omega_z(double Omega, double S, double lambda_bar,
                                             double kT);

/// lambda_bar = sqrt(g_e^2 mu_B^2 mu_0 rho nu Omega / (8 hbar)), rho in spins/m^3.
double lambda_bar_from_material(double rho, double nu, double Omega,
                                const PhysicalConstants& c = constants());

struct RmsReduction {
  double lambda_bar = 0.0;
  double bound_gap = 0.0;   // lambda_bar^2 - (mean lambda)^2 >= 0
};
RmsReduction rms_reduce(const std::vector<double>& site_couplings);

}  // namespace cavity
