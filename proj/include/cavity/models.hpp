#pragma once

#include <optional>
#include <vector>

#include "cavity/linalg.hpp"

namespace cavity {

/// Per-site coupling amplitude (rad/s) and in-plane field phase (rad).
struct SiteCoupling {
  double lambda = 0.0;
  double theta = 0.0;
};

enum class ChainGeometry { nearest_neighbor_pbc, all_to_all_normalized };

/// Spin-1/2 quantum Ising chain
///   H_S = (omega_z/2) sum_j sz_j - (J_pair/2) sum_{bonds} sx_i sx_j
/// with J_pair = J on nearest-neighbour bonds or J/N on every pair.
struct IsingChainModel {
  int n_sites = 1;
  double omega_z = 1.0;
  double J = 0.0;
  ChainGeometry geometry = ChainGeometry::nearest_neighbor_pbc;
  std::vector<SiteCoupling> site_couplings;   // empty: lambda_j = 1, theta_j = 0
};

std::vector<SiteCoupling> uniform_couplings(int n_sites, double lambda, double theta = 0.0);

/// Single molecule giant spin with easy axis x and a field along (0, sin phi, -cos phi):
///   -D Sx^2 + E (Sz^2 - Sy^2) - g mu_B B . S
struct GiantSpinModel {
  double S = 10.0;
  double D = 0.0;      // rad/s
  double E = 0.0;      // rad/s
  double B = 0.0;      // Tesla
  double phi = 0.0;    // rad
  double J = 0.0;      // rad/s, mean-field exchange
};

/// Fe8 parameters: D/k_B = 0.294 K, E/k_B = 0.046 K, J/k_B = 2.85e-3 K, phi = 68 deg.
GiantSpinModel fe8_model(double B_tesla = 0.0);

struct CavitySpec {
  double Omega = 1.0;
  double lambda_bar = 0.0;
  std::optional<double> rho;   // spins / m^3
  std::optional<double> nu;

  static CavitySpec from_material(double rho, double nu, double Omega);
};

/// Throws std::invalid_argument when a CavitySpec violates its invariants.
void validate(const CavitySpec& cavity);

/// Bare giant-spin Hamiltonian (no exchange term).
CMatrix giant_spin_hamiltonian(const GiantSpinModel& model);

struct ChainOperators {
  SparseOperator H_S;
  SparseOperator O;   // sum_j (lambda_j/sqrt N)(e^{i theta_j} S+_j + h.c.)
};

inline constexpr int kDefaultMaxSites = 24;

/// Site j is bit j of the basis index; bit value 0 is spin up (sz = +1).
ChainOperators build_chain_hamiltonian(const IsingChainModel& model,
                                       int max_sites = kDefaultMaxSites);

/// Parity  prod_j sz_j  as a diagonal operator.
SparseOperator chain_parity(int n_sites);

/// v -> H_S v - (1/Omega) O (O v). References are captured; keep the operators alive.
LinearOperator build_effective_hamiltonian(const SparseOperator& H_S, const SparseOperator& O,
                                           double Omega);

SparseOperator effective_hamiltonian_matrix(const SparseOperator& H_S, const SparseOperator& O,
                                            double Omega);

inline constexpr Eigen::Index kDefaultMaxDimension = Eigen::Index{1} << 24;

/// H_S (x) 1 + Omega 1 (x) a^dag a + O (x) (a^dag + a), photons 0..n_fock.
/// Basis index = spin_index * (n_fock + 1) + photon_number.
SparseOperator build_full_hamiltonian(const SparseOperator& H_S, const SparseOperator& O,
                                      double Omega, int n_fock,
                                      Eigen::Index max_dim = kDefaultMaxDimension);

/// Single-mode reduction of a multimode coupling. Only lambda^2/Omega enters the
/// effective Hamiltonian, so modes collapse to lambda_eff^2/Omega = sum_k lambda_k^2/Omega_k.
struct ModeCoupling {
  double lambda = 0.0;
  double Omega = 1.0;
};
double effective_single_mode_lambda(const std::vector<ModeCoupling>& modes, double Omega);

}  // namespace cavity
