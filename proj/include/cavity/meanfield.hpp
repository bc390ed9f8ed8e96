#pragma once

#include <span>
#include <variant>
#include <vector>

#include "cavity/linalg.hpp"
#include "cavity/models.hpp"

namespace cavity {

enum class Sublattices { one = 1, two = 2 };

/// Thermal mean-field problem for the cavity-dressed effective Hamiltonian.
///
/// Everything is written in the S-operator convention (S = sigma/2 for spin 1/2).
/// Under the rms approximation the cavity adds the exchange J_cav = 4 lambda_bar^2/Omega
/// to the intrinsic J, so a single sublattice sees
///   H_site = h0 - 2 J_eff m Sx + J_eff m^2,   J_eff = J + J_cav.
/// With two sublattices the intrinsic exchange couples A to B while the cavity couples
/// to the average magnetization mbar = (m_A + m_B)/2:
///   H_A = h0 - 2 (J m_B + J_cav mbar) Sx + (J m_A m_B + J_cav mbar^2),  likewise for B.
/// For the Ising chain the all-to-all normalized J is used (the chain geometry is ignored).
struct MeanFieldProblem {
  std::variant<IsingChainModel, GiantSpinModel> model;
  CavitySpec cavity;
  double kT = 0.0;                             // rad/s
  Sublattices sublattices = Sublattices::one;
  std::vector<std::vector<double>> init;       // extra initial order parameters
  double damping = 0.5;
  double tol = 0.0;                            // <= 0 selects 1e-10 * S
  int max_iter = 10000;
};

/// Fixed-point data of a problem: bare single-site Hamiltonian and couplings.
struct SiteModel {
  double S = 0.5;
  CMatrix h0;
  CMatrix Sx;
  CMatrix Sz;
  double J = 0.0;
  double J_cav = 0.0;
};

SiteModel site_model(const MeanFieldProblem& problem);

/// Throws std::invalid_argument when tol, damping or init lengths are invalid.
void validate(const MeanFieldProblem& problem);

/// One Hamiltonian per sublattice, constant energy terms included.
std::vector<CMatrix> site_hamiltonian(const MeanFieldProblem& problem, std::span<const double> m);

/// Tr(O e^{-beta H}) / Tr(e^{-beta H}); kT = 0 averages the (degenerate) ground manifold.
double thermal_expectation(const CMatrix& H, const CMatrix& O, double kT);

struct MeanFieldSolution {
  std::vector<double> m;                // <Sx> per sublattice
  double m_uniform = 0.0;               // (m_A + m_B)/2
  double m_stag = 0.0;                  // (m_A - m_B)/2
  double sz = 0.0;                      // <Sz>, sublattice average
  double free_energy_per_spin = 0.0;    // rad/s
  double alpha_per_sqrtN = 0.0;         // |<a>|/sqrt(N) = 2 lambda_bar |m_uniform| / Omega
  double photons_per_spin = 0.0;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

/// Damped fixed-point iteration from every provided init plus the mandatory ones
/// (0+, +S, -S, and the staggered pairs for two sublattices); returns the converged
/// branch of lowest free energy. Never throws on non-convergence.
MeanFieldSolution solve_selfconsistent(const MeanFieldProblem& problem);

/// Free energy per spin at fixed order parameters (no self-consistency).
double mean_field_free_energy(const MeanFieldProblem& problem, std::span<const double> m);

}  // namespace cavity
