#pragma once

// Physical constants and the conversions used at I/O boundaries.
//
// Internally every energy is an angular frequency in rad/s with hbar = 1.
// Temperatures enter the numerical kernels as k_B T / hbar (also rad/s).

namespace cavity {

struct PhysicalConstants {
  double hbar = 1.054571817e-34;     // J s
  double k_B = 1.380649e-23;         // J / K
  double mu_B = 9.2740100783e-24;    // J / T
  double mu_0 = 1.25663706212e-6;    // T^2 m^3 / J
  double g_e = 2.0;
};

/// Read-only CODATA 2018 table with g_e = 2.
const PhysicalConstants& constants();

/// Kelvin -> rad/s (k_B T / hbar).
double kelvin_to_rad_s(double kelvin, const PhysicalConstants& c = constants());
double rad_s_to_kelvin(double omega, const PhysicalConstants& c = constants());

/// Tesla -> Zeeman angular frequency per unit spin, g_e mu_B B / hbar.
double tesla_to_rad_s(double tesla, const PhysicalConstants& c = constants());
double rad_s_to_tesla(double omega, const PhysicalConstants& c = constants());

/// spins/cm^3 -> spins/m^3.
constexpr double per_cm3_to_per_m3(double rho) { return rho * 1e6; }

}  // namespace cavity
