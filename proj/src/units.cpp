#include "cavity/units.hpp"

namespace cavity {

const PhysicalConstants& constants() {
  static const PhysicalConstants table{};
  return table;
}

double kelvin_to_rad_s(double kelvin, const PhysicalConstants& c) {
  return c.k_B * kelvin / c.hbar;
}

double rad_s_to_kelvin(double omega, const PhysicalConstants& c) {
  return c.hbar * omega / c.k_B;
}

double tesla_to_rad_s(double tesla, const PhysicalConstants& c) {
  return c.g_e * c.mu_B * tesla / c.hbar;
}

double rad_s_to_tesla(double omega, const PhysicalConstants& c) {
  return c.hbar * omega / (c.g_e * c.mu_B);
}

}  // namespace cavity
