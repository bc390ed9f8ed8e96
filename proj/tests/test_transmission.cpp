#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/tools/minima.hpp>

#include "cavity/response.hpp"
#include "cavity/transmission.hpp"

using namespace cavity;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

CavitySpec make_cavity(double lambda_bar) {
  CavitySpec c;
  c.Omega = 1.0;
  c.lambda_bar = lambda_bar;
  return c;
}

// real roots of (w - Omega)(w^2 - wz^2 - soft) + 4 l^2 wz sz0, via the companion matrix
std::vector<double> polariton_roots(double wz, double Omega, double l, double sz0, double sx0) {
  const double soft = 16.0 * l * l * l * l * sx0 * sx0 / (Omega * Omega);
  const double a2 = -Omega;
  const double a1 = -(wz * wz + soft);
  const double a0 = Omega * (wz * wz + soft) + 4.0 * l * l * wz * sz0;
  Eigen::Matrix3d C;
  C << -a2, -a1, -a0, 1, 0, 0, 0, 1, 0;
  const Eigen::Vector3cd ev = C.eigenvalues();
  std::vector<double> out;
  for (int i = 0; i < 3; ++i)
    if (std::abs(ev(i).imag()) < 1e-12 && ev(i).real() > 0.0) out.push_back(ev(i).real());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("empty cavity is a Lorentzian with t = -1 on resonance") {
  CHECK(std::abs(transmission_point(1.0, 0.3, 1.0, 0.0, 0.01, 0.01, -1.0, 0.0) +
                 Complex(1.0, 0.0)) < 1e-15);
  for (double d : {0.01, 0.1, 1.0}) {
    const Complex t = transmission_point(1.0 + d, 0.3, 1.0, 0.0, 0.01, 0.01, -1.0, 0.0);
    CHECK(std::abs(t) == doctest::Approx(0.01 / std::hypot(d, 0.01)).epsilon(1e-13));
  }
}

TEST_CASE("susceptibility without order is the bare two-level form") {
  const double wz = 0.4, g = 0.02;
  for (double w : {0.1, 0.4, 0.9}) {
    const Complex ref = wz * (-0.7) / (Complex(w, g) * Complex(w, g) - wz * wz);
    CHECK(std::abs(transverse_susceptibility(w, wz, 1.0, 0.3, g, -0.7, 0.0) - ref) < 1e-14);
  }
  // the order parameter stiffens the pole to sqrt(wz^2 + 16 l^4 sx0^2 / Omega^2)
  const double l = 0.3, sx0 = 0.5;
  const double pole = std::sqrt(wz * wz + 16.0 * std::pow(l, 4) * sx0 * sx0);
  const double mag = std::abs(transverse_susceptibility(pole, wz, 1.0, l, 1e-9, -0.5, sx0));
  CHECK(mag > 1e6);
}

TEST_CASE("polariton peaks sit at the roots of the real dispersion") {
  const double kappa = 1e-5, gamma = 1e-5;
  struct Case { double wz, l, sz0, sx0; };
  for (const Case c : {Case{0.5, 0.1, -1.0, 0.0}, Case{1.2, 0.15, -0.9, 0.0},
                       Case{0.05, 0.2, -0.3, 0.95}}) {
    CAPTURE(c.wz);
    const auto roots = polariton_roots(c.wz, 1.0, c.l, c.sz0, c.sx0);
    REQUIRE(roots.size() >= 2);
    for (double r : roots) {
      auto neg = [&](double w) {
        return -std::abs(transmission_point(w, c.wz, 1.0, c.l, kappa, gamma, c.sz0, c.sx0));
      };
      const auto best = boost::math::tools::brent_find_minima(neg, r * (1 - 1e-3), r * (1 + 1e-3), 50);
      CHECK(best.first == doctest::Approx(r).epsilon(1e-6));
    }
  }
}

TEST_CASE("far detuned transmission decays as kappa / |omega - Omega|") {
  const double kappa = 0.02;
  for (double w : {30.0, 100.0, 300.0}) {
    const double t = std::abs(transmission_point(w, 0.4, 1.0, 0.2, kappa, 0.02, -1.0, 0.0));
    CHECK(t == doctest::Approx(kappa / (w - 1.0)).epsilon(1e-3));
  }
}

TEST_CASE("passive medium never amplifies") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const double w = 3.0 * u(rng);
    const double wz = 2.0 * u(rng) + 1e-3;
    const double l = 0.5 * u(rng);
    const double kappa = 1e-3 + 0.1 * u(rng);
    const double gamma = 1e-3 + 0.1 * u(rng);
    // equilibrium spin-1/2: sz0 <= 0, sx0^2 + sz0^2 <= 1
    const double r = u(rng), ang = 0.5 * M_PI * u(rng);
    const double sz0 = -r * std::cos(ang), sx0 = r * std::sin(ang);
    CHECK(std::abs(transmission_point(w, wz, 1.0, l, kappa, gamma, sz0, sx0)) <= 1.0 + 1e-12);
  }
}

TEST_CASE("argument checks") {
  CHECK_THROWS_AS(transmission_point(1.0, 0.3, 1.0, 0.1, 0.0, 0.01, -1.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(transmission_point(1.0, 0.3, 1.0, 0.1, 0.01, -0.01, -1.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(transmission_map({0.2, 0.1}, {0.5}, 0.0, make_cavity(0.2), 0.01, 0.01),
                  std::invalid_argument);
}

// a |t| maximum strictly between the bare spin and cavity frequencies
bool resonance_between_bare_modes(const TransmissionGrid& g, std::size_t row) {
  const double lo = std::min(g.columns[row].omega_z, g.cavity.Omega);
  const double hi = std::max(g.columns[row].omega_z, g.cavity.Omega);
  for (std::size_t j : transmission_peaks(g.t, static_cast<Eigen::Index>(row), 0.0))
    if (g.omega_grid[j] > lo && g.omega_grid[j] < hi) return true;
  return false;
}

TEST_CASE("map flags follow the Dicke boundary") {
  const double l = 0.2;   // omega_z,c(T = 0) = 4 l^2 / Omega = 0.16
  const auto wz = linspace(0.01, 1.6, 37);
  const auto w = linspace(0.005, 2.0, 400);
  for (double kT : {0.0, 0.03}) {
    CAPTURE(kT);
    const TransmissionGrid g = transmission_map(w, wz, kT, make_cavity(l), 0.02, 0.02, 3);
    const double wc = *dicke_critical_omega_z(1.0, 0.5, l, kT);
    CHECK(g.warnings.empty());
    int sr_with_resonance = 0;
    for (std::size_t i = 0; i < wz.size(); ++i) {
      const auto& col = g.columns[i];
      CAPTURE(col.omega_z);
      CHECK(col.converged);
      CHECK(col.superradiant == (col.omega_z <= wc));
      if (std::abs(col.omega_z - wc) > 0.01) CHECK(col.ordered == col.superradiant);
      if (!col.superradiant) CHECK(col.sx0 == 0.0);
      CHECK(col.sz0 <= 0.0);
      // the solver tolerance bounds how far the spin may leave the unit circle
      CHECK(col.sx0 * col.sx0 + col.sz0 * col.sz0 <= 1.0 + 1e-9);
      CHECK(g.t.row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
      // level repulsion keeps normal-phase polaritons outside the bare-mode window
      if (!col.superradiant) CHECK_FALSE(resonance_between_bare_modes(g, i));
      else if (resonance_between_bare_modes(g, i)) ++sr_with_resonance;
    }
    CHECK(sr_with_resonance > 0);
  }
}

TEST_CASE("transmission is continuous across the transition") {
  const double l = 0.2;
  const double wc = *dicke_critical_omega_z(1.0, 0.5, l, 0.0);
  const auto w = linspace(0.005, 1.5, 200);
  const TransmissionGrid g =
      transmission_map(w, {wc * (1 - 1e-6), wc * (1 + 1e-6)}, 0.0, make_cavity(l), 0.02, 0.02);
  CHECK(g.columns[0].superradiant);
  CHECK_FALSE(g.columns[1].superradiant);
  CHECK(std::abs(g.columns[0].sx0) < 5e-3);
  CHECK((g.t.row(0) - g.t.row(1)).cwiseAbs().maxCoeff() < 1e-3);
}
