#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "cavity/meanfield.hpp"
#include "cavity/spin.hpp"

using namespace cavity;

namespace {

MeanFieldProblem ising(double omega_z, double J, double lambda_bar, double kT,
                       Sublattices sub = Sublattices::one) {
  IsingChainModel m;
  m.n_sites = 2;
  m.omega_z = omega_z;
  m.J = J;
  MeanFieldProblem p;
  p.model = m;
  p.cavity.Omega = 1.0;
  p.cavity.lambda_bar = lambda_bar;
  p.kT = kT;
  p.sublattices = sub;
  return p;
}

// global minimum of F(m) on [-S, S] by a dense scan refined with Brent
double grid_minimizer(const MeanFieldProblem& p, double S) {
  auto F = [&p](double m) {
    const double arr[1] = {m};
    return mean_field_free_energy(p, arr);
  };
  const int n = 4001;
  double best_m = -S;
  double best_f = F(-S);
  for (int i = 1; i < n; ++i) {
    const double m = -S + 2.0 * S * i / (n - 1);
    const double f = F(m);
    if (f < best_f - 1e-15 * std::abs(best_f)) {
      best_f = f;
      best_m = m;
    }
  }
  const double h = 2.0 * S / (n - 1);
  const auto r = boost::math::tools::brent_find_minima(F, std::max(-S, best_m - h),
                                                       std::min(S, best_m + h), 52);
  return r.first;
}

}  // namespace

TEST_CASE("thermal expectation of a spin-1/2 in a field") {
  const SpinOperatorSet s = spin_matrices(0.5);
  for (double wz : {0.3, 1.0}) {
    for (double kT : {0.05, 0.5, 5.0}) {
      CAPTURE(wz);
      CAPTURE(kT);
      CHECK(thermal_expectation(wz * s.Sz, s.Sz, kT) ==
            doctest::Approx(-0.5 * std::tanh(wz / (2.0 * kT))).epsilon(1e-12));
    }
    CHECK(thermal_expectation(wz * s.Sz, s.Sz, 0.0) == doctest::Approx(-0.5));
  }
  // degenerate ground manifold is averaged at T = 0
  CHECK(thermal_expectation(CMatrix::Zero(2, 2), s.Sz, 0.0) == doctest::Approx(0.0));
  // large beta does not overflow
  CHECK(thermal_expectation(1e6 * s.Sz, s.Sz, 1e-3) == doctest::Approx(-0.5));
}

TEST_CASE("spin-1/2 Ising closed forms") {
  SUBCASE("zero temperature order parameter") {
    for (double J : {1.2, 2.0, 5.0}) {
      const MeanFieldSolution sol = solve_selfconsistent(ising(1.0, J, 0.0, 0.0));
      CHECK(sol.converged);
      CHECK(sol.m[0] == doctest::Approx(std::sqrt(J * J - 1.0) / (2.0 * J)).epsilon(1e-8));
      CHECK(sol.sz == doctest::Approx(-0.5 / J).epsilon(1e-8));
    }
  }
  SUBCASE("normal phase is the m = 0 fixed point") {
    for (double J : {0.0, 0.5, 0.99}) {
      const MeanFieldSolution sol = solve_selfconsistent(ising(1.0, J, 0.0, 0.0));
      CHECK(sol.converged);
      CHECK(sol.m[0] == 0.0);
      CHECK(sol.sz == doctest::Approx(-0.5));
      CHECK(sol.free_energy_per_spin == doctest::Approx(-0.5));
    }
  }
  SUBCASE("zero field critical temperature kT_c = J/2") {
    const double J = 1.0;
    CHECK(std::abs(solve_selfconsistent(ising(0.0, J, 0.0, 0.49)).m[0]) > 1e-3);
    CHECK(solve_selfconsistent(ising(0.0, J, 0.0, 0.51)).m[0] == doctest::Approx(0.0));
  }
}

TEST_CASE("mirror branches tie and +m is reported") {
  const MeanFieldProblem p = ising(0.5, 1.0, 0.0, 0.1);
  const MeanFieldSolution sol = solve_selfconsistent(p);
  REQUIRE(sol.m[0] > 0.0);
  const double plus[1] = {sol.m[0]};
  const double minus[1] = {-sol.m[0]};
  CHECK(mean_field_free_energy(p, plus) == doctest::Approx(mean_field_free_energy(p, minus)));
}

TEST_CASE("cavity exchange adds to the intrinsic exchange") {
  // J_cav = 4 lambda^2 / Omega; lambda = 0.5 gives J_cav = 1
  const MeanFieldSolution a = solve_selfconsistent(ising(1.0, 1.0, 0.5, 0.0));
  const MeanFieldSolution b = solve_selfconsistent(ising(1.0, 2.0, 0.0, 0.0));
  CHECK(a.m[0] == doctest::Approx(b.m[0]).epsilon(1e-9));
  CHECK(a.alpha_per_sqrtN == doctest::Approx(2.0 * 0.5 * a.m[0]).epsilon(1e-12));
  CHECK(a.photons_per_spin == doctest::Approx(a.alpha_per_sqrtN * a.alpha_per_sqrtN));
  CHECK(b.alpha_per_sqrtN == 0.0);
}

TEST_CASE("order grows monotonically with the cavity coupling") {
  double prev = -1.0;
  for (int i = 0; i <= 20; ++i) {
    const double lb = 0.05 * i;
    const MeanFieldSolution sol = solve_selfconsistent(ising(1.0, 0.3, lb, 0.05));
    CHECK(sol.converged);
    CHECK(std::abs(sol.m[0]) >= prev - 1e-12);
    prev = std::abs(sol.m[0]);
  }
  CHECK(prev > 0.4);
}

TEST_CASE("antiferromagnetic exchange orders on two sublattices") {
  const MeanFieldSolution sol =
      solve_selfconsistent(ising(0.5, -2.0, 0.0, 0.0, Sublattices::two));
  CHECK(sol.converged);
  CHECK(sol.m[0] == doctest::Approx(-sol.m[1]).epsilon(1e-10));
  CHECK(sol.m_stag > 0.2);
  CHECK(sol.m_uniform == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(sol.alpha_per_sqrtN == doctest::Approx(0.0).epsilon(1e-10));
  // a single sublattice sees only the uniform channel and stays normal
  CHECK(solve_selfconsistent(ising(0.5, -2.0, 0.0, 0.0)).m[0] == 0.0);
  // ferromagnetic exchange gives equal sublattices
  const MeanFieldSolution f = solve_selfconsistent(ising(0.5, 2.0, 0.0, 0.0, Sublattices::two));
  CHECK(f.m[0] == doctest::Approx(f.m[1]).epsilon(1e-10));
}

TEST_CASE("self-consistent solution is the global free-energy minimum") {
  // F(m) is a minimum principle for positive net exchange
  for (double J : {0.1, 0.5, 1.5}) {
    for (double lb : {0.0, 0.3, 0.6}) {
      for (double kT : {0.0, 0.2, 0.6}) {
        CAPTURE(J);
        CAPTURE(lb);
        CAPTURE(kT);
        MeanFieldProblem p = ising(1.0, J, lb, kT);
        p.tol = 1e-13;
        const MeanFieldSolution sol = solve_selfconsistent(p);
        CHECK(sol.converged);
        const double m_ref = grid_minimizer(p, 0.5);
        CHECK(std::abs(std::abs(sol.m[0]) - std::abs(m_ref)) < 1e-6);
        const double arr[1] = {m_ref};
        CHECK(sol.free_energy_per_spin <= mean_field_free_energy(p, arr) + 1e-12);
      }
    }
  }
}

TEST_CASE("giant spin model reduces to the spin Hamiltonian") {
  GiantSpinModel g = fe8_model(0.0);
  MeanFieldProblem p;
  p.model = g;
  p.cavity.Omega = 1.4e9;
  p.kT = 2e11;
  const SiteModel site = site_model(p);
  CHECK(site.S == 10.0);
  CHECK(site.h0.rows() == 21);
  CHECK((site.h0 - giant_spin_hamiltonian(g)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(site.J == g.J);
  CHECK(site.J_cav == 0.0);
  // above the bare ordering temperature the solution is symmetric
  const MeanFieldSolution sol = solve_selfconsistent(p);
  CHECK(sol.converged);
  CHECK(std::abs(sol.m[0]) < 1e-8);
}

TEST_CASE("validation") {
  MeanFieldProblem p = ising(1.0, 1.0, 0.0, 0.0);
  p.damping = 0.0;
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
  p = ising(1.0, 1.0, 0.0, -1.0);
  CHECK_THROWS_AS(solve_selfconsistent(p), std::invalid_argument);
  p = ising(1.0, 1.0, 0.0, 0.0);
  p.init = {{0.1, 0.2}};
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
}
