#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "cavity/models.hpp"
#include "cavity/response.hpp"
#include "cavity/spectra.hpp"
#include "cavity/spin.hpp"

using namespace cavity;

namespace {

ChainOperators chain(int n, double omega_z, double J, double lambda) {
  IsingChainModel m;
  m.n_sites = n;
  m.omega_z = omega_z;
  m.J = J;
  m.site_couplings = uniform_couplings(n, lambda);
  return build_chain_hamiltonian(m);
}

// lambda at which |R| = Omega/2, using R proportional to lambda^2
double critical_lambda_from_response(const ChainOperators& ops, double lambda, double kT,
                                     double Omega) {
  const Spectrum s = dense_eigh(CMatrix(ops.H_S));
  const ResponseResult r = static_response(s, ops.O, kT, Omega);
  return lambda * std::sqrt(0.5 * Omega / std::abs(r.R));
}

}  // namespace

TEST_CASE("Dicke closed form: zero temperature and Curie limits") {
  const double wz = 0.7;
  const double Omega = 1.3;
  CHECK(dicke_critical_coupling(wz, Omega, 0.5, 0.0) ==
        doctest::Approx(0.5 * std::sqrt(wz * Omega)).epsilon(1e-14));
  for (double S : {0.5, 1.0, 2.5, 10.0}) {
    CAPTURE(S);
    CHECK(dicke_bracket(1e8, S) == doctest::Approx(2.0 * S));
    // small beta omega_z: bracket -> 2 S (S+1) x / 3
    const double x = 1e-6;
    CHECK(dicke_bracket(x, S) == doctest::Approx(2.0 * S * (S + 1.0) * x / 3.0).epsilon(1e-9));
    // smooth across the series switch
    const double lo = dicke_bracket(2e-3 / (2 * S + 1) * 0.999, S);
    const double hi = dicke_bracket(2e-3 / (2 * S + 1) * 1.001, S);
    CHECK(hi > lo);
    CHECK(hi / lo == doctest::Approx(1.001 / 0.999).epsilon(1e-6));
  }
  // lambda_c grows with T and with omega_z
  double prev = 0.0;
  for (double kT : {0.0, 0.1, 0.3, 1.0, 3.0, 10.0}) {
    const double l = dicke_critical_coupling(wz, Omega, 0.5, kT);
    CHECK(l > prev);
    prev = l;
  }
  CHECK(dicke_critical_coupling(1.0, Omega, 0.5, 0.2) >
        dicke_critical_coupling(0.5, Omega, 0.5, 0.2));
}

TEST_CASE("spectral response of free spins reproduces the closed form") {
  const double wz = 1.0;
  const double Omega = 2.0;
  const double lambda = 0.3;
  for (int n : {1, 2, 4}) {
    for (double t : {0.0, 0.1, 1.0, 10.0}) {
      CAPTURE(n);
      CAPTURE(t);
      const ChainOperators ops = chain(n, wz, 0.0, lambda);
      const double lc = critical_lambda_from_response(ops, lambda, t * wz, Omega);
      CHECK(lc == doctest::Approx(dicke_critical_coupling(wz, Omega, 0.5, t * wz)).epsilon(1e-9));
    }
  }
}

TEST_CASE("spectral response of a large spin reproduces the closed form") {
  const double wz = 0.4;
  const double Omega = 1.0;
  for (double S : {1.0, 2.0, 3.5}) {
    const SpinOperatorSet sp = spin_matrices(S);
    const Spectrum s = dense_eigh(wz * sp.Sz);
    const CMatrix O = 2.0 * sp.Sx;
    for (double kT : {0.0, 0.05, 0.4, 4.0}) {
      CAPTURE(S);
      CAPTURE(kT);
      const ResponseResult r = static_response(s, as_operator(O), kT, Omega);
      CHECK(std::sqrt(0.5 * Omega / std::abs(r.R)) ==
            doctest::Approx(dicke_critical_coupling(wz, Omega, S, kT)).epsilon(1e-9));
    }
  }
}

TEST_CASE("response is continuous through level crossings") {
  // two levels split by delta, coupled by O = sigma_x
  auto response = [](double delta, double kT) {
    Spectrum s = dense_eigh(CMatrix(Eigen::Vector2cd(0.0, delta).asDiagonal()));
    CMatrix O(2, 2);
    O << 0.0, 1.0, 1.0, 0.0;
    return static_response(s, as_operator(O), kT, 1.0).R;
  };
  const double kT = 0.3;
  const double at0 = response(0.0, kT);
  CHECK(at0 == doctest::Approx(-1.0 / kT).epsilon(1e-12));
  for (double d : {1e-14, 1e-10, 1e-6, 1e-3}) {
    CAPTURE(d);
    CHECK(response(d, kT) == doctest::Approx(at0).epsilon(4.0 * d / kT + 1e-12));
    CHECK(response(-d, kT) == doctest::Approx(at0).epsilon(4.0 * d / kT + 1e-12));
  }
  // zero temperature with a matrix element inside the ground manifold diverges
  const ResponseResult r = static_response(dense_eigh(CMatrix::Zero(2, 2)),
                                           as_operator(CMatrix(CMatrix::Identity(2, 2))), 0.0, 1.0);
  CHECK(std::isinf(r.R));
  CHECK(r.superradiant);
}

TEST_CASE("response criterion flags") {
  const ResponseResult r = make_response_result(-0.6, 0.1, 1.0, false);
  CHECK(r.margin == doctest::Approx(1.2));
  CHECK(r.superradiant);
  CHECK_FALSE(make_response_result(-0.4, 0.1, 1.0, false).superradiant);
  CHECK_THROWS_AS(static_response(dense_eigh(CMatrix::Identity(2, 2)),
                                  as_operator(CMatrix(CMatrix::Identity(2, 2))), -1.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("truncated spectra raise the warning only when weight is missing") {
  const ChainOperators ops = chain(6, 1.0, 0.5, 0.2);
  const Spectrum full = dense_eigh(CMatrix(ops.H_S));
  Spectrum part = full;
  part.eigenvalues = full.eigenvalues.head(10);
  part.eigenvectors = full.eigenvectors.leftCols(10);
  part.residuals = full.residuals.head(10);
  part.converged.resize(10);
  CHECK_FALSE(static_response(part, ops.O, 0.01, 1.0).truncation_warning);
  CHECK(static_response(part, ops.O, 5.0, 1.0).truncation_warning);
}

TEST_CASE("Krylov zero-temperature response matches the dense sum") {
  for (double J : {-0.6, 0.3, 0.9}) {
    CAPTURE(J);
    const ChainOperators ops = chain(8, 1.0, J, 0.25);
    const ResponseResult dense = static_response(dense_eigh(CMatrix(ops.H_S)), ops.O, 0.0, 1.0);
    const KrylovResponse kr =
        krylov_zero_temperature_response(as_operator(ops.H_S), as_operator(ops.O), 1.0, 80, 3);
    CHECK(kr.response.R == doctest::Approx(dense.R).epsilon(1e-8));
    CHECK(kr.gram_defect < 1e-8);
  }
}

TEST_CASE("material coupling and rms reduction") {
  // Fe8 crystal, Omega = 1.4e9 rad/s, full filling
  const double lb = lambda_bar_from_material(5.1e26, 1.0, 1.4e9);
  CHECK(lb == doctest::Approx(6.0487910797905e8).epsilon(1e-4));
  CHECK(lambda_bar_from_material(5.1e26, 0.25, 1.4e9) == doctest::Approx(0.5 * lb));
  CHECK(lambda_bar_from_material(5.1e26, 0.0, 1.4e9) == 0.0);
  CHECK_THROWS(lambda_bar_from_material(-1.0, 1.0, 1.4e9));

  const RmsReduction u = rms_reduce({2.0, 2.0, 2.0});
  CHECK(u.lambda_bar == doctest::Approx(2.0));
  CHECK(u.bound_gap == doctest::Approx(0.0));
  const RmsReduction v = rms_reduce({1.0, 0.0});
  CHECK(v.lambda_bar == doctest::Approx(std::sqrt(0.5)));
  CHECK(v.bound_gap == doctest::Approx(0.25));
  CHECK(v.bound_gap >= 0.0);
}

TEST_CASE("zero-field critical temperature and omega_z inversion") {
  const double Omega = 1.0;
  const double lb = 0.2;
  const double kTc = dicke_zero_field_critical_temperature(Omega, 0.5, lb);
  CHECK(kTc == doctest::Approx(2.0 * lb * lb / Omega));
  for (double frac : {0.0, 0.2, 0.6, 0.95}) {
    CAPTURE(frac);
    const auto wc = dicke_critical_omega_z(Omega, 0.5, lb, frac * kTc);
    REQUIRE(wc.has_value());
    CHECK(dicke_critical_coupling(*wc, Omega, 0.5, frac * kTc) == doctest::Approx(lb).epsilon(1e-10));
  }
  CHECK_FALSE(dicke_critical_omega_z(Omega, 0.5, lb, 1.01 * kTc).has_value());
  // T = 0: lambda^2 = omega_z Omega / 4
  CHECK(*dicke_critical_omega_z(Omega, 0.5, lb, 0.0) == doctest::Approx(4.0 * lb * lb / Omega));
}
