#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdexcept>

#include "cavity/spin.hpp"

using namespace cavity;

namespace {

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("spin matrices satisfy the angular momentum algebra") {
  const Complex I(0.0, 1.0);
  for (double S : {0.5, 1.0, 1.5, 2.0, 10.0}) {
    CAPTURE(S);
    const SpinOperatorSet s = spin_matrices(S);
    CHECK(s.dim == static_cast<Eigen::Index>(2 * S + 1.5));
    CHECK(max_abs(s.Sx * s.Sy - s.Sy * s.Sx - I * s.Sz) < 1e-12);
    CHECK(max_abs(s.Sy * s.Sz - s.Sz * s.Sy - I * s.Sx) < 1e-12);
    CHECK(max_abs(s.Sz * s.Sx - s.Sx * s.Sz - I * s.Sy) < 1e-12);
    const CMatrix casimir = s.Sx * s.Sx + s.Sy * s.Sy + s.Sz * s.Sz;
    CHECK(max_abs(casimir - S * (S + 1) * CMatrix::Identity(s.dim, s.dim)) < 1e-10);
    CHECK(max_abs(s.Splus - (s.Sx + I * s.Sy)) < 1e-12);
    CHECK(max_abs(s.Sminus - s.Splus.adjoint()) < 1e-12);
    CHECK(s.Sz(0, 0).real() == doctest::Approx(S));
  }
}

TEST_CASE("spin 1/2 is half the Pauli matrices") {
  const SpinOperatorSet s = spin_matrices(0.5);
  CMatrix px(2, 2), pz(2, 2);
  px << 0, 1, 1, 0;
  pz << 1, 0, 0, -1;
  CHECK(max_abs(2.0 * s.Sx - px) < 1e-15);
  CHECK(max_abs(2.0 * s.Sz - pz) < 1e-15);
}

TEST_CASE("invalid spin is rejected") {
  CHECK_THROWS_AS(spin_matrices(0.3), std::invalid_argument);
  CHECK_THROWS_AS(spin_matrices(-1.0), std::invalid_argument);
}

TEST_CASE("kron matches the index formula") {
  CMatrix a(2, 2), b(3, 3);
  a << 1, 2, 3, 4;
  b << 0, 5, 0, 6, 7, 0, 0, 0, 1;
  const CMatrix k = kron(a, b);
  REQUIRE(k.rows() == 6);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) CHECK(k(3 * i + p, 3 * j + q) == a(i, j) * b(p, q));
}
