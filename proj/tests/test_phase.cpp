#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cavity/phase.hpp"
#include "cavity/response.hpp"

using namespace cavity;

namespace {

SweepSpec free_spin_sweep(DetectorKind detector) {
  SweepSpec s;
  s.plane = Plane::omega_z_vs_T;
  s.detector = detector;
  s.cavity.Omega = 1.0;
  s.cavity.lambda_bar = 0.25;
  s.spin = 0.5;
  // kT_c(omega_z -> 0) = 2 lambda^2 / Omega = 0.125
  s.axis1 = {0.0, 0.12, 7, GridScale::linear};
  s.axis2 = {0.01, 0.5, 25, GridScale::linear};
  s.bisection_tol = 1e-6;
  s.mf_tol = 1e-14;
  s.threshold = 1e-7;
  return s;
}

}  // namespace

TEST_CASE("grid values") {
  const auto lin = Grid{1.0, 2.0, 5, GridScale::linear}.values();
  REQUIRE(lin.size() == 5);
  CHECK(lin.front() == 1.0);
  CHECK(lin.back() == 2.0);
  CHECK(lin[2] == doctest::Approx(1.5));
  const auto lg = Grid{1.0, 100.0, 3, GridScale::log}.values();
  CHECK(lg[1] == doctest::Approx(10.0));
  CHECK(lg.back() == 100.0);
  CHECK(Grid{3.0, 3.0, 1}.values() == std::vector<double>{3.0});
  CHECK_THROWS_AS(validate(Grid{2.0, 1.0, 3}, "g"), std::invalid_argument);
  CHECK_THROWS_AS(validate(Grid{0.0, 1.0, 3, GridScale::log}, "g"), std::invalid_argument);
  CHECK_THROWS_AS(validate(Grid{0.0, 1.0, 0}, "g"), std::invalid_argument);
}

TEST_CASE("bisection brackets a step") {
  const double x0 = 0.3712345;
  auto step = [x0](double x) { return x < x0 ? PhaseLabel::ordered : PhaseLabel::normal; };
  for (double tol : {1e-3, 1e-6, 1e-9}) {
    const Bracket b = bisect_transition(step, 0.1, 0.9, tol);
    CHECK(b.lo <= x0);
    CHECK(b.hi >= x0);
    CHECK(b.hi - b.lo <= tol * 0.5 * (b.lo + b.hi));
    CHECK(b.lo_label == PhaseLabel::ordered);
    CHECK(b.failed_probes == 0);
  }
  CHECK_THROWS_AS(bisect_transition(step, 0.5, 0.9, 1e-3), std::invalid_argument);
  // failed probes count and are resolved to the high side
  int calls = 0;
  auto flaky = [&](double x) {
    ++calls;
    if (calls == 3) return PhaseLabel::failed;
    return step(x);
  };
  const Bracket f = bisect_transition(flaky, 0.1, 0.9, 1e-3);
  CHECK(f.failed_probes == 1);
}

TEST_CASE("three detectors agree on the free-spin boundary") {
  const PhaseBoundary closed = trace_boundary(free_spin_sweep(DetectorKind::closed_form_eq8));
  const PhaseBoundary resp = trace_boundary(free_spin_sweep(DetectorKind::response_criterion));
  const PhaseBoundary mf = trace_boundary(free_spin_sweep(DetectorKind::mean_field_order_parameter));
  REQUIRE(closed.points.size() == 7);
  for (std::size_t i = 0; i < closed.points.size(); ++i) {
    const auto& c = closed.points[i];
    CAPTURE(c.axis1);
    REQUIRE(c.critical.has_value());
    REQUIRE(resp.points[i].critical.has_value());
    REQUIRE(mf.points[i].critical.has_value());
    const auto exact = dicke_critical_omega_z(1.0, 0.5, 0.25, c.axis1);
    REQUIRE(exact.has_value());
    const double tol = 2.0 * 1e-6 * *exact;
    CHECK(std::abs(*c.critical - *exact) <= tol);
    CHECK(std::abs(*resp.points[i].critical - *exact) <= tol);
    CHECK(std::abs(*mf.points[i].critical - *exact) <= tol);
    CHECK(c.below == PhaseLabel::ordered);
    CHECK(c.bracket_width <= 1e-6 * *c.critical * 1.0000001);
  }
  CHECK(closed.points[0].critical.value() == doctest::Approx(0.25).epsilon(1e-5));
}

TEST_CASE("mean-field J-lambda boundary of the Ising chain") {
  SweepSpec s;
  s.plane = Plane::J_vs_lambda;
  s.chain.omega_z = 1.0;
  s.cavity.Omega = 1.0;
  s.axis1 = {-1.0, 0.8, 10, GridScale::linear};
  s.axis2 = {0.005, 1.5, 31, GridScale::linear};
  s.bisection_tol = 1e-6;
  s.mf_tol = 1e-14;
  s.threshold = 1e-7;
  const PhaseBoundary b = trace_boundary(s);
  for (const auto& pt : b.points) {
    CAPTURE(pt.axis1);
    REQUIRE(pt.critical.has_value());
    // J + 4 lambda^2/Omega = omega_z
    const double exact = std::sqrt((1.0 - pt.axis1) / 4.0);
    CHECK(*pt.critical == doctest::Approx(exact).epsilon(1e-6));
    CHECK(pt.below == PhaseLabel::normal);
  }
}

TEST_CASE("no boundary on the grid is reported as empty") {
  SweepSpec s = free_spin_sweep(DetectorKind::closed_form_eq8);
  s.axis1 = {0.2, 0.3, 3, GridScale::linear};   // above kT_c(0)
  const PhaseBoundary b = trace_boundary(s);
  for (const auto& pt : b.points) {
    CHECK_FALSE(pt.critical.has_value());
    CHECK(pt.below == PhaseLabel::normal);
  }
}

TEST_CASE("threads do not change results") {
  SweepSpec s = free_spin_sweep(DetectorKind::response_criterion);
  s.threads = 1;
  const PhaseBoundary a = trace_boundary(s);
  s.threads = 4;
  const PhaseBoundary b = trace_boundary(s);
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].axis1 == b.points[i].axis1);
    CHECK(a.points[i].critical == b.points[i].critical);
  }
}

TEST_CASE("grid refinement leaves the boundary in place") {
  SweepSpec s = free_spin_sweep(DetectorKind::closed_form_eq8);
  s.axis1 = {0.06, 0.06, 1};
  const double coarse = *trace_boundary(s).points[0].critical;
  s.axis2.n_points = 400;
  const double fine = *trace_boundary(s).points[0].critical;
  CHECK(fine == doctest::Approx(coarse).epsilon(2e-6));
}

TEST_CASE("response detector on a small chain") {
  SweepSpec s;
  s.plane = Plane::J_vs_lambda;
  s.detector = DetectorKind::response_criterion;
  s.chain.n_sites = 6;
  s.chain.omega_z = 1.0;
  s.cavity.Omega = 1.0;
  s.axis1 = {-0.5, 0.5, 3, GridScale::linear};
  s.axis2 = {0.01, 2.0, 20, GridScale::linear};
  s.bisection_tol = 1e-8;
  const PhaseBoundary b = trace_boundary(s);
  REQUIRE(b.points[1].critical.has_value());
  // J = 0: free spins, lambda_c = sqrt(omega_z Omega)/2
  CHECK(*b.points[1].critical == doctest::Approx(0.5).epsilon(1e-7));
  // ferromagnetic J lowers the threshold, antiferromagnetic J raises it
  CHECK(*b.points[2].critical < *b.points[1].critical);
  CHECK(*b.points[0].critical > *b.points[1].critical);
}

TEST_CASE("sweep validation") {
  SweepSpec s = free_spin_sweep(DetectorKind::closed_form_eq8);
  s.bisection_tol = 0.1;
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s = free_spin_sweep(DetectorKind::closed_form_eq8);
  s.axis2.n_points = 1;
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s = free_spin_sweep(DetectorKind::response_criterion);
  s.plane = Plane::B_vs_T;
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s = free_spin_sweep(DetectorKind::closed_form_eq8);
  s.cavity.Omega = -1.0;
  CHECK_THROWS(validate(s));
}
