#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cavity/meanfield.hpp"
#include "cavity/models.hpp"

namespace cavity {

/// Planes are named "<axis2>_vs_<axis1>"-agnostic; what matters is which axis is
/// bisected. axis1 is the slice axis, axis2 the bisected one.
enum class Plane {
  J_vs_lambda,    // axis1 J (rad/s), axis2 lambda_bar (rad/s)
  B_vs_T,         // axis1 k_B T/hbar (rad/s), axis2 B (Tesla)
  T_vs_B,         // axis1 B (Tesla), axis2 k_B T/hbar (rad/s)
  omega_z_vs_T,   // axis1 k_B T/hbar (rad/s), axis2 omega_z (rad/s)
};

enum class DetectorKind { mean_field_order_parameter, response_criterion, closed_form_eq8 };
enum class OrderObservable { uniform, staggered };
enum class GridScale { linear, log };

struct Grid {
  double min = 0.0;
  double max = 1.0;
  int n_points = 2;
  GridScale scale = GridScale::linear;

  std::vector<double> values() const;
};

void validate(const Grid& grid, const std::string& name);

struct SweepSpec {
  Plane plane = Plane::J_vs_lambda;
  Grid axis1;
  Grid axis2;
  DetectorKind detector = DetectorKind::mean_field_order_parameter;
  OrderObservable observable = OrderObservable::uniform;
  Sublattices sublattices = Sublattices::one;
  double threshold = 0.0;        // <= 0 selects 1e-4 * S
  double bisection_tol = 1e-3;   // relative bracket width

  // fixed parameters; the swept axes override the matching fields
  IsingChainModel chain;         // J_vs_lambda: n_sites, omega_z, geometry, coupling profile
  GiantSpinModel giant;          // B_vs_T, T_vs_B
  double spin = 0.5;             // omega_z_vs_T: free spin S
  CavitySpec cavity;
  double kT = 0.0;               // J_vs_lambda temperature
  double mf_tol = 0.0;
  int mf_max_iter = 10000;
  double mf_damping = 0.5;
  int krylov_dim = 60;
  std::uint64_t seed = 1;
  int dense_max_sites = 10;      // chains up to this size use dense diagonalization
  int threads = 1;
};

void validate(const SweepSpec& spec);

enum class PhaseLabel { normal, ordered, failed };

struct BoundaryPoint {
  double axis1 = 0.0;
  std::optional<double> critical;   // empty: no sign change on the axis2 grid
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double bracket_width = 0.0;
  PhaseLabel below = PhaseLabel::failed;   // phase at the low side of the bracket
  int failed_probes = 0;
  bool truncation_warning = false;
};

struct PhaseBoundary {
  std::vector<BoundaryPoint> points;
  SweepSpec spec;
  std::string detector_label;
  std::vector<std::string> warnings;
};

/// Bisects every axis1 slice between the first pair of axis2 grid points whose
/// detector outcomes disagree. Slices run in parallel; output is in axis1 order.
PhaseBoundary trace_boundary(const SweepSpec& spec);

/// Detector for one axis1 slice as a function of axis2.
struct SliceDetector {
  std::function<PhaseLabel(double)> classify;
  std::function<bool()> truncated;
};
SliceDetector make_slice_detector(const SweepSpec& spec, double axis1);

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  PhaseLabel lo_label = PhaseLabel::failed;
  int failed_probes = 0;
};

/// Shrinks [lo, hi] (labels must differ at the ends) until hi - lo <= rel_tol * |midpoint|.
Bracket bisect_transition(const std::function<PhaseLabel(double)>& classify, double lo,
                          double hi, double rel_tol);

std::string to_string(Plane plane);
std::string to_string(DetectorKind kind);
std::string to_string(PhaseLabel label);

/// Runs f(i) for i in [0, n) on up to `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int)>& f);

}  // namespace cavity
