#include "cavity/phase.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include "cavity/response.hpp"
#include "cavity/spectra.hpp"
#include "cavity/spin.hpp"
#include "cavity/units.hpp"

namespace cavity {

std::vector<double> Grid::values() const {
  std::vector<double> out;
  if (n_points == 1) return {min};
  for (int i = 0; i < n_points; ++i) {
    const double t = static_cast<double>(i) / (n_points - 1);
    out.push_back(scale == GridScale::linear ? min + t * (max - min)
                                             : min * std::pow(max / min, t));
  }
  return out;
}

void validate(const Grid& grid, const std::string& name) {
  if (grid.n_points < 1) throw std::invalid_argument(name + ": n_points must be >= 1");
  if (grid.n_points > 1 && !(grid.max > grid.min))
    throw std::invalid_argument(name + ": grid must be strictly increasing");
  if (grid.scale == GridScale::log && !(grid.min > 0.0))
    throw std::invalid_argument(name + ": log grid needs min > 0");
}

void validate(const SweepSpec& spec) {
  validate(spec.axis1, "axis1");
  validate(spec.axis2, "axis2");
  if (spec.axis2.n_points < 2) throw std::invalid_argument("axis2: needs at least two points");
  if (!(spec.bisection_tol > 0.0 && spec.bisection_tol <= 1e-2))
    throw std::invalid_argument("bisection_tol must lie in (0, 1e-2]");
  if (spec.threshold < 0.0) throw std::invalid_argument("threshold must be > 0");
  validate(spec.cavity);
  const bool free_spins = spec.plane == Plane::omega_z_vs_T;
  if (spec.detector == DetectorKind::closed_form_eq8 && !free_spins)
    throw std::invalid_argument("closed_form_eq8 detector only applies to free spins");
  if (spec.detector == DetectorKind::response_criterion &&
      !(spec.plane == Plane::J_vs_lambda || spec.plane == Plane::omega_z_vs_T))
    throw std::invalid_argument("response_criterion detector needs a chain or free-spin plane");
  if (spec.plane == Plane::J_vs_lambda &&
      static_cast<int>(spec.chain.site_couplings.size()) != spec.chain.n_sites &&
      !spec.chain.site_couplings.empty())
    throw std::invalid_argument("chain coupling profile length must equal n_sites");
}

std::string to_string(Plane plane) {
  switch (plane) {
    case Plane::J_vs_lambda: return "J_vs_lambda";
    case Plane::B_vs_T: return "B_vs_T";
    case Plane::T_vs_B: return "T_vs_B";
    case Plane::omega_z_vs_T: return "omega_z_vs_T";
  }
  return "?";
}

std::string to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::mean_field_order_parameter: return "mean_field_order_parameter";
    case DetectorKind::response_criterion: return "response_criterion";
    case DetectorKind::closed_form_eq8: return "closed_form_eq8";
  }
  return "?";
}

std::string to_string(PhaseLabel label) {
  switch (label) {
    case PhaseLabel::normal: return "normal";
    case PhaseLabel::ordered: return "ordered";
    case PhaseLabel::failed: return "failed";
  }
  return "?";
}

void parallel_for(int n, int threads, const std::function<void(int)>& f) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            f(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

Bracket bisect_transition(const std::function<PhaseLabel(double)>& classify, double lo, double hi,
                          double rel_tol) {
  Bracket b{lo, hi, classify(lo), 0};
  const PhaseLabel hi_label = classify(hi);
  if (b.lo_label == PhaseLabel::failed || hi_label == PhaseLabel::failed ||
      b.lo_label == hi_label)
    throw std::invalid_argument("bisect_transition: endpoints must carry distinct valid labels");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (b.lo + b.hi);
    if (b.hi - b.lo <= rel_tol * std::abs(mid)) break;
    PhaseLabel label = classify(mid);
    if (label == PhaseLabel::failed) {
      // an unconverged probe sits at the transition within solver noise; count it as the high side
      ++b.failed_probes;
      label = b.lo_label == PhaseLabel::normal ? PhaseLabel::ordered : PhaseLabel::normal;
    }
    if (label == b.lo_label) b.lo = mid;
    else b.hi = mid;
  }
  return b;
}

namespace {

double default_threshold(const SweepSpec& spec, double S) {
  return spec.threshold > 0.0 ? spec.threshold : 1e-4 * S;
}

PhaseLabel classify_mean_field(const MeanFieldProblem& problem, OrderObservable observable,
                               double threshold) {
  const MeanFieldSolution sol = solve_selfconsistent(problem);
  const double order =
      observable == OrderObservable::uniform ? std::abs(sol.m_uniform) : std::abs(sol.m_stag);
  if (!sol.converged && order > threshold) return PhaseLabel::failed;
  return order > threshold ? PhaseLabel::ordered : PhaseLabel::normal;
}

MeanFieldProblem base_problem(const SweepSpec& spec) {
  MeanFieldProblem p;
  p.cavity = spec.cavity;
  p.cavity.rho.reset();
  p.cavity.nu.reset();
  p.sublattices = spec.sublattices;
  p.tol = spec.mf_tol;
  p.max_iter = spec.mf_max_iter;
  p.damping = spec.mf_damping;
  return p;
}

std::variant<IsingChainModel, GiantSpinModel> free_spin_model(double S, double omega_z) {
  if (S == 0.5) {
    IsingChainModel chain;
    chain.omega_z = omega_z;
    return chain;
  }
  // free spin with H = omega_z Sz, expressed as a giant spin in a field along -z
  GiantSpinModel g;
  g.S = S;
  g.phi = 0.0;
  g.B = rad_s_to_tesla(omega_z);
  return g;
}

std::vector<SiteCoupling> unit_profile(const IsingChainModel& chain) {
  if (chain.site_couplings.empty()) return uniform_couplings(chain.n_sites, 1.0);
  std::vector<double> lambdas;
  for (const auto& c : chain.site_couplings) lambdas.push_back(c.lambda);
  const double rms = rms_reduce(lambdas).lambda_bar;
  if (!(rms > 0.0)) throw std::invalid_argument("chain coupling profile must be non-zero");
  auto out = chain.site_couplings;
  for (auto& c : out) c.lambda /= rms;
  return out;
}

// Response at unit rms coupling of one chain slice; R scales as lambda_bar^2.
struct UnitResponse {
  double R = 0.0;
  bool truncated = false;
};

UnitResponse chain_unit_response(const SweepSpec& spec, double J) {
  IsingChainModel chain = spec.chain;
  chain.J = J;
  chain.site_couplings = unit_profile(spec.chain);
  const ChainOperators ops = build_chain_hamiltonian(chain);
  const double Omega = spec.cavity.Omega;
  if (chain.n_sites <= spec.dense_max_sites) {
    const Spectrum s = dense_eigh(CMatrix(ops.H_S));
    const ResponseResult r = static_response(s, ops.O, spec.kT, Omega);
    return {r.R, r.truncation_warning};
  }
  const LinearOperator H = as_operator(ops.H_S);
  const LinearOperator O = as_operator(ops.O);
  if (spec.kT == 0.0) {
    const KrylovResponse kr = krylov_zero_temperature_response(H, O, Omega, spec.krylov_dim,
                                                               spec.seed);
    return {kr.response.R, !kr.ground.all_converged()};
  }
  // finite temperature on a large chain: truncated thermal sum over low-lying states
  const Spectrum s = lanczos(H, std::min(32, spec.krylov_dim), spec.krylov_dim, spec.seed);
  const ResponseResult r = static_response(s, O, spec.kT, Omega);
  return {r.R, true};
}

}  // namespace

SliceDetector make_slice_detector(const SweepSpec& spec, double axis1) {
  auto truncated = std::make_shared<bool>(false);
  SliceDetector d;
  d.truncated = [truncated] { return *truncated; };

  switch (spec.plane) {
    case Plane::J_vs_lambda: {
      if (spec.detector == DetectorKind::response_criterion) {
        auto cache = std::make_shared<std::optional<UnitResponse>>();
        d.classify = [spec, axis1, cache, truncated](double lambda_bar) {
          if (!*cache) {
            *cache = chain_unit_response(spec, axis1);
            *truncated = (*cache)->truncated;
          }
          const double R = lambda_bar * lambda_bar * (*cache)->R;
          return make_response_result(R, spec.kT, spec.cavity.Omega, false).superradiant
                     ? PhaseLabel::ordered
                     : PhaseLabel::normal;
        };
        return d;
      }
      d.classify = [spec, axis1](double lambda_bar) {
        MeanFieldProblem p = base_problem(spec);
        IsingChainModel chain = spec.chain;
        chain.J = axis1;
        chain.geometry = ChainGeometry::all_to_all_normalized;
        p.model = chain;
        p.kT = spec.kT;
        p.cavity.lambda_bar = lambda_bar;
        return classify_mean_field(p, spec.observable, default_threshold(spec, 0.5));
      };
      return d;
    }
    case Plane::B_vs_T:
    case Plane::T_vs_B: {
      const bool slice_is_T = spec.plane == Plane::B_vs_T;
      d.classify = [spec, axis1, slice_is_T](double x) {
        MeanFieldProblem p = base_problem(spec);
        GiantSpinModel g = spec.giant;
        g.B = slice_is_T ? x : axis1;
        p.kT = slice_is_T ? axis1 : x;
        p.model = g;
        return classify_mean_field(p, spec.observable, default_threshold(spec, g.S));
      };
      return d;
    }
    case Plane::omega_z_vs_T: {
      const double kT = axis1;
      switch (spec.detector) {
        case DetectorKind::closed_form_eq8:
          d.classify = [spec, kT](double omega_z) {
            return spec.cavity.lambda_bar >=
                           dicke_critical_coupling(omega_z, spec.cavity.Omega, spec.spin, kT)
                       ? PhaseLabel::ordered
                       : PhaseLabel::normal;
          };
          return d;
        case DetectorKind::response_criterion:
          d.classify = [spec, kT](double omega_z) {
            const SpinOperatorSet s = spin_matrices(spec.spin);
            const Spectrum sp = dense_eigh(omega_z * s.Sz);
            const CMatrix O = 2.0 * spec.cavity.lambda_bar * s.Sx;
            return static_response(sp, as_operator(O), kT, spec.cavity.Omega).superradiant
                       ? PhaseLabel::ordered
                       : PhaseLabel::normal;
          };
          return d;
        case DetectorKind::mean_field_order_parameter:
          d.classify = [spec, kT](double omega_z) {
            MeanFieldProblem p = base_problem(spec);
            p.model = free_spin_model(spec.spin, omega_z);
            p.kT = kT;
            return classify_mean_field(p, spec.observable, default_threshold(spec, spec.spin));
          };
          return d;
      }
    }
  }
  throw std::invalid_argument("unsupported plane/detector combination");
}

PhaseBoundary trace_boundary(const SweepSpec& spec) {
  validate(spec);
  PhaseBoundary out;
  out.spec = spec;
  out.detector_label = to_string(spec.detector);
  const std::vector<double> slices = spec.axis1.values();
  const std::vector<double> probes = spec.axis2.values();
  out.points.resize(slices.size());

  parallel_for(static_cast<int>(slices.size()), spec.threads, [&](int i) {
    BoundaryPoint& pt = out.points[static_cast<std::size_t>(i)];
    pt.axis1 = slices[static_cast<std::size_t>(i)];
    SliceDetector det = make_slice_detector(spec, pt.axis1);
    PhaseLabel prev = PhaseLabel::failed;
    double prev_x = 0.0;
    for (double x : probes) {
      const PhaseLabel label = det.classify(x);
      if (label == PhaseLabel::failed) {
        ++pt.failed_probes;
        continue;
      }
      if (prev != PhaseLabel::failed && label != prev) {
        const Bracket b = bisect_transition(det.classify, prev_x, x, spec.bisection_tol);
        pt.bracket_lo = b.lo;
        pt.bracket_hi = b.hi;
        pt.bracket_width = b.hi - b.lo;
        pt.critical = 0.5 * (b.lo + b.hi);
        pt.below = b.lo_label;
        pt.failed_probes += b.failed_probes;
        break;
      }
      prev = label;
      prev_x = x;
      pt.below = label;
    }
    pt.truncation_warning = det.truncated();
  });

  for (const auto& pt : out.points) {
    if (pt.failed_probes > 0)
      out.warnings.push_back("slice " + std::to_string(pt.axis1) + ": " +
                             std::to_string(pt.failed_probes) + " unconverged probe(s)");
    if (pt.truncation_warning)
      out.warnings.push_back("slice " + std::to_string(pt.axis1) + ": response truncation");
  }
  return out;
}

}  // namespace cavity
