#include "cavity/experiments.hpp"

#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include <boost/version.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Core>
#include <fmt/format.h>

#include "cavity/linalg.hpp"
#include "cavity/meanfield.hpp"
#include "cavity/models.hpp"
#include "cavity/phase.hpp"
#include "cavity/response.hpp"
#include "cavity/transmission.hpp"
#include "cavity/units.hpp"

namespace cavity {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool same(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

CsvCell flag(bool b) { return static_cast<long long>(b ? 1 : 0); }

CsvCell optional_cell(const std::optional<double>& v) {
  return v ? CsvCell{*v} : CsvCell{std::string{}};
}

Grid read_grid(ExperimentConfig& cfg, const std::string& name, Dimension dim,
               std::optional<double> energy_scale = std::nullopt) {
  const std::string section = "grid." + name;
  Grid g;
  g.min = cfg.scalar(section, "min", dim, energy_scale);
  g.max = cfg.scalar(section, "max", dim, energy_scale);
  g.n_points = static_cast<int>(cfg.integer(section, "n"));
  const std::string scale = cfg.text_or(section, "scale").value_or("linear");
  if (scale == "linear") {
    g.scale = GridScale::linear;
  } else if (scale == "log") {
    g.scale = GridScale::log;
  } else {
    throw cfg.error(section, "scale", "scale must be 'linear' or 'log'");
  }
  try {
    validate(g, section);
  } catch (const std::invalid_argument& e) {
    throw cfg.error(section, "min", e.what());
  }
  return g;
}

Grid kelvin_grid_to_rad_s(Grid g) {
  g.min = kelvin_to_rad_s(g.min);
  g.max = kelvin_to_rad_s(g.max);
  return g;
}

struct MeanFieldSettings {
  double tol = 0.0;
  int max_iter = 10000;
  double damping = 0.5;
};

MeanFieldSettings read_meanfield(ExperimentConfig& cfg) {
  MeanFieldSettings s;
  s.tol = cfg.scalar_or("meanfield", "tol", Dimension::dimensionless, 0.0);
  s.max_iter = static_cast<int>(cfg.integer_or("meanfield", "max_iter", 10000));
  s.damping = cfg.scalar_or("meanfield", "damping", Dimension::dimensionless, 0.5);
  return s;
}

void apply(const MeanFieldSettings& s, SweepSpec& spec) {
  spec.mf_tol = s.tol;
  spec.mf_max_iter = s.max_iter;
  spec.mf_damping = s.damping;
}

OrderObservable read_observable(ExperimentConfig& cfg) {
  const std::string v = cfg.text_or("boundary", "observable").value_or("uniform");
  if (v == "uniform") return OrderObservable::uniform;
  if (v == "staggered") return OrderObservable::staggered;
  throw cfg.error("boundary", "observable", "observable must be 'uniform' or 'staggered'");
}

// Cavity from [cavity]: Omega plus either lambda_bar or rho with a nu list.
struct CavityInput {
  double Omega = 0.0;
  std::optional<double> lambda_bar;
  std::optional<double> rho;
  std::vector<double> nu;
};

CavityInput read_cavity(ExperimentConfig& cfg, bool allow_material) {
  CavityInput c;
  c.Omega = cfg.scalar("cavity", "Omega", Dimension::energy);
  if (!(c.Omega > 0.0)) throw cfg.error("cavity", "Omega", "Omega must be > 0");
  if (cfg.has("cavity", "lambda_bar"))
    c.lambda_bar = cfg.scalar("cavity", "lambda_bar", Dimension::energy, c.Omega);
  if (allow_material && cfg.has("cavity", "rho")) {
    if (c.lambda_bar) throw cfg.error("cavity", "rho", "give either lambda_bar or rho/nu");
    c.rho = cfg.scalar("cavity", "rho", Dimension::density);
    c.nu = cfg.quantity("cavity", "nu", Dimension::dimensionless).values;
    for (double nu : c.nu)
      if (!(nu >= 0.0 && nu <= 1.0)) throw cfg.error("cavity", "nu", "nu must lie in [0, 1]");
    if (!(*c.rho > 0.0)) throw cfg.error("cavity", "rho", "rho must be > 0");
  }
  return c;
}

CavitySpec cavity_for(const CavityInput& in, std::optional<double> nu) {
  if (nu && in.rho) return CavitySpec::from_material(*in.rho, *nu, in.Omega);
  return CavitySpec{in.Omega, in.lambda_bar.value_or(0.0), std::nullopt, std::nullopt};
}

void require_single_nu(const ExperimentConfig& cfg, const CavityInput& c) {
  if (c.rho && c.nu.size() != 1)
    throw cfg.error("cavity", "nu", "this experiment takes a single nu value");
}

std::vector<double> kelvin_list(ExperimentConfig& cfg, const std::string& section,
                                const std::string& key) {
  const auto q = cfg.quantity(section, key, Dimension::temperature);
  for (double t : q.values)
    if (!(t >= 0.0)) throw cfg.error(section, key, "temperature must be >= 0");
  return q.values;
}

json boundary_point_json(const BoundaryPoint& p) {
  json j{{"axis1", p.axis1},
         {"found", p.critical.has_value()},
         {"bracket_width", p.bracket_width},
         {"failed_probes", p.failed_probes}};
  j["critical"] = p.critical ? json(*p.critical) : json(nullptr);
  return j;
}

void append_warnings(std::vector<std::string>& out, const std::vector<std::string>& in,
                     const std::string& context) {
  for (const auto& w : in) out.push_back(context.empty() ? w : context + ": " + w);
}

// ---------------------------------------------------------------- dicke-critical

PreparedExperiment prepare_dicke(ExperimentConfig& cfg) {
  const CavityInput cav = read_cavity(cfg, false);
  const double S = cfg.scalar("spins", "S", Dimension::dimensionless);
  const double omega_z = cfg.scalar("spins", "omega_z", Dimension::energy, cav.Omega);
  const std::vector<double> temps = kelvin_list(cfg, "spins", "T");
  if (!(omega_z > 0.0)) throw cfg.error("spins", "omega_z", "omega_z must be > 0");
  if (!(S > 0.0) || std::abs(2.0 * S - std::round(2.0 * S)) > 1e-12)
    throw cfg.error("spins", "S", "S must be a positive half-integer");

  PreparedExperiment p;
  p.name = "dicke-critical";
  p.outputs = {"critical"};
  p.execute = [=] {
    ResultBundle b;
    CsvTable t{"critical", "table",
               {{"T", "K"}, {"kT", "rad/s"}, {"lambda_c", "rad/s"}, {"lambda_c_over_Omega", "1"}},
               {}};
    if (cav.lambda_bar) t.columns.push_back({"omega_z_c", "rad/s"});
    json lambdas = json::array();
    for (double T : temps) {
      const double kT = kelvin_to_rad_s(T);
      const double lc = dicke_critical_coupling(omega_z, cav.Omega, S, kT);
      std::vector<CsvCell> row{T, kT, lc, lc / cav.Omega};
      json entry{{"T", T}, {"lambda_c", lc}};
      if (cav.lambda_bar) {
        const auto wc = dicke_critical_omega_z(cav.Omega, S, *cav.lambda_bar, kT);
        row.push_back(optional_cell(wc));
        entry["omega_z_c"] = wc ? json(*wc) : json(nullptr);
      }
      t.rows.push_back(std::move(row));
      lambdas.push_back(entry);
    }
    b.results = {{"S", S}, {"omega_z", omega_z}, {"Omega", cav.Omega}, {"critical", lambdas}};
    if (cav.lambda_bar) {
      const double kTc = dicke_zero_field_critical_temperature(cav.Omega, S, *cav.lambda_bar);
      b.results["lambda_bar"] = *cav.lambda_bar;
      b.results["T_c0"] = rad_s_to_kelvin(kTc);
    }
    b.tables.push_back(std::move(t));
    return b;
  };
  return p;
}

// ---------------------------------------------------------------- lambda-bar

constexpr double kFe8Rho = 5.1e26;      // spins / m^3
constexpr double kFe8Omega = 1.4e9;     // rad/s

PreparedExperiment prepare_lambda_bar(ExperimentConfig& cfg) {
  const CavityInput cav = read_cavity(cfg, true);
  if (!cav.rho) throw cfg.error("cavity", "rho", "lambda-bar needs cavity.rho and cavity.nu");
  std::optional<std::vector<double>> sites;
  if (cfg.has("couplings", "lambda"))
    sites = cfg.quantity("couplings", "lambda", Dimension::energy, cav.Omega).values;

  PreparedExperiment p;
  p.name = "lambda-bar";
  p.outputs = {"lambda_bar"};
  p.execute = [=] {
    ResultBundle b;
    CsvTable t{"lambda_bar", "table",
               {{"nu", "1"},
                {"lambda_bar", "rad/s"},
                {"lambda_bar_over_Omega", "1"},
                {"J_cav", "rad/s"},
                {"J_cav_K", "K"},
                {"T_c0_spin_half", "K"}},
               {}};
    json rows = json::array();
    for (double nu : cav.nu) {
      const double lb = lambda_bar_from_material(*cav.rho, nu, cav.Omega);
      const double jcav = 4.0 * lb * lb / cav.Omega;
      const double tc = rad_s_to_kelvin(dicke_zero_field_critical_temperature(cav.Omega, 0.5, lb));
      t.rows.push_back({nu, lb, lb / cav.Omega, jcav, rad_s_to_kelvin(jcav), tc});
      rows.push_back({{"nu", nu}, {"lambda_bar", lb}});
    }
    b.results = {{"rho", *cav.rho}, {"Omega", cav.Omega}, {"lambda_bar", rows}};
    if (sites) {
      const RmsReduction r = rms_reduce(*sites);
      b.results["site_couplings"] = {{"lambda_bar", r.lambda_bar}, {"bound_gap", r.bound_gap}};
    }
    if (same(*cav.rho, kFe8Rho) && same(cav.Omega, kFe8Omega)) {
      constexpr double frozen = 6.0487910797905e8;
      for (double nu : cav.nu)
        if (nu == 1.0) {
          const double v = lambda_bar_from_material(*cav.rho, 1.0, cav.Omega);
          b.regressions.push_back({{"quantity", "lambda_bar(nu=1)"},
                                   {"unit", "rad/s"},
                                   {"value", v},
                                   {"frozen", frozen},
                                   {"rel_diff", std::abs(v - frozen) / frozen},
                                   {"origin", "self-regression, frozen on first run"}});
        }
    }
    b.tables.push_back(std::move(t));
    return b;
  };
  return p;
}

// ---------------------------------------------------------------- ising-phase-diagram

PreparedExperiment prepare_ising_mf(ExperimentConfig& cfg, const RunContext& ctx) {
  const CavityInput cav = read_cavity(cfg, false);
  SweepSpec spec;
  spec.plane = Plane::J_vs_lambda;
  spec.detector = DetectorKind::mean_field_order_parameter;
  spec.chain.omega_z = cfg.scalar("model", "omega_z", Dimension::energy, cav.Omega);
  spec.chain.geometry = ChainGeometry::all_to_all_normalized;
  spec.axis1 = read_grid(cfg, "J", Dimension::energy, cav.Omega);
  spec.axis2 = read_grid(cfg, "lambda", Dimension::energy, cav.Omega);
  spec.kT = kelvin_to_rad_s(cfg.scalar_or("meanfield", "T", Dimension::temperature, 0.0));
  const long long sub = cfg.integer_or("meanfield", "sublattices", 2);
  if (sub != 1 && sub != 2) throw cfg.error("meanfield", "sublattices", "sublattices must be 1 or 2");
  spec.sublattices = sub == 1 ? Sublattices::one : Sublattices::two;
  apply(read_meanfield(cfg), spec);
  spec.observable = read_observable(cfg);
  spec.bisection_tol = cfg.scalar_or("boundary", "bisection_tol", Dimension::dimensionless, 1e-3);
  spec.threshold = cfg.scalar_or("boundary", "threshold", Dimension::dimensionless, 0.0);
  spec.cavity = cavity_for(cav, std::nullopt);
  spec.threads = ctx.threads;
  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  PreparedExperiment p;
  p.name = "ising-phase-diagram";
  p.outputs = {"grid", "boundary"};
  p.execute = [spec] {
    ResultBundle b;
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> Js = spec.axis1.values();
    const std::vector<double> lambdas = spec.axis2.values();
    const std::size_t nl = lambdas.size();
    std::vector<MeanFieldSolution> sols(Js.size() * nl);
    parallel_for(static_cast<int>(sols.size()), spec.threads, [&](int k) {
      const std::size_t i = static_cast<std::size_t>(k) / nl;
      const std::size_t j = static_cast<std::size_t>(k) % nl;
      MeanFieldProblem prob;
      IsingChainModel chain = spec.chain;
      chain.J = Js[i];
      prob.model = chain;
      prob.cavity = spec.cavity;
      prob.cavity.lambda_bar = lambdas[j];
      prob.kT = spec.kT;
      prob.sublattices = spec.sublattices;
      prob.tol = spec.mf_tol;
      prob.max_iter = spec.mf_max_iter;
      prob.damping = spec.mf_damping;
      sols[static_cast<std::size_t>(k)] = solve_selfconsistent(prob);
    });
    CsvTable grid{"grid", "grid",
                  {{"J", "rad/s"},
                   {"lambda_bar", "rad/s"},
                   {"m_uniform", "1"},
                   {"m_staggered", "1"},
                   {"sz", "1"},
                   {"alpha_per_sqrtN", "1"},
                   {"photons_per_spin", "1"},
                   {"free_energy_per_spin", "rad/s"},
                   {"converged", "1"}},
                  {}};
    int unconverged = 0;
    for (std::size_t i = 0; i < Js.size(); ++i)
      for (std::size_t j = 0; j < nl; ++j) {
        const MeanFieldSolution& s = sols[i * nl + j];
        if (!s.converged) ++unconverged;
        grid.rows.push_back({Js[i], lambdas[j], s.m_uniform, s.m_stag, s.sz, s.alpha_per_sqrtN,
                             s.photons_per_spin, s.free_energy_per_spin, flag(s.converged)});
      }
    if (unconverged > 0)
      b.warnings.push_back(std::to_string(unconverged) + " unconverged mean-field grid point(s)");
    b.timings["grid_s"] = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    const PhaseBoundary boundary = trace_boundary(spec);
    b.timings["boundary_s"] = seconds_since(t1);
    CsvTable bt{"boundary", "boundary",
                {{"J", "rad/s"},
                 {"lambda_c", "rad/s"},
                 {"bracket_lo", "rad/s"},
                 {"bracket_hi", "rad/s"},
                 {"bracket_width", "rad/s"},
                 {"found", "1"},
                 {"below", ""},
                 {"failed_probes", "1"}},
                {}};
    json pts = json::array();
    for (const auto& pt : boundary.points) {
      bt.rows.push_back({pt.axis1, optional_cell(pt.critical), pt.bracket_lo, pt.bracket_hi,
                         pt.bracket_width, flag(pt.critical.has_value()), to_string(pt.below),
                         static_cast<long long>(pt.failed_probes)});
      pts.push_back(boundary_point_json(pt));
    }
    append_warnings(b.warnings, boundary.warnings, "boundary");
    b.results = {{"detector", boundary.detector_label},
                 {"observable", spec.observable == OrderObservable::uniform ? "uniform" : "staggered"},
                 {"sublattices", static_cast<int>(spec.sublattices)},
                 {"omega_z", spec.chain.omega_z},
                 {"Omega", spec.cavity.Omega},
                 {"kT", spec.kT},
                 {"boundary", pts}};
    b.tables.push_back(std::move(grid));
    b.tables.push_back(std::move(bt));
    return b;
  };
  return p;
}

// ---------------------------------------------------------------- ed-boundary

PreparedExperiment prepare_ed(ExperimentConfig& cfg, const RunContext& ctx) {
  const CavityInput cav = read_cavity(cfg, false);
  SweepSpec spec;
  spec.plane = Plane::J_vs_lambda;
  spec.detector = DetectorKind::response_criterion;
  spec.chain.n_sites = static_cast<int>(cfg.integer_or("model", "n_sites", 14));
  spec.chain.omega_z = cfg.scalar("model", "omega_z", Dimension::energy, cav.Omega);
  const std::string geometry = cfg.text_or("model", "geometry").value_or("pbc");
  if (geometry == "pbc") {
    spec.chain.geometry = ChainGeometry::nearest_neighbor_pbc;
  } else if (geometry == "all_to_all") {
    spec.chain.geometry = ChainGeometry::all_to_all_normalized;
  } else {
    throw cfg.error("model", "geometry", "geometry must be 'pbc' or 'all_to_all'");
  }
  if (spec.chain.n_sites < 1 || spec.chain.n_sites > kDefaultMaxSites)
    throw cfg.error("model", "n_sites",
                    "n_sites must lie in [1, " + std::to_string(kDefaultMaxSites) + "]");
  spec.axis1 = read_grid(cfg, "J", Dimension::energy, cav.Omega);
  spec.axis2 = read_grid(cfg, "lambda", Dimension::energy, cav.Omega);
  spec.kT = kelvin_to_rad_s(cfg.scalar_or("ed", "T", Dimension::temperature, 0.0));
  spec.krylov_dim = static_cast<int>(cfg.integer_or("ed", "krylov_dim", 60));
  spec.dense_max_sites = static_cast<int>(cfg.integer_or("ed", "dense_max_sites", 10));
  if (spec.krylov_dim < 4) throw cfg.error("ed", "krylov_dim", "krylov_dim must be >= 4");
  spec.bisection_tol = cfg.scalar_or("boundary", "bisection_tol", Dimension::dimensionless, 1e-3);
  spec.cavity = cavity_for(cav, std::nullopt);
  spec.seed = ctx.seed;
  spec.threads = ctx.threads;
  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  PreparedExperiment p;
  p.name = "ed-boundary";
  p.outputs = {"boundary"};
  p.execute = [spec] {
    ResultBundle b;
    const auto t0 = std::chrono::steady_clock::now();
    const PhaseBoundary boundary = trace_boundary(spec);
    b.timings["boundary_s"] = seconds_since(t0);
    const double free_lc =
        dicke_critical_coupling(spec.chain.omega_z, spec.cavity.Omega, 0.5, spec.kT);
    CsvTable bt{"boundary", "boundary",
                {{"J", "rad/s"},
                 {"lambda_c", "rad/s"},
                 {"bracket_lo", "rad/s"},
                 {"bracket_hi", "rad/s"},
                 {"bracket_width", "rad/s"},
                 {"found", "1"},
                 {"truncated", "1"}},
                {}};
    json pts = json::array();
    for (const auto& pt : boundary.points) {
      bt.rows.push_back({pt.axis1, optional_cell(pt.critical), pt.bracket_lo, pt.bracket_hi,
                         pt.bracket_width, flag(pt.critical.has_value()),
                         flag(pt.truncation_warning)});
      pts.push_back(boundary_point_json(pt));
    }
    append_warnings(b.warnings, boundary.warnings, "boundary");
    b.results = {{"detector", boundary.detector_label},
                 {"n_sites", spec.chain.n_sites},
                 {"krylov_dim", spec.krylov_dim},
                 {"seed", spec.seed},
                 {"omega_z", spec.chain.omega_z},
                 {"Omega", spec.cavity.Omega},
                 {"kT", spec.kT},
                 {"free_spin_lambda_c", free_lc},
                 {"boundary", pts}};
    b.tables.push_back(std::move(bt));
    return b;
  };
  return p;
}

// ---------------------------------------------------------------- fe8-boundary

struct FrozenTc {
  double nu;
  double T_c;   // K
};

// T_c(B = 0) for the Fe8 parameter set, frozen on first run
constexpr FrozenTc kFrozenFe8[] = {
    {0.0, 0.56916}, {0.1, 0.72857}, {0.25, 0.96710}, {0.5, 1.36124}, {1.0, 2.12771}};

bool is_fe8_reference(const GiantSpinModel& g, const CavityInput& cav) {
  const GiantSpinModel ref = fe8_model();
  return g.S == ref.S && same(g.D, ref.D) && same(g.E, ref.E) && same(g.J, ref.J) &&
         same(g.phi, ref.phi) && cav.rho && same(*cav.rho, kFe8Rho) &&
         same(cav.Omega, kFe8Omega);
}

PreparedExperiment prepare_fe8(ExperimentConfig& cfg, const RunContext& ctx) {
  const CavityInput cav = read_cavity(cfg, true);
  GiantSpinModel g;
  g.S = cfg.scalar("material", "S", Dimension::dimensionless);
  g.D = cfg.scalar("material", "D", Dimension::energy);
  g.E = cfg.scalar("material", "E", Dimension::energy);
  g.J = cfg.scalar("material", "J", Dimension::energy);
  g.phi = cfg.scalar("material", "phi", Dimension::angle);
  if (!(g.S > 0.0) || std::abs(2.0 * g.S - std::round(2.0 * g.S)) > 1e-12)
    throw cfg.error("material", "S", "S must be a positive half-integer");

  SweepSpec base;
  base.giant = g;
  base.detector = DetectorKind::mean_field_order_parameter;
  base.sublattices = Sublattices::one;
  apply(read_meanfield(cfg), base);
  base.bisection_tol = cfg.scalar_or("boundary", "bisection_tol", Dimension::dimensionless, 1e-3);
  base.threshold = cfg.scalar_or("boundary", "threshold", Dimension::dimensionless, 0.0);
  base.threads = ctx.threads;
  const Grid b_grid = read_grid(cfg, "B", Dimension::field);
  const Grid t_grid = kelvin_grid_to_rad_s(read_grid(cfg, "T", Dimension::temperature));

  std::vector<std::optional<double>> nus;
  if (cav.rho) {
    for (double nu : cav.nu) nus.emplace_back(nu);
  } else {
    nus.emplace_back(std::nullopt);
  }

  // fixed-B slices bisect T; one fixed-T slice at T = 0 bisects B
  std::vector<SweepSpec> t_sweeps, b_sweeps;
  for (const auto& nu : nus) {
    SweepSpec s = base;
    s.cavity = cavity_for(cav, nu);
    s.plane = Plane::T_vs_B;
    s.axis1 = b_grid;
    s.axis2 = t_grid;
    SweepSpec z = s;
    z.plane = Plane::B_vs_T;
    z.axis1 = Grid{0.0, 0.0, 1, GridScale::linear};
    z.axis2 = b_grid;
    try {
      validate(s);
      validate(z);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    t_sweeps.push_back(s);
    b_sweeps.push_back(z);
  }
  const bool reference = is_fe8_reference(g, cav);

  PreparedExperiment p;
  p.name = "fe8-boundary";
  p.outputs = {"boundary"};
  p.execute = [=] {
    ResultBundle b;
    const auto t0 = std::chrono::steady_clock::now();
    CsvTable bt{"boundary", "boundary",
                {{"nu", "1"},
                 {"lambda_bar", "rad/s"},
                 {"B", "T"},
                 {"T_c", "K"},
                 {"bracket_B", "T"},
                 {"bracket_T", "K"},
                 {"found", "1"},
                 {"failed_probes", "1"},
                 {"slice", ""}},
                {}};
    json per_nu = json::array();
    std::optional<double> bare_tc;
    for (std::size_t k = 0; k < t_sweeps.size(); ++k) {
      const SweepSpec& s = t_sweeps[k];
      const CsvCell nu_cell = nus[k] ? CsvCell{*nus[k]} : CsvCell{std::string{}};
      const std::string ctx_label =
          nus[k] ? fmt::format("nu={}", *nus[k]) : std::string("lambda_bar");
      const PhaseBoundary tb = trace_boundary(s);
      append_warnings(b.warnings, tb.warnings, ctx_label);
      std::optional<double> tc_b0;
      for (const auto& pt : tb.points) {
        std::optional<double> tc;
        if (pt.critical) tc = rad_s_to_kelvin(*pt.critical);
        if (pt.axis1 == 0.0) tc_b0 = tc;
        bt.rows.push_back({nu_cell, s.cavity.lambda_bar, pt.axis1, optional_cell(tc), 0.0,
                           rad_s_to_kelvin(pt.bracket_width), flag(tc.has_value()),
                           static_cast<long long>(pt.failed_probes), std::string("fixed_B")});
      }
      const PhaseBoundary zb = trace_boundary(b_sweeps[k]);
      append_warnings(b.warnings, zb.warnings, ctx_label + " T=0");
      const BoundaryPoint& z = zb.points.front();
      bt.rows.push_back({nu_cell, s.cavity.lambda_bar, optional_cell(z.critical),
                         z.critical ? CsvCell{0.0} : CsvCell{std::string{}}, z.bracket_width, 0.0,
                         flag(z.critical.has_value()), static_cast<long long>(z.failed_probes),
                         std::string("fixed_T")});
      json entry{{"lambda_bar", s.cavity.lambda_bar},
                 {"J_cav_K", rad_s_to_kelvin(4.0 * s.cavity.lambda_bar * s.cavity.lambda_bar /
                                             s.cavity.Omega)}};
      entry["nu"] = nus[k] ? json(*nus[k]) : json(nullptr);
      entry["T_c_B0"] = tc_b0 ? json(*tc_b0) : json(nullptr);
      entry["B_c_T0"] = z.critical ? json(*z.critical) : json(nullptr);
      if (!tc_b0) b.warnings.push_back(ctx_label + ": no T_c found at B = 0 (grid.B must start at 0)");
      if (nus[k] && *nus[k] == 0.0) bare_tc = tc_b0;
      per_nu.push_back(entry);

      if (reference && nus[k] && tc_b0)
        for (const auto& f : kFrozenFe8)
          if (f.nu == *nus[k]) {
            const double rel = std::abs(*tc_b0 - f.T_c) / f.T_c;
            b.regressions.push_back({{"quantity", "T_c(B=0)"},
                                     {"nu", f.nu},
                                     {"unit", "K"},
                                     {"value", *tc_b0},
                                     {"frozen", f.T_c},
                                     {"rel_diff", rel},
                                     {"origin", "self-regression, frozen on first run"}});
            if (rel > 2.0 * s.bisection_tol)
              b.warnings.push_back(ctx_label + ": T_c(B=0) moved away from the frozen value");
          }
    }
    if (bare_tc)
      for (auto& e : per_nu)
        if (e["T_c_B0"].is_number()) e["T_c_ratio"] = e["T_c_B0"].get<double>() / *bare_tc;
    b.results = {{"S", base.giant.S}, {"per_nu", per_nu}};
    b.timings["boundary_s"] = seconds_since(t0);
    b.tables.push_back(std::move(bt));
    return b;
  };
  return p;
}

// ---------------------------------------------------------------- transmission-map

PreparedExperiment prepare_transmission(ExperimentConfig& cfg, const RunContext& ctx) {
  const CavityInput cav = read_cavity(cfg, true);
  require_single_nu(cfg, cav);
  const CavitySpec cavity = cavity_for(cav, cav.rho ? std::optional(cav.nu.front()) : std::nullopt);
  const double kappa = cfg.scalar("transmission", "kappa", Dimension::energy, cav.Omega);
  const double gamma = cfg.scalar("transmission", "gamma", Dimension::energy, cav.Omega);
  const std::vector<double> temps = kelvin_list(cfg, "transmission", "T");
  if (!(kappa > 0.0)) throw cfg.error("transmission", "kappa", "kappa must be > 0");
  if (!(gamma >= 0.0)) throw cfg.error("transmission", "gamma", "gamma must be >= 0");
  const Grid w_grid = read_grid(cfg, "omega", Dimension::energy, cav.Omega);
  const Grid wz_grid = read_grid(cfg, "omega_z", Dimension::energy, cav.Omega);
  if (!(wz_grid.min > 0.0)) throw cfg.error("grid.omega_z", "min", "omega_z must be > 0");

  PreparedExperiment p;
  p.name = "transmission-map";
  for (std::size_t i = 0; i < temps.size(); ++i) {
    p.outputs.push_back(fmt::format("transmission_T{}", i));
    p.outputs.push_back(fmt::format("columns_T{}", i));
  }
  const int threads = ctx.threads;
  p.execute = [=] {
    ResultBundle b;
    const auto t0 = std::chrono::steady_clock::now();
    const double kTc = dicke_zero_field_critical_temperature(cavity.Omega, 0.5, cavity.lambda_bar);
    json maps = json::array();
    for (std::size_t i = 0; i < temps.size(); ++i) {
      const double kT = kelvin_to_rad_s(temps[i]);
      const TransmissionGrid tg =
          transmission_map(w_grid.values(), wz_grid.values(), kT, cavity, kappa, gamma, threads);
      const std::string label = fmt::format("T={} K", temps[i]);
      append_warnings(b.warnings, tg.warnings, label);
      CsvTable tt{fmt::format("transmission_T{}", i), "grid",
                  {{"omega_z", "rad/s"},
                   {"omega", "rad/s"},
                   {"abs_t", "1"},
                   {"re_t", "1"},
                   {"im_t", "1"}},
                  {}};
      CsvTable ct{fmt::format("columns_T{}", i), "columns",
                  {{"omega_z", "rad/s"},
                   {"sz0", "1"},
                   {"sx0", "1"},
                   {"superradiant", "1"},
                   {"ordered", "1"},
                   {"converged", "1"}},
                  {}};
      int n_super = 0;
      for (Eigen::Index r = 0; r < tg.t.rows(); ++r) {
        const TransmissionColumn& c = tg.columns[static_cast<std::size_t>(r)];
        n_super += c.superradiant ? 1 : 0;
        ct.rows.push_back({c.omega_z, c.sz0, c.sx0, flag(c.superradiant), flag(c.ordered),
                           flag(c.converged)});
        for (Eigen::Index k = 0; k < tg.t.cols(); ++k) {
          const Complex t = tg.t(r, k);
          tt.rows.push_back({c.omega_z, tg.omega_grid[static_cast<std::size_t>(k)], std::abs(t),
                             t.real(), t.imag()});
        }
      }
      const auto wc = dicke_critical_omega_z(cavity.Omega, 0.5, cavity.lambda_bar, kT);
      json m{{"T", temps[i]},
             {"kT", kT},
             {"superradiant_columns", n_super},
             {"transmission_file", tt.name},
             {"columns_file", ct.name}};
      m["omega_z_c"] = wc ? json(*wc) : json(nullptr);
      maps.push_back(m);
      b.tables.push_back(std::move(tt));
      b.tables.push_back(std::move(ct));
    }
    b.results = {{"lambda_bar", cavity.lambda_bar},
                 {"Omega", cavity.Omega},
                 {"kappa", kappa},
                 {"gamma", gamma},
                 {"T_c0", rad_s_to_kelvin(kTc)},
                 {"maps", maps}};
    b.timings["maps_s"] = seconds_since(t0);
    return b;
  };
  return p;
}

json versions_json() {
  return {{"cavity-spt", kToolVersion},
          {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                                EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"fmt", FMT_VERSION},
          {"openssl", OPENSSL_VERSION_TEXT},
          {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR,
                                        NLOHMANN_JSON_VERSION_MINOR, NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

json config_echo(const ExperimentConfig& cfg, const std::string& path, const std::string& text) {
  json quantities = json::object();
  for (const auto& [key, q] : cfg.echo()) {
    quantities[key] = {{"raw", q.raw},
                       {"unit", q.unit},
                       {"factor", q.factor},
                       {"internal", q.values},
                       {"internal_unit", internal_unit(q.dimension)}};
  }
  return {{"path", path},
          {"sha256", sha256_hex(text)},
          {"entries", cfg.entries()},
          {"quantities", quantities}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

std::string csv_text(const CsvTable& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += quote_field(table.columns[c].name);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw std::logic_error("csv row width does not match the header of " + table.name);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      std::visit(
          [&out](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              out += format_double(v);
            } else if constexpr (std::is_same_v<T, long long>) {
              out += std::to_string(v);
            } else {
              out += quote_field(v);
            }
          },
          row[c]);
    }
    out += '\n';
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
  return out;
}

std::vector<std::string> experiment_names() {
  return {"dicke-critical", "lambda-bar", "ising-phase-diagram", "ed-boundary", "fe8-boundary",
          "transmission-map"};
}

PreparedExperiment prepare_experiment(ExperimentConfig& cfg, const RunContext& ctx) {
  const std::string name = cfg.text("experiment", "name");
  // run-level keys are resolved by the caller; mark them read
  (void)cfg.text_or("experiment", "out");
  (void)cfg.text_or("experiment", "seed");
  (void)cfg.text_or("experiment", "threads");
  PreparedExperiment p;
  if (name == "dicke-critical") {
    p = prepare_dicke(cfg);
  } else if (name == "lambda-bar") {
    p = prepare_lambda_bar(cfg);
  } else if (name == "ising-phase-diagram") {
    p = prepare_ising_mf(cfg, ctx);
  } else if (name == "ed-boundary") {
    p = prepare_ed(cfg, ctx);
  } else if (name == "fe8-boundary") {
    p = prepare_fe8(cfg, ctx);
  } else if (name == "transmission-map") {
    p = prepare_transmission(cfg, ctx);
  } else {
    throw cfg.error("experiment", "name", "unknown experiment '" + name + "'");
  }
  cfg.reject_unused();
  return p;
}

ResultBundle run_experiment(ExperimentConfig& cfg, const RunContext& ctx) {
  PreparedExperiment p = prepare_experiment(cfg, ctx);
  ResultBundle b = p.execute();
  b.experiment = p.name;
  return b;
}

namespace {

int resolve_threads(const RunOptions& options, ExperimentConfig& cfg) {
  long long threads = 1;
  if (options.threads) {
    threads = *options.threads;
  } else if (const char* env = std::getenv("CAVITY_SPT_THREADS"); env && *env) {
    char* end = nullptr;
    threads = std::strtoll(env, &end, 10);
    if (*end != '\0') throw std::invalid_argument("CAVITY_SPT_THREADS must be an integer");
  } else {
    threads = cfg.integer_or("experiment", "threads", 1);
  }
  if (threads < 1) throw std::invalid_argument("thread count must be >= 1");
  return static_cast<int>(threads);
}

std::uint64_t resolve_seed(const RunOptions& options, ExperimentConfig& cfg) {
  if (options.seed) return *options.seed;
  const long long seed = cfg.integer_or("experiment", "seed", 1);
  if (seed < 0) throw cfg.error("experiment", "seed", "seed must be >= 0");
  return static_cast<std::uint64_t>(seed);
}

}  // namespace

WrittenBundle run(const std::string& config_path, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string text = read_file(config_path);
  ExperimentConfig cfg = ExperimentConfig::parse(text);

  RunContext ctx;
  ctx.threads = resolve_threads(options, cfg);
  ctx.seed = resolve_seed(options, cfg);
  std::string prefix;
  if (options.out_prefix) {
    prefix = *options.out_prefix;
  } else if (auto out = cfg.text_or("experiment", "out")) {
    prefix = *out;
  } else {
    throw cfg.error("experiment", "out", "no output prefix: pass --out or set experiment.out");
  }

  PreparedExperiment prepared = prepare_experiment(cfg, ctx);
  const fs::path manifest_path = prefix + "_manifest.json";
  std::vector<fs::path> targets;
  for (const auto& name : prepared.outputs) targets.emplace_back(prefix + "_" + name + ".csv");
  targets.push_back(manifest_path);
  if (!options.overwrite)
    for (const auto& t : targets)
      if (fs::exists(t))
        throw OutputCollision("output file exists: '" + t.string() + "' (use --overwrite)");

  const auto t_compute = std::chrono::steady_clock::now();
  ResultBundle bundle = prepared.execute();
  bundle.experiment = prepared.name;
  const double compute_s = seconds_since(t_compute);

  if (manifest_path.has_parent_path()) fs::create_directories(manifest_path.parent_path());
  WrittenBundle written;
  json files = json::array();
  for (const auto& table : bundle.tables) {
    const fs::path path = prefix + "_" + table.name + ".csv";
    const std::string bytes = csv_text(table);
    write_file(path, bytes);
    json cols = json::array();
    for (const auto& c : table.columns) cols.push_back({{"name", c.name}, {"unit", c.unit}});
    files.push_back({{"name", table.name},
                     {"path", path.filename().string()},
                     {"role", table.role},
                     {"sha256", sha256_hex(bytes)},
                     {"bytes", bytes.size()},
                     {"rows", table.rows.size()},
                     {"columns", cols}});
    written.files.push_back(path.string());
  }

  json timings = bundle.timings;
  timings["compute_s"] = compute_s;
  timings["total_s"] = seconds_since(t0);
  json manifest{{"experiment", bundle.experiment},
                {"versions", versions_json()},
                {"run", {{"threads", ctx.threads}, {"seed", ctx.seed}, {"overwrite", options.overwrite}}},
                {"config", config_echo(cfg, config_path, text)},
                {"units",
                 {{"energy", "rad/s (hbar = 1)"},
                  {"temperature", "K"},
                  {"field", "T"},
                  {"density", "m^-3"},
                  {"angle", "rad"},
                  {"kT", "k_B T / hbar in rad/s"}}},
                {"files", files},
                {"results", bundle.results},
                {"regressions", bundle.regressions},
                {"warnings", bundle.warnings},
                {"timings", timings}};
  write_file(manifest_path, manifest.dump(2) + "\n");
  written.manifest_path = manifest_path.string();
  return written;
}

json error_record(const std::exception& e) {
  json err{{"message", e.what()}};
  if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
    err["kind"] = "config";
    if (c->line() > 0) err["line"] = c->line();
    if (!c->key().empty()) err["key"] = c->key();
  } else if (dynamic_cast<const OutputCollision*>(&e)) {
    err["kind"] = "output_collision";
  } else if (dynamic_cast<const ResourceLimitError*>(&e)) {
    err["kind"] = "resource_limit";
  } else if (dynamic_cast<const std::invalid_argument*>(&e)) {
    err["kind"] = "invalid_argument";
  } else {
    err["kind"] = "runtime";
  }
  return {{"error", err}};
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return 2;
  if (dynamic_cast<const OutputCollision*>(&e)) return 3;
  if (dynamic_cast<const ResourceLimitError*>(&e)) return 4;
  return 1;
}

}  // namespace cavity
