#include "cavity/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "cavity/spin.hpp"

namespace cavity {

namespace {

struct ThermalState {
  double free_energy = 0.0;
  double sx = 0.0;
  double sz = 0.0;
};

ThermalState thermal_state(const CMatrix& H, const CMatrix& Sx, const CMatrix& Sz, double kT) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
  const RVector& e = es.eigenvalues();
  const CMatrix& v = es.eigenvectors();
  const double scale = std::max(1.0, e.cwiseAbs().maxCoeff());
  RVector w(e.size());
  ThermalState out;
  if (kT == 0.0) {
    for (Eigen::Index i = 0; i < e.size(); ++i) w(i) = (e(i) - e(0) <= 1e-12 * scale) ? 1.0 : 0.0;
    out.free_energy = e(0);
  } else {
    w = (-(e.array() - e(0)) / kT).exp();
    out.free_energy = e(0) - kT * std::log(w.sum());
  }
  w /= w.sum();
  const CMatrix sx_diag = v.adjoint() * Sx * v;
  const CMatrix sz_diag = v.adjoint() * Sz * v;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (w(i) == 0.0) continue;
    out.sx += w(i) * sx_diag(i, i).real();
    out.sz += w(i) * sz_diag(i, i).real();
  }
  return out;
}

int n_sub(const MeanFieldProblem& p) { return static_cast<int>(p.sublattices); }

}  // namespace

SiteModel site_model(const MeanFieldProblem& problem) {
  SiteModel site;
  site.J_cav = 4.0 * problem.cavity.lambda_bar * problem.cavity.lambda_bar / problem.cavity.Omega;
  if (const auto* ising = std::get_if<IsingChainModel>(&problem.model)) {
    const SpinOperatorSet s = spin_matrices(0.5);
    site.S = 0.5;
    site.h0 = ising->omega_z * s.Sz;
    site.Sx = s.Sx;
    site.Sz = s.Sz;
    site.J = ising->J;
  } else {
    const auto& giant = std::get<GiantSpinModel>(problem.model);
    const SpinOperatorSet s = spin_matrices(giant.S);
    site.S = s.S;
    site.h0 = giant_spin_hamiltonian(giant);
    site.Sx = s.Sx;
    site.Sz = s.Sz;
    site.J = giant.J;
  }
  return site;
}

void validate(const MeanFieldProblem& problem) {
  validate(problem.cavity);
  if (!(problem.kT >= 0.0)) throw std::invalid_argument("mean field: temperature must be >= 0");
  if (!(problem.damping > 0.0 && problem.damping <= 1.0))
    throw std::invalid_argument("mean field: damping must lie in (0, 1]");
  if (problem.tol < 0.0) throw std::invalid_argument("mean field: tol must be > 0");
  if (problem.max_iter < 1) throw std::invalid_argument("mean field: max_iter must be >= 1");
  for (const auto& init : problem.init)
    if (static_cast<int>(init.size()) != n_sub(problem))
      throw std::invalid_argument("mean field: init length must match the sublattice count");
}

namespace {

std::vector<CMatrix> hamiltonians(const SiteModel& site, Sublattices sub,
                                  std::span<const double> m) {
  const auto dim = site.h0.rows();
  const CMatrix id = CMatrix::Identity(dim, dim);
  if (sub == Sublattices::one) {
    const double j_eff = site.J + site.J_cav;
    return {site.h0 - 2.0 * j_eff * m[0] * site.Sx + j_eff * m[0] * m[0] * id};
  }
  const double mbar = 0.5 * (m[0] + m[1]);
  const double constant = site.J * m[0] * m[1] + site.J_cav * mbar * mbar;
  std::vector<CMatrix> out;
  for (int a = 0; a < 2; ++a) {
    const double field = site.J * m[1 - a] + site.J_cav * mbar;
    out.push_back(site.h0 - 2.0 * field * site.Sx + constant * id);
  }
  return out;
}

}  // namespace

std::vector<CMatrix> site_hamiltonian(const MeanFieldProblem& problem,
                                      std::span<const double> m) {
  if (static_cast<int>(m.size()) != n_sub(problem))
    throw std::invalid_argument("site_hamiltonian: order parameter count mismatch");
  return hamiltonians(site_model(problem), problem.sublattices, m);
}

double thermal_expectation(const CMatrix& H, const CMatrix& O, double kT) {
  if (!(kT >= 0.0)) throw std::invalid_argument("thermal_expectation: temperature must be >= 0");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if (hermiticity_defect(H) > 1e-10 * scale)
    throw std::invalid_argument("thermal_expectation: H is not hermitian");
  return thermal_state(H, O, O, kT).sx;
}

namespace {

struct Branch {
  std::vector<double> m;
  double free_energy = 0.0;
  double sz = 0.0;
  bool converged = false;
  bool stable = true;
  int iterations = 0;
  double residual = 0.0;
};

Branch evaluate(const SiteModel& site, Sublattices sub, std::span<const double> m, double kT) {
  Branch b;
  const auto hs = hamiltonians(site, sub, m);
  double f = 0.0, sz = 0.0, res = 0.0;
  for (std::size_t a = 0; a < hs.size(); ++a) {
    const ThermalState t = thermal_state(hs[a], site.Sx, site.Sz, kT);
    f += t.free_energy;
    sz += t.sz;
    b.m.push_back(t.sx);
    res = std::max(res, std::abs(t.sx - m[a]));
  }
  b.free_energy = f / static_cast<double>(hs.size());
  b.sz = sz / static_cast<double>(hs.size());
  b.residual = res;
  return b;
}

// Aitken extrapolation from three consecutive iterates; empty when ill-conditioned.
std::optional<std::vector<double>> aitken(const std::vector<double>& m0,
                                          const std::vector<double>& m1,
                                          const std::vector<double>& m2) {
  std::vector<double> out(m2.size());
  for (std::size_t a = 0; a < m2.size(); ++a) {
    const double d1 = m1[a] - m0[a];
    const double d2 = m2[a] - m1[a];
    const double curv = d2 - d1;
    const double size = std::max({std::abs(m0[a]), std::abs(m1[a]), std::abs(m2[a])});
    // differences below the rounding level of the iterates carry no rate information
    if (std::abs(curv) <= 64.0 * std::numeric_limits<double>::epsilon() * size)
      return std::nullopt;
    out[a] = m2[a] - d2 * d2 / curv;
    if (out[a] * m2[a] < 0.0) return std::nullopt;
  }
  return out;
}

// d<Sx>_a/dm_b by central differences.
Eigen::MatrixXd response_jacobian(const SiteModel& site, Sublattices sub,
                                  const std::vector<double>& m, double kT) {
  const auto n = static_cast<Eigen::Index>(m.size());
  const double h = 1e-6 * site.S;
  Eigen::MatrixXd jac(n, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    std::vector<double> up = m, dn = m;
    up[b] += h;
    dn[b] -= h;
    const Branch fu = evaluate(site, sub, up, kT);
    const Branch fd = evaluate(site, sub, dn, kT);
    for (Eigen::Index a = 0; a < n; ++a) jac(a, b) = (fu.m[a] - fd.m[a]) / (2.0 * h);
  }
  return jac;
}

// Newton step on r(m) = <Sx>(m) - m. Works where the iterates stall below the rounding
// level of m but the residual is still resolved.
std::optional<std::vector<double>> newton(const SiteModel& site, Sublattices sub,
                                          const std::vector<double>& m, const Branch& at,
                                          double kT) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::VectorXd r(n);
  for (Eigen::Index a = 0; a < n; ++a) r(a) = at.m[a] - m[a];
  const Eigen::MatrixXd jac =
      response_jacobian(site, sub, m, kT) - Eigen::MatrixXd::Identity(n, n);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::VectorXd step = lu.solve(r);
  std::vector<double> out(m.size());
  for (Eigen::Index a = 0; a < n; ++a) {
    out[a] = m[a] - step(a);
    if (!std::isfinite(out[a]) || out[a] * m[a] < 0.0) return std::nullopt;
  }
  return out;
}

// A fixed point is unstable when the map m -> <Sx>(m) expands some direction.
bool linearly_stable(const SiteModel& site, Sublattices sub, const std::vector<double>& m,
                     double kT) {
  const Eigen::MatrixXd jac = response_jacobian(site, sub, m, kT);
  const Eigen::VectorXcd ev = jac.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i).real() > 1.0 + 1e-9) return false;
  return true;
}

Branch iterate(const SiteModel& site, const MeanFieldProblem& p, std::vector<double> m,
               double tol) {
  // plain damped fixed-point steps; near a transition the contraction rate tends to one,
  // so every third step tries an extrapolated point and keeps it if the residual drops
  std::vector<std::vector<double>> history;
  for (int it = 1; it <= p.max_iter; ++it) {
    Branch next = evaluate(site, p.sublattices, m, p.kT);
    next.iterations = it;
    if (next.residual <= tol) {
      next.m = m;
      next.converged = true;
      return next;
    }
    history.push_back(m);
    if (history.size() == 3) {
      const auto cand = aitken(history[0], history[1], history[2]);
      history.clear();
      if (cand) {
        const Branch trial = evaluate(site, p.sublattices, *cand, p.kT);
        if (trial.residual < next.residual) {
          m = *cand;
          continue;
        }
      }
      // iterates that no longer resolve the contraction rate: step on the residual instead
      const auto nc = cand ? std::nullopt : newton(site, p.sublattices, m, next, p.kT);
      if (nc) {
        const Branch trial = evaluate(site, p.sublattices, *nc, p.kT);
        if (trial.residual < next.residual) {
          m = *nc;
          continue;
        }
      }
    }
    for (std::size_t a = 0; a < m.size(); ++a)
      m[a] = (1.0 - p.damping) * m[a] + p.damping * next.m[a];
  }
  Branch out = evaluate(site, p.sublattices, m, p.kT);
  out.m = m;
  out.iterations = p.max_iter;
  out.converged = out.residual <= tol;
  return out;
}

}  // namespace

double mean_field_free_energy(const MeanFieldProblem& problem, std::span<const double> m) {
  const SiteModel site = site_model(problem);
  return evaluate(site, problem.sublattices, m, problem.kT).free_energy;
}

MeanFieldSolution solve_selfconsistent(const MeanFieldProblem& problem) {
  validate(problem);
  const SiteModel site = site_model(problem);
  const double S = site.S;
  const double tol = problem.tol > 0.0 ? problem.tol : 1e-10 * S;
  const double zero_plus = 1e-3 * S;

  std::vector<std::vector<double>> inits;
  if (problem.sublattices == Sublattices::one) {
    inits = {{zero_plus}, {S}, {-S}};
  } else {
    inits = {{zero_plus, zero_plus}, {S, S}, {S, -S}, {-S, -S}, {-S, S}, {zero_plus, -zero_plus}};
  }
  inits.insert(inits.end(), problem.init.begin(), problem.init.end());

  std::vector<Branch> branches;
  // the symmetric point is a fixed point whenever no field breaks the Sx -> -Sx symmetry;
  // listed first so it wins free-energy ties against numerically vanishing branches
  {
    const std::vector<double> zero(static_cast<std::size_t>(n_sub(problem)), 0.0);
    Branch b = evaluate(site, problem.sublattices, zero, problem.kT);
    b.converged = b.residual <= tol;
    b.m = zero;
    if (b.converged) branches.push_back(b);
  }
  for (const auto& init : inits) branches.push_back(iterate(site, problem, init, tol));

  auto select = [&branches](bool stable_only) {
    const Branch* best = nullptr;
    for (const auto& b : branches) {
      if (!b.converged || (stable_only && !b.stable)) continue;
      const double slack = 1e-12 * std::max(1.0, std::abs(b.free_energy));
      // earlier candidates win ties, so the +m branch is preferred over its mirror image
      if (!best || b.free_energy < best->free_energy - slack) best = &b;
    }
    return best;
  };
  const Branch* best = select(false);

  // Close to a continuous transition distinct branches agree in free energy to rounding;
  // there the linearly unstable ones (typically m = 0 on the ordered side) are dropped.
  if (best) {
    const double window = 1e-8 * std::max(1.0, std::abs(best->free_energy));
    bool contested = false;
    for (const auto& b : branches) {
      if (!b.converged || &b == best || std::abs(b.free_energy - best->free_energy) > window)
        continue;
      double dm = 0.0;
      for (std::size_t a = 0; a < b.m.size(); ++a)
        dm = std::max(dm, std::abs(std::abs(b.m[a]) - std::abs(best->m[a])));
      contested = contested || dm > 100.0 * tol;
    }
    if (contested) {
      bool any_stable = false;
      for (auto& b : branches) {
        if (!b.converged || std::abs(b.free_energy - best->free_energy) > window) {
          b.stable = false;
          continue;
        }
        b.stable = linearly_stable(site, problem.sublattices, b.m, problem.kT);
        any_stable = any_stable || b.stable;
      }
      if (any_stable) best = select(true);
    }
  }

  // an unconverged branch below every converged one means the answer is not known
  for (const auto& b : branches) {
    if (b.converged) continue;
    const double slack = 1e-12 * std::max(1.0, std::abs(b.free_energy));
    if (!best || b.free_energy < best->free_energy - slack) best = &b;
  }

  MeanFieldSolution sol;
  sol.m = best->m;
  sol.m_uniform = sol.m.size() == 2 ? 0.5 * (sol.m[0] + sol.m[1]) : sol.m[0];
  sol.m_stag = sol.m.size() == 2 ? 0.5 * (sol.m[0] - sol.m[1]) : 0.0;
  sol.sz = best->sz;
  sol.free_energy_per_spin = best->free_energy;
  sol.alpha_per_sqrtN =
      2.0 * problem.cavity.lambda_bar * std::abs(sol.m_uniform) / problem.cavity.Omega;
  sol.photons_per_spin = sol.alpha_per_sqrtN * sol.alpha_per_sqrtN;
  sol.converged = best->converged;
  sol.iterations = best->iterations;
  sol.residual = best->residual;
  return sol;
}

}  // namespace cavity
