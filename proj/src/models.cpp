#include "cavity/models.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "cavity/response.hpp"
#include "cavity/spin.hpp"
#include "cavity/units.hpp"

namespace cavity {

std::vector<SiteCoupling> uniform_couplings(int n_sites, double lambda, double theta) {
  return std::vector<SiteCoupling>(static_cast<std::size_t>(std::max(n_sites, 0)),
                                   SiteCoupling{lambda, theta});
}

GiantSpinModel fe8_model(double B_tesla) {
  GiantSpinModel m;
  m.S = 10.0;
  m.D = kelvin_to_rad_s(0.294);
  m.E = kelvin_to_rad_s(0.046);
  m.J = kelvin_to_rad_s(2.85e-3);
  m.phi = 68.0 * std::numbers::pi / 180.0;
  m.B = B_tesla;
  return m;
}

CavitySpec CavitySpec::from_material(double rho, double nu, double Omega) {
  CavitySpec c;
  c.Omega = Omega;
  c.rho = rho;
  c.nu = nu;
  c.lambda_bar = lambda_bar_from_material(rho, nu, Omega);
  return c;
}

void validate(const CavitySpec& cavity) {
  if (!(cavity.Omega > 0.0)) throw std::invalid_argument("cavity: Omega must be > 0");
  if (!(cavity.lambda_bar >= 0.0)) throw std::invalid_argument("cavity: lambda_bar must be >= 0");
  if (cavity.nu && !(*cavity.nu >= 0.0 && *cavity.nu <= 1.0))
    throw std::invalid_argument("cavity: nu must lie in [0, 1]");
  if (cavity.rho && cavity.nu) {
    const double expected = lambda_bar_from_material(*cavity.rho, *cavity.nu, cavity.Omega);
    const double scale = std::max(std::abs(expected), std::numeric_limits<double>::min());
    if (std::abs(expected - cavity.lambda_bar) > 1e-12 * scale)
      throw std::invalid_argument("cavity: lambda_bar disagrees with (rho, nu, Omega)");
  }
}

CMatrix giant_spin_hamiltonian(const GiantSpinModel& model) {
  const SpinOperatorSet s = spin_matrices(model.S);
  const double zeeman = tesla_to_rad_s(model.B);
  CMatrix h = -model.D * s.Sx * s.Sx + model.E * (s.Sz * s.Sz - s.Sy * s.Sy);
  h -= zeeman * (std::sin(model.phi) * s.Sy - std::cos(model.phi) * s.Sz);
  return h;
}

namespace {

using Triplet = Eigen::Triplet<Complex>;

void check_model(const IsingChainModel& model, int max_sites) {
  if (model.n_sites < 1) throw std::invalid_argument("chain: n_sites must be >= 1");
  if (model.n_sites > max_sites)
    throw ResourceLimitError("chain: n_sites exceeds the configured cap of " +
                             std::to_string(max_sites));
  if (!model.site_couplings.empty() &&
      static_cast<int>(model.site_couplings.size()) != model.n_sites)
    throw std::invalid_argument("chain: site_couplings length must equal n_sites");
}

std::vector<std::pair<int, int>> bonds(const IsingChainModel& model) {
  std::vector<std::pair<int, int>> out;
  const int n = model.n_sites;
  if (model.geometry == ChainGeometry::nearest_neighbor_pbc) {
    if (n == 2) out.emplace_back(0, 1);
    if (n >= 3)
      for (int j = 0; j < n; ++j) out.emplace_back(j, (j + 1) % n);
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
  }
  return out;
}

}  // namespace

ChainOperators build_chain_hamiltonian(const IsingChainModel& model, int max_sites) {
  check_model(model, max_sites);
  const int n = model.n_sites;
  const auto dim = Eigen::Index{1} << n;
  const auto pairs = bonds(model);
  const double j_pair =
      model.geometry == ChainGeometry::all_to_all_normalized ? model.J / n : model.J;

  std::vector<Triplet> h_entries;
  h_entries.reserve(static_cast<std::size_t>(dim) * (pairs.size() + 1));
  std::vector<Triplet> o_entries;
  o_entries.reserve(static_cast<std::size_t>(dim) * n);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));

  for (Eigen::Index s = 0; s < dim; ++s) {
    const auto bits = static_cast<std::uint64_t>(s);
    const int down = std::popcount(bits);
    h_entries.emplace_back(s, s, 0.5 * model.omega_z * (n - 2 * down));
    if (j_pair != 0.0) {
      for (auto [i, j] : pairs) {
        const auto t = static_cast<Eigen::Index>(bits ^ ((1ULL << i) | (1ULL << j)));
        h_entries.emplace_back(t, s, -0.5 * j_pair);
      }
    }
    for (int j = 0; j < n; ++j) {
      const SiteCoupling c = model.site_couplings.empty()
                                 ? SiteCoupling{1.0, 0.0}
                                 : model.site_couplings[static_cast<std::size_t>(j)];
      if (c.lambda == 0.0) continue;
      const auto t = static_cast<Eigen::Index>(bits ^ (1ULL << j));
      const bool is_down = (bits >> j) & 1ULL;
      // S+ raises a down spin, S- lowers an up spin
      const Complex phase = std::polar(1.0, is_down ? c.theta : -c.theta);
      o_entries.emplace_back(t, s, c.lambda * inv_sqrt_n * phase);
    }
  }

  ChainOperators ops;
  ops.H_S.resize(dim, dim);
  ops.H_S.setFromTriplets(h_entries.begin(), h_entries.end());
  ops.O.resize(dim, dim);
  ops.O.setFromTriplets(o_entries.begin(), o_entries.end());
  ops.H_S.makeCompressed();
  ops.O.makeCompressed();
  return ops;
}

SparseOperator chain_parity(int n_sites) {
  const auto dim = Eigen::Index{1} << n_sites;
  SparseOperator p(dim, dim);
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(dim));
  for (Eigen::Index s = 0; s < dim; ++s)
    entries.emplace_back(s, s, (std::popcount(static_cast<std::uint64_t>(s)) % 2) ? -1.0 : 1.0);
  p.setFromTriplets(entries.begin(), entries.end());
  return p;
}

namespace {
void check_effective_inputs(const SparseOperator& H_S, const SparseOperator& O, double Omega) {
  if (H_S.rows() != H_S.cols() || O.rows() != O.cols() || H_S.rows() != O.rows())
    throw std::invalid_argument("effective hamiltonian: H_S and O dimensions differ");
  if (!(Omega > 0.0)) throw std::invalid_argument("effective hamiltonian: Omega must be > 0");
}
}  // namespace

LinearOperator build_effective_hamiltonian(const SparseOperator& H_S, const SparseOperator& O,
                                           double Omega) {
  check_effective_inputs(H_S, O, Omega);
  const double inv_omega = 1.0 / Omega;
  return {H_S.rows(), [&H_S, &O, inv_omega](const CVector& in, CVector& out) {
            CVector ov = O * in;
            out.noalias() = H_S * in;
            out.noalias() -= inv_omega * (O * ov);
          }};
}

SparseOperator effective_hamiltonian_matrix(const SparseOperator& H_S, const SparseOperator& O,
                                            double Omega) {
  check_effective_inputs(H_S, O, Omega);
  SparseOperator o2 = O * O;
  SparseOperator h = H_S - (1.0 / Omega) * o2;
  h.makeCompressed();
  return h;
}

SparseOperator build_full_hamiltonian(const SparseOperator& H_S, const SparseOperator& O,
                                      double Omega, int n_fock, Eigen::Index max_dim) {
  if (n_fock < 1) throw std::invalid_argument("full hamiltonian: n_fock must be >= 1");
  if (H_S.rows() != O.rows() || H_S.rows() != H_S.cols())
    throw std::invalid_argument("full hamiltonian: H_S and O dimensions differ");
  const Eigen::Index nb = n_fock + 1;
  const Eigen::Index dim = H_S.rows() * nb;
  if (dim > max_dim) throw ResourceLimitError("full hamiltonian: dimension exceeds cap");

  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(H_S.nonZeros() * nb + 2 * O.nonZeros() * nb + dim));
  for (Eigen::Index r = 0; r < H_S.outerSize(); ++r)
    for (SparseOperator::InnerIterator it(H_S, r); it; ++it)
      for (Eigen::Index k = 0; k < nb; ++k)
        entries.emplace_back(it.row() * nb + k, it.col() * nb + k, it.value());
  for (Eigen::Index s = 0; s < H_S.rows(); ++s)
    for (Eigen::Index k = 1; k < nb; ++k)
      entries.emplace_back(s * nb + k, s * nb + k, Omega * static_cast<double>(k));
  for (Eigen::Index r = 0; r < O.outerSize(); ++r)
    for (SparseOperator::InnerIterator it(O, r); it; ++it)
      for (Eigen::Index k = 0; k + 1 < nb; ++k) {
        const double amp = std::sqrt(static_cast<double>(k + 1));
        // a^dag |k> = sqrt(k+1)|k+1>, and a|k+1> = sqrt(k+1)|k>
        entries.emplace_back(it.row() * nb + k + 1, it.col() * nb + k, amp * it.value());
        entries.emplace_back(it.row() * nb + k, it.col() * nb + k + 1, amp * it.value());
      }
  SparseOperator h(dim, dim);
  h.setFromTriplets(entries.begin(), entries.end());
  h.makeCompressed();
  return h;
}

double effective_single_mode_lambda(const std::vector<ModeCoupling>& modes, double Omega) {
  if (!(Omega > 0.0)) throw std::invalid_argument("multimode: Omega must be > 0");
  double weight = 0.0;
  for (const auto& m : modes) {
    if (!(m.Omega > 0.0)) throw std::invalid_argument("multimode: mode frequency must be > 0");
    weight += m.lambda * m.lambda / m.Omega;
  }
  return std::sqrt(weight * Omega);
}

}  // namespace cavity
