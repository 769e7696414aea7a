#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "network_model.hpp"

namespace qbn::spectral {

// Open tight-binding chain of L sites with hopping J; site 0 is the charger.
struct chain_spectrum {
  int L = 0;
  double J = 0.0;

  // k = 1 … L
  double energy(int k) const { return 2.0 * J * std::cos(std::numbers::pi * k / (L + 1)); }

  // n = 0 … L−1
  double mode(int k, int n) const {
    return std::sqrt(2.0 / (L + 1)) * std::sin(std::numbers::pi * k * (n + 1) / (L + 1));
  }

  std::vector<double> energies() const {
    std::vector<double> e(L);
    for (int k = 1; k <= L; ++k) e[k - 1] = energy(k);
    return e;
  }
};

inline chain_spectrum chain(int N, double J) { return {N + 1, J}; }

// G = (−H_0 + iκ/2)^{−1}
inline cmat green_matrix(const rmat& H0, double kappa, double J) {
  const Eigen::Index L = H0.rows();
  if (kappa < 0.0) throw error(errc::invalid_argument, "kappa must be nonnegative");
  if (kappa == 0.0) {
    Eigen::SelfAdjointEigenSolver<rmat> es(H0);
    const double scale = std::max(std::abs(J), 1.0);
    if (es.eigenvalues().cwiseAbs().minCoeff() <= 1e-12 * scale)
      throw error(errc::singular_matrix, "H_0 has a zero mode and kappa = 0");
  }
  cmat M = -H0.cast<cplx>();
  M.diagonal().array() += cplx(0.0, kappa / 2.0);
  return M.partialPivLu().solve(cmat::Identity(L, L));
}

// Solves (−H_0 + iκ/2) b = ε e_0.
inline cvec steady_amplitudes(double J, double kappa, double eps, topology_kind kind, int N) {
  if (!(kappa > 0.0)) throw error(errc::singular_matrix, "kappa must be positive");
  const rmat H0 = hopping_matrix({kind, N}, J);
  cmat M = -H0.cast<cplx>();
  M.diagonal().array() += cplx(0.0, kappa / 2.0);
  cvec rhs = cvec::Zero(N + 1);
  rhs(0) = eps;
  return M.partialPivLu().solve(rhs);
}

// Chain amplitude at site n from the eigenmode sum Σ_k ψ_k(n) ψ_k(0) / (−E_k + iκ/2).
inline cplx chain_amplitude_modal(int N, double J, double kappa, double eps, int n) {
  const auto sp = chain(N, J);
  cplx s = 0.0;
  for (int k = 1; k <= sp.L; ++k)
    s += sp.mode(k, n) * sp.mode(k, 0) / cplx(-sp.energy(k), kappa / 2.0);
  return eps * s;
}

struct parity_report {
  int N = 0;
  bool has_zero_mode = false;
  std::vector<cplx> mode_weights;  // k = 1 … L
  cplx terminal_amplitude;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["N"] = N;
    j["has_zero_mode"] = has_zero_mode;
    auto& w = j["mode_weights"] = nlohmann::json::array();
    for (auto z : mode_weights) w.push_back({z.real(), z.imag()});
    j["terminal_amplitude"] = {terminal_amplitude.real(), terminal_amplitude.imag()};
    return j;
  }
};

inline parity_report parity(int N, double J, double kappa, double eps = 1.0) {
  if (N < 1) throw error(errc::invalid_argument, "N must be >= 1");
  const auto sp = chain(N, J);
  const double pi = std::numbers::pi;
  parity_report r;
  r.N = N;
  r.has_zero_mode = (N % 2 == 0);
  r.terminal_amplitude = 0.0;
  for (int k = 1; k <= sp.L; ++k) {
    const double s = std::sin(pi * k / (sp.L + 1));
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    const cplx w = sign * s * s / cplx(-sp.energy(k), kappa / 2.0) * (2.0 * eps / (sp.L + 1));
    r.mode_weights.push_back(w);
    r.terminal_amplitude += w;
  }
  return r;
}

// Index (1-based k) of the chain mode closest to zero energy.
inline int zero_mode_index(int N, double J) {
  const auto sp = chain(N, J);
  int best = 1;
  for (int k = 1; k <= sp.L; ++k)
    if (std::abs(sp.energy(k)) < std::abs(sp.energy(best))) best = k;
  return best;
}

// Dense eigendecomposition of any hopping graph (used for the star).
inline Eigen::SelfAdjointEigenSolver<rmat> graph_spectrum(topology_kind kind, int N, double J) {
  return Eigen::SelfAdjointEigenSolver<rmat>(hopping_matrix({kind, N}, J));
}

}  // namespace qbn::spectral
