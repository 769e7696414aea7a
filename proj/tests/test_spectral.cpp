#include <gtest/gtest.h>

#include "qbn/closed_form.hpp"
#include "qbn/moment_dynamics.hpp"
#include "qbn/spectral.hpp"

using namespace qbn;

namespace {
constexpr double kappa = 0.003;
}

TEST(Spectral, ChainModesDiagonaliseHopping) {
  for (int N : {1, 2, 5}) {
    const double J = 1.7e-3;
    const auto sp = spectral::chain(N, J);
    const rmat H = hopping_matrix({topology_kind::cascaded, N}, J);
    rmat V(sp.L, sp.L);
    for (int k = 1; k <= sp.L; ++k)
      for (int n = 0; n < sp.L; ++n) V(n, k - 1) = sp.mode(k, n);
    EXPECT_LT((V.transpose() * V - rmat::Identity(sp.L, sp.L)).norm(), 1e-13);
    const rvec e = Eigen::Map<const rvec>(sp.energies().data(), sp.L);
    EXPECT_LT((V.transpose() * H * V - rmat(e.asDiagonal())).norm(), 1e-15);
  }
}

TEST(Spectral, ModalSumEqualsLinearSolve) {
  for (int N = 1; N <= 6; ++N) {
    const double J = 0.8e-3 * N;
    const cvec b = spectral::steady_amplitudes(J, kappa, 0.01, topology_kind::cascaded, N);
    for (int n = 0; n <= N; ++n)
      EXPECT_LT(std::abs(spectral::chain_amplitude_modal(N, J, kappa, 0.01, n) - b(n)), 1e-10 * b.norm());
    const auto rep = spectral::parity(N, J, kappa, 0.01);
    EXPECT_LT(std::abs(rep.terminal_amplitude - b(N)), 1e-10 * b.norm());
  }
}

TEST(Spectral, AmplitudesMatchGaussianMeans) {
  // ⟨b⟩ from the drift equation equals −i times the hopping-solve amplitude
  const double J = 1.3e-3;
  for (auto kind : {topology_kind::cascaded, topology_kind::parallel}) {
    const auto s = make_reciprocal(kind, 3, J, kappa, 0.01);
    const auto st = steady_state(assemble(s, reservoir_spec::vacuum()));
    const cvec b = spectral::steady_amplitudes(J, kappa, 0.01, kind, 3);
    for (int m = 0; m <= 3; ++m) EXPECT_NEAR(st.occupation(m), std::norm(b(m)), 1e-10 * b.squaredNorm());
  }
}

TEST(Spectral, ZeroModeForEvenBatteryCounts) {
  for (int N = 1; N <= 8; ++N) {
    const double J = 1e-3;
    const auto rep = spectral::parity(N, J, kappa);
    EXPECT_EQ(rep.has_zero_mode, N % 2 == 0);
    const auto sp = spectral::chain(N, J);
    const int k0 = spectral::zero_mode_index(N, J);
    if (N % 2 == 0) {
      EXPECT_EQ(k0, (N + 2) / 2);
      EXPECT_NEAR(sp.energy(k0), 0.0, 1e-18);
      // on resonance the zero mode carries the largest weight
      for (int k = 1; k <= sp.L; ++k) EXPECT_GE(std::abs(rep.mode_weights[k0 - 1]), std::abs(rep.mode_weights[k - 1]));
    } else {
      EXPECT_GT(std::abs(sp.energy(k0)), 1e-6);
    }
  }
}

TEST(Spectral, GreenMatrixInvertsResolvent) {
  const rmat H = hopping_matrix({topology_kind::parallel, 3}, 2e-3);
  const cmat G = spectral::green_matrix(H, kappa, 2e-3);
  cmat M = -H.cast<cplx>();
  M.diagonal().array() += cplx(0.0, kappa / 2);
  EXPECT_LT((M * G - cmat::Identity(4, 4)).norm(), 1e-12);
}

TEST(Spectral, SingularWithoutDamping) {
  const rmat H = hopping_matrix({topology_kind::cascaded, 2}, 1e-3);
  try {
    spectral::green_matrix(H, 0.0, 1e-3);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::singular_matrix);
  }
  EXPECT_THROW(spectral::steady_amplitudes(1e-3, 0.0, 0.01, topology_kind::cascaded, 2), error);
  // odd N chain has no zero mode so κ = 0 is fine
  EXPECT_NO_THROW(spectral::green_matrix(hopping_matrix({topology_kind::cascaded, 1}, 1e-3), 0.0, 1e-3));
}

TEST(Spectral, StarSpectrum) {
  const double J = 1e-3;
  const auto es = spectral::graph_spectrum(topology_kind::parallel, 4, J);
  EXPECT_NEAR(es.eigenvalues()(0), -2 * J, 1e-15);
  EXPECT_NEAR(es.eigenvalues()(4), 2 * J, 1e-15);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(es.eigenvalues()(i), 0.0, 1e-15);
}

TEST(Spectral, ParityJson) {
  const auto j = spectral::parity(2, 1e-3, kappa).to_json();
  EXPECT_EQ(j["N"], 2);
  EXPECT_TRUE(j["has_zero_mode"].get<bool>());
  EXPECT_EQ(j["mode_weights"].size(), 3u);
}

TEST(Spectral, ChargerOnlyGreenFunction) {
  const cmat G = spectral::green_matrix(rmat::Zero(1, 1), kappa, 1e-3);
  EXPECT_LT(std::abs(G(0, 0) - cplx(0.0, -2.0 / kappa)), 1e-9);
}

TEST(Spectral, ChainResidualAtJEqualsKappa) {
  const rmat H = hopping_matrix({topology_kind::cascaded, 2}, kappa);
  const cmat G = spectral::green_matrix(H, kappa, kappa);
  cmat M = -H.cast<cplx>();
  M.diagonal().array() += cplx(0.0, kappa / 2);
  EXPECT_LE((G * M - cmat::Identity(3, 3)).cwiseAbs().rowwise().sum().maxCoeff(), 1e-10);
}

TEST(Spectral, GreenColumnGivesGaussianMean) {
  const double J = 1.1e-3, e = 0.01;
  for (auto kind : {topology_kind::cascaded, topology_kind::parallel}) {
    const auto s = make_reciprocal(kind, 3, J, kappa, e);
    const cmat G = spectral::green_matrix(hopping_matrix({kind, 3}, J), kappa, J);
    const auto st = steady_state(assemble(s, reservoir_spec::vacuum()));
    for (int n = 0; n <= 3; ++n) {
      // ⟨a_n⟩ = (x + ip)/√2; (iH_0 + κ/2)⟨a⟩ = −iε e_0 is the same system as (−H_0 + iκ/2)⟨a⟩ = ε e_0
      const cplx mean(st.mean(2 * n) / std::sqrt(2.0), st.mean(2 * n + 1) / std::sqrt(2.0));
      EXPECT_LT(std::abs(mean - e * G(n, 0)), 1e-8 * std::abs(e * G(0, 0)));
    }
  }
}

TEST(Spectral, UndrivenAmplitudesVanish) {
  EXPECT_EQ(spectral::steady_amplitudes(1e-3, kappa, 0.0, topology_kind::cascaded, 4).norm(), 0.0);
}

TEST(Spectral, EvenChainBeatsOddNeighbour) {
  const double j4 = closed_form::optimal_coupling(topology_kind::cascaded, 4, kappa);
  const double j3 = closed_form::optimal_coupling(topology_kind::cascaded, 3, kappa);
  const cvec b4 = spectral::steady_amplitudes(j4, kappa, 0.01, topology_kind::cascaded, 4);
  const cvec b3 = spectral::steady_amplitudes(j3, kappa, 0.01, topology_kind::cascaded, 3);
  EXPECT_GT(std::abs(b4(4)), std::abs(b3(3)));
}

TEST(Spectral, ZeroModeDominatesAtWeakDamping) {
  const double J = 1.0, k = 0.01 * J;
  const auto rep = spectral::parity(2, J, k);
  const auto sp = spectral::chain(2, J);
  int zeros = 0;
  for (int i = 1; i <= 3; ++i) zeros += std::abs(sp.energy(i)) <= 1e-12;
  EXPECT_EQ(zeros, 1);
  EXPECT_GE(std::abs(rep.mode_weights[1]), 0.5 * std::abs(rep.terminal_amplitude));
}

TEST(Spectral, OddChainWeightsInterfere) {
  // N = 3: neighbouring modes k, k+1 on the same side of zero carry opposite-sign real parts
  const auto rep = spectral::parity(3, 1e-3, kappa);
  EXPECT_LT(rep.mode_weights[0].real() * rep.mode_weights[1].real(), 0.0);
  EXPECT_LT(rep.mode_weights[2].real() * rep.mode_weights[3].real(), 0.0);
  EXPECT_LT(std::abs(rep.terminal_amplitude.real()), std::abs(rep.mode_weights[0].real()) + std::abs(rep.mode_weights[1].real()));
}

TEST(Spectral, DimerSpectrum) {
  const auto sp = spectral::chain(1, 2e-3);
  EXPECT_EQ(sp.L, 2);
  EXPECT_NEAR(sp.energy(1), 2e-3, 1e-18);
  EXPECT_NEAR(sp.energy(2), -2e-3, 1e-18);
  EXPECT_FALSE(spectral::parity(1, 2e-3, kappa).has_zero_mode);
}

TEST(Spectral, AlternatingSignIdentity) {
  const double pi = std::numbers::pi;
  for (int L = 1; L <= 20; ++L)
    for (int k = 1; k <= L; ++k) {
      const double sign = (k % 2 == 1) ? 1.0 : -1.0;
      EXPECT_NEAR(std::sin(pi * k * L / (L + 1)), sign * std::sin(pi * k / (L + 1)), 1e-12);
    }
}

TEST(Spectral, SpectrumSymmetricAndGapped) {
  for (int N = 1; N <= 11; ++N) {
    const double J = 1e-3;
    const auto sp = spectral::chain(N, J);
    for (int k = 1; k <= sp.L; ++k) EXPECT_NEAR(sp.energy(k), -sp.energy(sp.L + 1 - k), 1e-12 * J);
    double mn = 1e300;
    for (double e : sp.energies()) mn = std::min(mn, std::abs(e));
    if (N % 2 == 0) EXPECT_LE(mn, 1e-12 * J);
    else EXPECT_GE(mn, 2 * J * std::sin(std::numbers::pi / (2 * (sp.L + 1))) - 1e-12);
  }
}

TEST(Spectral, ModalWeightsDecreaseWithDetuning) {
  const int N = 6;
  const double J = 1e-3;
  const auto rep = spectral::parity(N, J, kappa);
  const auto sp = spectral::chain(N, J);
  for (int k = 1; k <= sp.L; ++k) {
    const double s = std::sin(std::numbers::pi * k / (sp.L + 1));
    const double num = s * s * 2.0 / (sp.L + 1);
    EXPECT_NEAR(std::abs(rep.mode_weights[k - 1]), num / std::hypot(sp.energy(k), kappa / 2), 1e-9);
  }
}
