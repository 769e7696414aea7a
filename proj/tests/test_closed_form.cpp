#include <gtest/gtest.h>

#include <functional>
#include <numeric>

#include "qbn/closed_form.hpp"
#include "qbn/moment_dynamics.hpp"

using namespace qbn;

namespace {

constexpr double kappa = 0.003;
constexpr double eps = 0.01;

double gaussian_energy(const network_spec& s, int n, double t) {
  const auto q = assemble(s, reservoir_spec::vacuum());
  if (std::isinf(t)) return s.omega() * steady_state(q).occupation(n);
  return s.omega() * evolve(q, gaussian_state::ground(s.modes()), {t}).back().occupation(n);
}

double golden_max(const std::function<double(double)>& f, double a, double b) {
  const double g = (std::sqrt(5.0) - 1) / 2;
  double c = b - g * (b - a), d = a + g * (b - a);
  for (int i = 0; i < 200; ++i) {
    if (f(c) > f(d)) b = d;
    else a = c;
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return (a + b) / 2;
}

}  // namespace

TEST(ClosedForm, BracketStartsAtZeroAndSaturates) {
  closed_form::vandermonde_kernel k({0.005, 0.009, 0.0011, 0.02});
  const auto c = k.coefficients();
  EXPECT_NEAR(std::accumulate(c.begin(), c.end(), 0.0), 1.0, 1e-12);
  EXPECT_NEAR(k.bracket(0.0), 0.0, 1e-14);
  EXPECT_NEAR(k.bracket(1e6), 1.0, 1e-14);
}

TEST(ClosedForm, CoefficientsMatchVandermondeRatios) {
  const std::vector<double> l{0.003, 0.007, 0.0045, 0.012};
  closed_form::vandermonde_kernel k(l);
  const auto c = k.coefficients();
  for (std::size_t p = 0; p < l.size(); ++p) {
    double prod = 1.0;
    for (std::size_t m = 0; m < l.size(); ++m)
      if (m != p) prod *= l[m];
    const double sign = (p % 2 == 0) ? 1.0 : -1.0;
    EXPECT_NEAR(c[p], sign * k.vandermonde_without(p) / k.vandermonde() * prod, 1e-12 * std::abs(c[p]));
  }
}

TEST(ClosedForm, CascadedSteadyMatchesGaussian) {
  for (int N = 1; N <= 5; ++N) {
    const auto s = make_nonreciprocal(topology_kind::cascaded, N, 1.1e-3 * N, kappa, eps);
    for (int n = 0; n <= N; ++n) {
      const double g = gaussian_energy(s, n, INFINITY);
      EXPECT_NEAR(closed_form::energy_cascaded_ss(s, n), g, 1e-9 * g);
    }
  }
}

TEST(ClosedForm, CascadedTransientMatchesGaussian) {
  // heterogeneous couplings so every rate is distinct
  coupling_spec c;
  c.J = {1e-3, 1.7e-3, 0.6e-3};
  c.gamma = {2e-3, 3.4e-3, 1.2e-3};
  c.theta.assign(3, std::numbers::pi / 2);
  c.p.assign(4, cplx(1.0));
  const auto s = build_spec({topology_kind::cascaded, 3}, c, {kappa, 0.002, 0.0025, 0.004}, eps, 1.0);
  for (double t : {50.0, 400.0, 1500.0, 6000.0})
    for (int n = 0; n <= 3; ++n) {
      const double g = gaussian_energy(s, n, t);
      EXPECT_NEAR(closed_form::energy_cascaded_t(s, n, t), g, 1e-8 * std::max(g, 1e-6));
    }
}

TEST(ClosedForm, ParallelMatchesGaussian) {
  const auto s = make_nonreciprocal(topology_kind::parallel, 3, 0.9e-3, kappa, eps);
  for (int n = 0; n <= 3; ++n) {
    const double g = gaussian_energy(s, n, INFINITY);
    EXPECT_NEAR(closed_form::energy_parallel_ss(s, n), g, 1e-9 * g);
    for (double t : {80.0, 700.0, 3000.0}) {
      const double gt = gaussian_energy(s, n, t);
      EXPECT_NEAR(closed_form::energy_parallel_t(s, n, t), gt, 1e-8 * std::max(gt, 1e-6));
    }
  }
}

TEST(ClosedForm, TerminalScalingAgreesWithGeneralForm) {
  for (int N = 1; N <= 6; ++N) {
    const double J = 1.4e-3;
    const auto c = make_nonreciprocal(topology_kind::cascaded, N, J, kappa, eps);
    const auto p = make_nonreciprocal(topology_kind::parallel, N, J, kappa, eps);
    const double ec = closed_form::energy_cascaded_ss(c, N);
    const double ep = closed_form::energy_parallel_ss(p, N);
    EXPECT_NEAR(closed_form::terminal_scaling_cascaded(N, 2 * J, kappa, eps, 1.0), ec, 1e-12 * ec);
    EXPECT_NEAR(closed_form::terminal_scaling_parallel(N, 2 * J, kappa, eps, 1.0), ep, 1e-12 * ep);
  }
}

TEST(ClosedForm, SingleBatteryAtOptimumStoresEpsOverKappaSquared) {
  const double J = closed_form::optimal_coupling(topology_kind::cascaded, 1, kappa);
  EXPECT_DOUBLE_EQ(J, kappa / 2);
  const auto s = make_nonreciprocal(topology_kind::cascaded, 1, J, kappa, eps);
  EXPECT_NEAR(closed_form::energy_cascaded_ss(s, 1), eps * eps / (kappa * kappa), 1e-9);
}

TEST(ClosedForm, OptimalCouplingMaximisesTerminalEnergy) {
  for (int N : {1, 2, 3, 5, 8}) {
    const double jc = closed_form::optimal_coupling(topology_kind::cascaded, N, kappa);
    const double jp = closed_form::optimal_coupling(topology_kind::parallel, N, kappa);
    const double nc = golden_max(
        [&](double J) { return closed_form::terminal_scaling_cascaded(N, 2 * J, kappa, eps, 1.0); }, 1e-5, 0.05);
    const double np = golden_max(
        [&](double J) { return closed_form::terminal_scaling_parallel(N, 2 * J, kappa, eps, 1.0); }, 1e-5, 0.05);
    EXPECT_NEAR(nc, jc, 1e-6 * jc);
    EXPECT_NEAR(np, jp, 1e-6 * jp);
    const double G = 2 * jc;
    EXPECT_NEAR(2 * G * G - N * G * kappa - N * kappa * kappa, 0.0, 1e-15);
  }
}

TEST(ClosedForm, ReciprocalStarMatchesGaussian) {
  for (int N : {1, 2, 4}) {
    const double J = 1.2e-3;
    const auto s = make_reciprocal(topology_kind::parallel, N, J, kappa, eps);
    const double g = gaussian_energy(s, N, INFINITY);
    EXPECT_NEAR(closed_form::reciprocal_parallel_ss(N, J, kappa, eps, 1.0), g, 1e-9 * g);
  }
}

TEST(ClosedForm, ReciprocalWindowSeparatesRegimes) {
  const int N = 4;
  const auto [lo, hi] = closed_form::reciprocal_window(N, kappa);
  auto ratio = [&](double J) {
    return closed_form::reciprocal_parallel_ss(N, J, kappa, eps, 1.0) /
           closed_form::terminal_scaling_parallel(N, 2 * J, kappa, eps, 1.0);
  };
  EXPECT_GT(ratio(std::sqrt(lo * hi)), 1.0);
  EXPECT_LT(ratio(lo / 2), 1.0);
  EXPECT_LT(ratio(hi * 2), 1.0);
  EXPECT_NEAR(ratio(lo), 1.0, 1e-12);
  EXPECT_NEAR(ratio(hi), 1.0, 1e-12);
}

TEST(ClosedForm, LogSpaceBranchIsContinuous) {
  // N = 8 uses direct products, N = 9 and up the log form
  for (int N : {8, 9, 12}) {
    const auto s = make_nonreciprocal(topology_kind::cascaded, N, 2.3e-3, kappa, eps);
    const double g = gaussian_energy(s, N, INFINITY);
    EXPECT_NEAR(closed_form::energy_cascaded_ss(s, N), g, 1e-8 * g);
  }
  std::vector<double> l;
  for (int i = 0; i < 12; ++i) l.push_back(0.001 * (1.0 + 0.37 * i));
  closed_form::vandermonde_kernel k(l);
  EXPECT_NEAR(k.bracket(0.0), 0.0, 1e-9);
  const auto c = k.coefficients();
  EXPECT_NEAR(std::accumulate(c.begin(), c.end(), 0.0L), 1.0, 1e-9);
}

TEST(ClosedForm, Errors) {
  EXPECT_THROW(closed_form::vandermonde_kernel({0.002, 0.002}), error);
  try {
    closed_form::vandermonde_kernel({0.002, 0.0});
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::zero_rate);
  }
  try {
    closed_form::vandermonde_kernel({0.002, 0.002 * (1 + 1e-12)});
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::degenerate_rates);
  }
  const auto r = make_reciprocal(topology_kind::cascaded, 2, 1e-3, kappa, eps);
  EXPECT_THROW(closed_form::energy_cascaded_ss(r, 2), error);
  const auto p = make_nonreciprocal(topology_kind::parallel, 2, 1e-3, kappa, eps);
  EXPECT_THROW(closed_form::energy_cascaded_ss(p, 2), error);
  EXPECT_THROW(closed_form::energy_parallel_ss(p, 3), error);
  EXPECT_THROW(closed_form::optimal_coupling(topology_kind::cascaded, 0, kappa), error);
}

TEST(ClosedForm, UndrivenIsZero) {
  const auto s = make_nonreciprocal(topology_kind::cascaded, 3, 1e-3, kappa, 0.0);
  EXPECT_EQ(closed_form::energy_cascaded_ss(s, 3), 0.0);
}

TEST(ClosedForm, CascadedTwoBatteryExplicitSolution) {
  coupling_spec c;
  c.J = {0.9e-3, 1.6e-3};
  c.gamma = {1.8e-3, 3.2e-3};
  c.theta.assign(2, 0.0);
  c.p = {cplx(0.0, 1.0), cplx(1.0), cplx(0.0, -1.0)};
  const auto s = build_spec({topology_kind::cascaded, 2}, c, {kappa, 0.002, 0.0041}, eps, 1.3);
  ASSERT_EQ(check_nonreciprocity(s), reciprocity::nonreciprocal);
  const double l0 = s.rates().lambda[0], l1 = s.rates().lambda[1], l2 = s.rates().lambda[2];
  const double g1 = c.gamma[0], g2 = c.gamma[1], w = 1.3;
  for (double t : {0.0, 120.0, 900.0, 4000.0}) {
    const double e0 = std::exp(-l0 * t / 2), e1 = std::exp(-l1 * t / 2), e2 = std::exp(-l2 * t / 2);
    const double Ea = 4 * w * eps * eps * (1 - e0) * (1 - e0) / (l0 * l0);
    const double br1 = (l0 - l1) - (l0 * e1 - l1 * e0);
    const double Eb1 = 16 * w * eps * eps * g1 * g1 / (l0 * l0 * l1 * l1 * (l0 - l1) * (l0 - l1)) * br1 * br1;
    const double br2 = (l0 - l1) * (l1 - l2) * (l0 - l2) - l0 * l1 * (l0 - l1) * e2 + l0 * l2 * (l0 - l2) * e1 -
                       l1 * l2 * (l1 - l2) * e0;
    const double pre = 64 * w * eps * eps * g1 * g1 * g2 * g2 /
                       (l0 * l0 * l1 * l1 * l2 * l2 * std::pow((l0 - l1) * (l1 - l2) * (l0 - l2), 2));
    const double Eb2 = pre * br2 * br2;
    EXPECT_NEAR(closed_form::energy_cascaded_t(s, 0, t), Ea, 1e-12 * Ea + 1e-22);
    EXPECT_NEAR(closed_form::energy_cascaded_t(s, 1, t), Eb1, 1e-12 * Eb1 + 1e-22);
    EXPECT_NEAR(closed_form::energy_cascaded_t(s, 2, t), Eb2, 1e-11 * Eb2 + 1e-22);
  }
}

TEST(ClosedForm, ScalingFormsCoincideAtOneBattery) {
  for (double G : {5e-4, 3e-3, 1e-2}) {
    const double ref = 16 * eps * eps * G * G / std::pow(G + kappa, 4);
    EXPECT_NEAR(closed_form::terminal_scaling_cascaded(1, G, kappa, eps, 1.0), ref, 1e-13 * ref);
    EXPECT_NEAR(closed_form::terminal_scaling_parallel(1, G, kappa, eps, 1.0), ref, 1e-13 * ref);
  }
  EXPECT_EQ(closed_form::terminal_scaling_cascaded(3, 0.0, kappa, eps, 1.0), 0.0);
  EXPECT_EQ(closed_form::terminal_scaling_parallel(3, 0.0, kappa, eps, 1.0), 0.0);
}

TEST(ClosedForm, OptimalCouplingValues) {
  EXPECT_DOUBLE_EQ(closed_form::optimal_coupling(topology_kind::cascaded, 1, kappa), 0.0015);
  EXPECT_NEAR(closed_form::optimal_coupling(topology_kind::cascaded, 2, kappa) / kappa, (2 + std::sqrt(20.0)) / 8, 1e-15);
  EXPECT_NEAR(closed_form::optimal_coupling(topology_kind::cascaded, 2, kappa), 0.0024271, 1e-7);
  EXPECT_DOUBLE_EQ(closed_form::optimal_coupling(topology_kind::parallel, 4, kappa), kappa / 4);
}

TEST(ClosedForm, ReciprocalStarValues) {
  EXPECT_NEAR(closed_form::reciprocal_parallel_ss(1, kappa / 2, kappa, eps, 1.0), eps * eps / (kappa * kappa), 1e-10);
  EXPECT_LT(closed_form::reciprocal_parallel_ss(1, 1e-9, kappa, eps, 1.0), 1e-9);
  const double J = 0.4 * kappa;
  EXPECT_GT(closed_form::reciprocal_parallel_ss(2, J, kappa, eps, 1.0),
            closed_form::energy_parallel_ss(make_nonreciprocal(topology_kind::parallel, 2, J, kappa, eps), 2));
}

TEST(ClosedForm, TransientsStartAtZero) {
  const auto p = make_nonreciprocal(topology_kind::parallel, 3, 1e-3, kappa, eps);
  for (int n = 0; n <= 3; ++n) EXPECT_NEAR(closed_form::energy_parallel_t(p, n, 0.0), 0.0, 1e-20);
  // uniform chains have Λ_0 = Λ_N, so only the nondegenerate prefix is evaluated
  const auto c = make_nonreciprocal(topology_kind::cascaded, 2, 1e-3, kappa, eps);
  for (int n = 0; n <= 1; ++n) EXPECT_NEAR(closed_form::energy_cascaded_t(c, n, 0.0), 0.0, 1e-20);
}
