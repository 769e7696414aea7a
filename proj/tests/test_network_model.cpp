#include <gtest/gtest.h>

#include "qbn/network_model.hpp"

using namespace qbn;

namespace {

constexpr double kappa = 0.003;

coupling_spec uniform_coupling(int links, int modes, double J, double theta, double gamma) {
  coupling_spec c;
  c.J.assign(links, J);
  c.theta.assign(links, theta);
  c.gamma.assign(links, gamma);
  c.p.assign(modes, cplx(1.0));
  return c;
}

template <typename F>
errc code_of(F&& f) {
  try {
    f();
  } catch (const error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no qbn::error thrown";
  return errc::invalid_argument;
}

}  // namespace

TEST(NetworkModel, RejectsWrongLengths) {
  auto c = uniform_coupling(2, 3, 1e-3, 0.0, 0.0);
  EXPECT_EQ(code_of([&] { build_spec({topology_kind::cascaded, 2}, c, {kappa, kappa}, 0.01, 1.0); }),
            errc::dimension_mismatch);
  c.J.pop_back();
  EXPECT_EQ(code_of([&] { build_spec({topology_kind::cascaded, 2}, c, {kappa, kappa, kappa}, 0.01, 1.0); }),
            errc::dimension_mismatch);
}

TEST(NetworkModel, RejectsNegativeRates) {
  auto c = uniform_coupling(1, 2, 1e-3, 0.0, 0.0);
  EXPECT_EQ(code_of([&] { build_spec({topology_kind::cascaded, 1}, c, {-1e-3, kappa}, 0.01, 1.0); }),
            errc::negative_rate);
  c.gamma[0] = -1.0;
  EXPECT_EQ(code_of([&] { build_spec({topology_kind::cascaded, 1}, c, {kappa, kappa}, 0.01, 1.0); }),
            errc::negative_rate);
}

TEST(NetworkModel, RejectsNonUnitP) {
  auto c = uniform_coupling(1, 2, 1e-3, 0.0, 0.0);
  c.p[1] = 1.1;
  EXPECT_EQ(code_of([&] { build_spec({topology_kind::cascaded, 1}, c, {kappa, kappa}, 0.01, 1.0); }),
            errc::non_unit_p_coefficient);
}

TEST(NetworkModel, EffectiveRatesCascaded) {
  // charger and terminal see one link, interior batteries two
  const double G = 0.002;
  const auto s = make_nonreciprocal(topology_kind::cascaded, 3, G / 2, kappa, 0.01);
  const auto& l = s.rates().lambda;
  EXPECT_DOUBLE_EQ(l[0], kappa + G);
  EXPECT_DOUBLE_EQ(l[1], kappa + 2 * G);
  EXPECT_DOUBLE_EQ(l[2], kappa + 2 * G);
  EXPECT_DOUBLE_EQ(l[3], kappa + G);
}

TEST(NetworkModel, EffectiveRatesParallel) {
  const double G = 0.002;
  const auto s = make_nonreciprocal(topology_kind::parallel, 4, G / 2, kappa, 0.01);
  const auto& l = s.rates().lambda;
  EXPECT_DOUBLE_EQ(l[0], kappa + 4 * G);
  for (int m = 1; m <= 4; ++m) EXPECT_DOUBLE_EQ(l[m], kappa + G);
}

TEST(NetworkModel, DriftIsUnidirectionalAtNonreciprocity) {
  // θ = π/2, μ = 1, J = Γ/2: A_01 = 0 and A_10 = −Γ by hand
  const double G = 0.004;
  const auto s = make_nonreciprocal(topology_kind::cascaded, 2, G / 2, kappa, 0.01);
  const auto d = drift_matrix(s);
  EXPECT_NEAR(std::abs(d.A(0, 1)), 0.0, 1e-18);
  EXPECT_NEAR(std::abs(d.A(1, 0) - cplx(-G, 0.0)), 0.0, 1e-18);
  EXPECT_NEAR(std::abs(d.A(1, 2)), 0.0, 1e-18);
  EXPECT_NEAR(std::abs(d.A(2, 1) - cplx(-G, 0.0)), 0.0, 1e-18);
  EXPECT_EQ(d.A(0, 2), cplx(0.0));
  EXPECT_EQ(d.f(0), cplx(0.0, -0.01));
  EXPECT_DOUBLE_EQ(d.A(1, 1).real(), -(kappa + 2 * G) / 2);
}

TEST(NetworkModel, SecondPatternIsUnidirectional) {
  for (auto kind : {topology_kind::cascaded, topology_kind::parallel}) {
    const auto s = make_nonreciprocal(kind, 3, 0.001, kappa, 0.01, 1.0, 2);
    EXPECT_EQ(check_nonreciprocity(s), reciprocity::nonreciprocal);
    const auto d = drift_matrix(s);
    for (int i = 0; i < 3; ++i) {
      auto [u, dn] = link_at(s.topo(), i);
      EXPECT_LT(std::abs(d.A(u, dn)), 1e-15);
      EXPECT_NEAR(std::abs(d.A(dn, u)), 0.002, 1e-15);
    }
  }
}

TEST(NetworkModel, ReciprocityClassification) {
  EXPECT_EQ(check_nonreciprocity(make_reciprocal(topology_kind::cascaded, 3, 1e-3, kappa, 0.01)),
            reciprocity::reciprocal);
  EXPECT_EQ(check_nonreciprocity(make_nonreciprocal(topology_kind::parallel, 3, 1e-3, kappa, 0.01)),
            reciprocity::nonreciprocal);
  auto c = uniform_coupling(2, 3, 1e-3, std::numbers::pi / 2, 2e-3);
  c.gamma[1] = 0.0;
  const auto mixed = build_spec({topology_kind::cascaded, 2}, c, {kappa, kappa, kappa}, 0.01, 1.0);
  EXPECT_EQ(check_nonreciprocity(mixed), reciprocity::mixed);
  // J ≠ Γ/2 breaks it too
  c.gamma[1] = 3e-3;
  EXPECT_EQ(check_nonreciprocity(build_spec({topology_kind::cascaded, 2}, c, {kappa, kappa, kappa}, 0.01, 1.0)),
            reciprocity::mixed);
}

TEST(NetworkModel, ReciprocalDriftIsAntiHermitianHoppingPlusDamping) {
  const auto s = make_reciprocal(topology_kind::parallel, 3, 2e-3, kappa, 0.01);
  const auto d = drift_matrix(s);
  const cmat H = cmat(d.A + cmat::Identity(4, 4) * (kappa / 2)) * cplx(0.0, 1.0);
  // −iH_0 + … so iA + iκ/2 = H_0 real symmetric
  EXPECT_LT((H - hopping_matrix(s.topo(), 2e-3).cast<cplx>()).norm(), 1e-15);
}

TEST(NetworkModel, JsonRoundTrip) {
  const auto s = make_nonreciprocal(topology_kind::parallel, 3, 1.5e-3, kappa, 0.002, 1.0, 2);
  const auto back = spec_from_json(spec_to_json(s));
  EXPECT_LT((drift_matrix(back).A - drift_matrix(s).A).norm(), 1e-18);
  EXPECT_EQ(back.kappa(), s.kappa());
  EXPECT_EQ(back.epsilon(), s.epsilon());
  EXPECT_EQ(check_nonreciprocity(back), reciprocity::nonreciprocal);
}

TEST(NetworkModel, JsonBroadcastAndComplexForms) {
  nlohmann::json j = {{"topology", "parallel"}, {"n", 2},        {"J", 0.001},
                      {"theta", 0.0},           {"gamma", 0.002}, {"kappa_a", 0.004},
                      {"kappa_b", {0.001, 0.002}},
                      {"p_coeffs", {nlohmann::json::array({0.0, 1.0}), 1.0, {{"re", 1.0}, {"im", 0.0}}}}};
  const auto s = spec_from_json(j);
  EXPECT_EQ(s.kappa(), (std::vector<double>{0.004, 0.001, 0.002}));
  EXPECT_EQ(s.coupling().p[0], cplx(0.0, 1.0));
  EXPECT_EQ(check_nonreciprocity(s), reciprocity::nonreciprocal);
  j["topology"] = "ring";
  EXPECT_EQ(code_of([&] { spec_from_json(j); }), errc::invalid_argument);
  j["topology"] = "parallel";
  j["kappa_b"] = {0.001};
  EXPECT_EQ(code_of([&] { spec_from_json(j); }), errc::dimension_mismatch);
}

TEST(NetworkModel, ConventionWarningOnlyForComplexChargerPhase) {
  EXPECT_TRUE(convention_warnings(make_nonreciprocal(topology_kind::parallel, 2, 1e-3, kappa, 0.01)).empty());
  EXPECT_EQ(convention_warnings(make_nonreciprocal(topology_kind::parallel, 2, 1e-3, kappa, 0.01, 1.0, 2)).size(), 2u);
  EXPECT_TRUE(convention_warnings(make_nonreciprocal(topology_kind::cascaded, 2, 1e-3, kappa, 0.01, 1.0, 2)).empty());
}

TEST(NetworkModel, HoppingMatrixShapes) {
  const rmat chain = hopping_matrix({topology_kind::cascaded, 3}, 1.0);
  const rmat star = hopping_matrix({topology_kind::parallel, 3}, 1.0);
  EXPECT_EQ(chain.sum(), 6.0);
  EXPECT_EQ(star.row(0).sum(), 3.0);
  EXPECT_EQ(star.bottomRightCorner(3, 3).sum(), 0.0);
  EXPECT_EQ(chain(1, 2), 1.0);
  EXPECT_EQ(star(1, 2), 0.0);
}

TEST(NetworkModel, SpecExampleRates) {
  const double G = 0.003;
  const auto c2 = make_nonreciprocal(topology_kind::cascaded, 2, G / 2, kappa, 0.01);
  EXPECT_EQ(c2.rates().lambda, (std::vector<double>{G + kappa, 2 * G + kappa, G + kappa}));
  const auto p3 = make_nonreciprocal(topology_kind::parallel, 3, G / 2, kappa, 0.01);
  EXPECT_DOUBLE_EQ(p3.rates().lambda[0], 3 * G + kappa);
  auto c = uniform_coupling(2, 3, 0.0, 0.0, 0.0);
  const auto free = build_spec({topology_kind::cascaded, 2}, c, {0.001, 0.002, 0.004}, 0.01, 1.0);
  EXPECT_EQ(free.rates().lambda, (std::vector<double>{0.001, 0.002, 0.004}));
}

TEST(NetworkModel, UndrivenDriftHasNoForcing) {
  const auto d = drift_matrix(make_nonreciprocal(topology_kind::parallel, 3, 1e-3, kappa, 0.0));
  EXPECT_EQ(d.f.norm(), 0.0);
}

TEST(NetworkModel, RatioViolationIsMixed) {
  auto c = uniform_coupling(2, 3, 2e-3, std::numbers::pi / 2, 2e-3);  // J = Γ
  c.J[1] = 1e-3;
  EXPECT_EQ(check_nonreciprocity(build_spec({topology_kind::cascaded, 2}, c, {kappa, kappa, kappa}, 0.01, 1.0)),
            reciprocity::mixed);
  auto r = uniform_coupling(2, 3, 2e-3, 0.0, 0.0);
  EXPECT_EQ(check_nonreciprocity(build_spec({topology_kind::cascaded, 2}, r, {kappa, kappa, kappa}, 0.01, 1.0)),
            reciprocity::reciprocal);
}
