#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "errors.hpp"

namespace qbn {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rmat = Eigen::MatrixXd;
using rvec = Eigen::VectorXd;

enum class topology_kind { cascaded, parallel };

struct topology {
  topology_kind kind = topology_kind::cascaded;
  int n_batteries = 1;

  int modes() const { return n_batteries + 1; }
  int links() const { return n_batteries; }
};

// Link i (1-based in the physics, 0-based here) connects an upstream mode to a
// downstream mode. Cascaded: i -> i+1. Parallel: charger -> i+1.
struct link {
  int up;
  int down;
};

inline link link_at(const topology& topo, int i) {
  if (topo.kind == topology_kind::cascaded) return {i, i + 1};
  return {0, i + 1};
}

struct coupling_spec {
  std::vector<double> J;
  std::vector<double> theta;
  std::vector<double> gamma;
  std::vector<cplx> p;  // one per mode, charger first
};

struct effective_rates {
  std::vector<double> lambda;  // one per mode
  std::vector<cplx> mu;        // one per link
};

enum class reciprocity { nonreciprocal, reciprocal, mixed };

inline std::string to_string(reciprocity r) {
  switch (r) {
    case reciprocity::nonreciprocal: return "nonreciprocal";
    case reciprocity::reciprocal: return "reciprocal";
    case reciprocity::mixed: return "mixed";
  }
  return "?";
}

inline std::string to_string(topology_kind k) {
  return k == topology_kind::cascaded ? "cascaded" : "parallel";
}

class network_spec {
 public:
  network_spec() = default;

  const topology& topo() const { return topo_; }
  const coupling_spec& coupling() const { return coupling_; }
  const std::vector<double>& kappa() const { return kappa_; }
  double epsilon() const { return epsilon_; }
  double omega() const { return omega_; }
  const effective_rates& rates() const { return rates_; }
  int modes() const { return topo_.modes(); }
  int terminal() const { return topo_.n_batteries; }

  friend network_spec build_spec(topology, coupling_spec, std::vector<double>, double, double);

 private:
  topology topo_;
  coupling_spec coupling_;
  std::vector<double> kappa_;  // κ_a, κ_1 … κ_N
  double epsilon_ = 0.0;
  double omega_ = 1.0;
  effective_rates rates_;
};

namespace detail {

inline void require_nonneg(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw error(errc::negative_rate, std::string(what) + " must be finite and nonnegative");
}

inline double wrap_angle(double x) {
  const double two_pi = 2.0 * std::numbers::pi;
  x = std::fmod(x, two_pi);
  if (x < 0) x += two_pi;
  return x;
}

inline bool angle_close(double a, double b, double tol) {
  double d = std::abs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, 2.0 * std::numbers::pi - d) <= tol;
}

}  // namespace detail

inline effective_rates compute_rates(const topology& topo, const coupling_spec& c,
                                     const std::vector<double>& kappa) {
  effective_rates r;
  r.lambda.assign(kappa.begin(), kappa.end());
  r.mu.resize(topo.links());
  for (int i = 0; i < topo.links(); ++i) {
    auto [u, d] = link_at(topo, i);
    r.lambda[u] += c.gamma[i] * std::norm(c.p[u]);
    r.lambda[d] += c.gamma[i] * std::norm(c.p[d]);
    r.mu[i] = std::conj(c.p[u]) * c.p[d];
  }
  return r;
}

// kappa = (κ_a, κ_1, …, κ_N)
inline network_spec build_spec(topology topo, coupling_spec c, std::vector<double> kappa,
                               double epsilon, double omega) {
  if (topo.n_batteries < 1) throw error(errc::dimension_mismatch, "N must be >= 1");
  const auto L = static_cast<std::size_t>(topo.links());
  const auto M = static_cast<std::size_t>(topo.modes());
  if (c.J.size() != L || c.theta.size() != L || c.gamma.size() != L)
    throw error(errc::dimension_mismatch, "J, theta, gamma need one entry per link");
  if (c.p.size() != M) throw error(errc::dimension_mismatch, "p_coeffs need one entry per mode");
  if (kappa.size() != M) throw error(errc::dimension_mismatch, "kappa needs one entry per mode");
  detail::require_nonneg(c.J, "J");
  detail::require_nonneg(c.gamma, "gamma");
  detail::require_nonneg(kappa, "kappa");
  for (double th : c.theta)
    if (!std::isfinite(th)) throw error(errc::invalid_argument, "theta must be finite");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw error(errc::negative_rate, "epsilon must be finite and nonnegative");
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw error(errc::negative_rate, "omega must be positive");
  for (const auto& p : c.p)
    if (std::abs(std::abs(p) - 1.0) > 1e-12)
      throw error(errc::non_unit_p_coefficient, "|p_m| must equal 1");

  network_spec s;
  s.rates_ = compute_rates(topo, c, kappa);
  s.topo_ = topo;
  s.coupling_ = std::move(c);
  s.kappa_ = std::move(kappa);
  s.epsilon_ = epsilon;
  s.omega_ = omega;
  return s;
}

// Headline parameterisation: every link shares J, θ, Γ; batteries share κ_b.
struct uniform_params {
  topology_kind kind = topology_kind::cascaded;
  int n = 1;
  double J = 0.0;
  double theta = 0.0;
  double gamma = 0.0;
  double kappa_a = 0.003;
  double kappa_b = 0.003;
  double epsilon = 0.01;
  double omega = 1.0;
  std::vector<cplx> p;  // empty -> all ones
};

inline network_spec make_uniform(const uniform_params& u) {
  topology topo{u.kind, u.n};
  coupling_spec c;
  c.J.assign(topo.links(), u.J);
  c.theta.assign(topo.links(), u.theta);
  c.gamma.assign(topo.links(), u.gamma);
  c.p = u.p.empty() ? std::vector<cplx>(topo.modes(), cplx(1.0, 0.0)) : u.p;
  std::vector<double> kappa(topo.modes(), u.kappa_b);
  kappa[0] = u.kappa_a;
  return build_spec(topo, std::move(c), std::move(kappa), u.epsilon, u.omega);
}

// p-phases of the θ = 0, μ = −i pattern.
inline std::vector<cplx> pattern2_phases(const topology& topo) {
  const cplx I(0.0, 1.0);
  std::vector<cplx> p(topo.modes());
  if (topo.kind == topology_kind::cascaded) {
    for (int m = 0; m < topo.modes(); ++m) p[m] = std::pow(I, 1 - m);
    // integer powers of i through std::pow carry rounding; snap to the exact unit
    for (auto& z : p) z = cplx(std::round(z.real()), std::round(z.imag()));
  } else {
    p.assign(topo.modes(), cplx(1.0, 0.0));
    p[0] = I;
  }
  return p;
}

// Nonreciprocal network at J = Γ/2 on every link.
inline network_spec make_nonreciprocal(topology_kind kind, int n, double J, double kappa,
                                       double epsilon, double omega = 1.0, int pattern = 1) {
  uniform_params u;
  u.kind = kind;
  u.n = n;
  u.J = J;
  u.gamma = 2.0 * J;
  u.kappa_a = u.kappa_b = kappa;
  u.epsilon = epsilon;
  u.omega = omega;
  if (pattern == 1) {
    u.theta = std::numbers::pi / 2;
  } else {
    u.theta = 0.0;
    u.p = pattern2_phases({kind, n});
  }
  return make_uniform(u);
}

// Coherent hopping only (Γ = 0, θ = 0).
inline network_spec make_reciprocal(topology_kind kind, int n, double J, double kappa,
                                    double epsilon, double omega = 1.0) {
  uniform_params u;
  u.kind = kind;
  u.n = n;
  u.J = J;
  u.kappa_a = u.kappa_b = kappa;
  u.epsilon = epsilon;
  u.omega = omega;
  return make_uniform(u);
}

inline reciprocity check_nonreciprocity(const network_spec& s, double tol = 1e-10) {
  const auto& c = s.coupling();
  const auto& mu = s.rates().mu;
  bool all_zero = true;
  for (double g : c.gamma) all_zero = all_zero && g == 0.0;
  if (all_zero) return reciprocity::reciprocal;

  const double half_pi = std::numbers::pi / 2;
  for (int i = 0; i < s.topo().links(); ++i) {
    const double J = c.J[i], G = c.gamma[i];
    const double scale = std::max(J, G / 2);
    if (G == 0.0 || std::abs(J - G / 2) > tol * scale) return reciprocity::mixed;
    const bool first = detail::angle_close(c.theta[i], half_pi, tol) && std::abs(mu[i] - 1.0) <= tol;
    const bool second =
        detail::angle_close(c.theta[i], 0.0, tol) && std::abs(mu[i] - cplx(0.0, -1.0)) <= tol;
    if (!first && !second) return reciprocity::mixed;
  }
  return reciprocity::nonreciprocal;
}

// Parallel links where the conjugation-free reading μ = p_a p_b would give a
// different phase from μ = p_a* p_b used here. Energies depend on |μ| only.
inline std::vector<std::string> convention_warnings(const network_spec& s, double tol = 1e-12) {
  std::vector<std::string> out;
  if (s.topo().kind != topology_kind::parallel) return out;
  const auto& p = s.coupling().p;
  for (int i = 0; i < s.topo().links(); ++i) {
    const cplx alt = p[0] * p[i + 1];
    if (std::abs(alt - s.rates().mu[i]) > tol)
      out.push_back("link " + std::to_string(i + 1) + ": mu = conj(p_a) p_b differs in phase from p_a p_b; "
                    "energies are unaffected");
  }
  return out;
}

struct drift_system {
  cmat A;
  cvec f;
};

// d<v>/dt = A <v> + f with v = (a, b_1, …, b_N).
inline drift_system drift_matrix(const network_spec& s) {
  const int M = s.modes();
  const cplx I(0.0, 1.0);
  const auto& c = s.coupling();
  const auto& r = s.rates();
  drift_system d{cmat::Zero(M, M), cvec::Zero(M)};
  for (int m = 0; m < M; ++m) d.A(m, m) = -r.lambda[m] / 2.0;
  for (int i = 0; i < s.topo().links(); ++i) {
    auto [u, dn] = link_at(s.topo(), i);
    d.A(u, dn) += -(I * c.J[i] * std::exp(I * c.theta[i]) + r.mu[i] * c.gamma[i] / 2.0);
    d.A(dn, u) += -(I * c.J[i] * std::exp(-I * c.theta[i]) + std::conj(r.mu[i]) * c.gamma[i] / 2.0);
  }
  d.f(0) = -I * s.epsilon();
  return d;
}

// Real symmetric hopping matrix of the coherent part (valid for θ = 0 specs).
inline rmat hopping_matrix(const topology& topo, double J) {
  rmat H = rmat::Zero(topo.modes(), topo.modes());
  for (int i = 0; i < topo.links(); ++i) {
    auto [u, d] = link_at(topo, i);
    H(u, d) = H(d, u) = J;
  }
  return H;
}

// ---- JSON config ---------------------------------------------------------

namespace detail {

inline std::vector<double> broadcast(const nlohmann::json& j, const char* key, std::size_t n,
                                     double fallback) {
  if (!j.contains(key)) return std::vector<double>(n, fallback);
  const auto& v = j.at(key);
  if (v.is_number()) return std::vector<double>(n, v.get<double>());
  if (!v.is_array()) throw error(errc::invalid_argument, std::string(key) + " must be number or array");
  auto out = v.get<std::vector<double>>();
  if (out.size() != n) throw error(errc::dimension_mismatch, std::string(key) + " has wrong length");
  return out;
}

inline cplx parse_complex(const nlohmann::json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2) return {v[0].get<double>(), v[1].get<double>()};
  if (v.is_object()) return {v.value("re", 0.0), v.value("im", 0.0)};
  throw error(errc::invalid_argument, "complex value must be number, [re, im] or {re, im}");
}

}  // namespace detail

inline network_spec spec_from_json(const nlohmann::json& j) {
  try {
    topology topo;
    const auto kind = j.value("topology", std::string("cascaded"));
    if (kind == "cascaded") topo.kind = topology_kind::cascaded;
    else if (kind == "parallel") topo.kind = topology_kind::parallel;
    else throw error(errc::invalid_argument, "unknown topology '" + kind + "'");
    topo.n_batteries = j.value("n", 1);
    if (topo.n_batteries < 1) throw error(errc::dimension_mismatch, "n must be >= 1");
    const auto L = static_cast<std::size_t>(topo.links());
    const auto M = static_cast<std::size_t>(topo.modes());

    coupling_spec c;
    c.J = detail::broadcast(j, "J", L, 0.0);
    c.theta = detail::broadcast(j, "theta", L, 0.0);
    c.gamma = detail::broadcast(j, "gamma", L, 0.0);
    if (j.contains("p_coeffs")) {
      for (const auto& v : j.at("p_coeffs")) c.p.push_back(detail::parse_complex(v));
    } else {
      c.p.assign(M, cplx(1.0, 0.0));
    }
    std::vector<double> kappa{j.value("kappa_a", 0.003)};
    const auto kb = detail::broadcast(j, "kappa_b", M - 1, 0.003);
    kappa.insert(kappa.end(), kb.begin(), kb.end());
    return build_spec(topo, std::move(c), std::move(kappa), j.value("epsilon", 0.01),
                      j.value("omega", 1.0));
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::invalid_argument, e.what());
  }
}

inline nlohmann::json spec_to_json(const network_spec& s) {
  nlohmann::json j;
  j["topology"] = to_string(s.topo().kind);
  j["n"] = s.topo().n_batteries;
  j["J"] = s.coupling().J;
  j["theta"] = s.coupling().theta;
  j["gamma"] = s.coupling().gamma;
  j["kappa_a"] = s.kappa()[0];
  j["kappa_b"] = std::vector<double>(s.kappa().begin() + 1, s.kappa().end());
  j["epsilon"] = s.epsilon();
  j["omega"] = s.omega();
  auto& p = j["p_coeffs"] = nlohmann::json::array();
  for (auto z : s.coupling().p) p.push_back({z.real(), z.imag()});
  return j;
}

}  // namespace qbn
