#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "network_model.hpp"

namespace qbn {

enum class bath_kind { vacuum, thermal, squeezed };

class reservoir_spec {
 public:
  static reservoir_spec vacuum() { return {}; }

  static reservoir_spec thermal(double n_th) {
    if (!(n_th >= 0.0) || !std::isfinite(n_th)) throw error(errc::negative_rate, "n_th must be >= 0");
    if (n_th == 0.0) return vacuum();
    reservoir_spec r;
    r.kind_ = bath_kind::thermal;
    r.n_th_ = n_th;
    return r;
  }

  static reservoir_spec squeezed(double r_sq, double theta_r = 0.0) {
    if (!(r_sq >= 0.0) || !std::isfinite(r_sq)) throw error(errc::negative_rate, "r must be >= 0");
    if (!std::isfinite(theta_r)) throw error(errc::invalid_argument, "theta_r must be finite");
    if (r_sq == 0.0) return vacuum();
    reservoir_spec r;
    r.kind_ = bath_kind::squeezed;
    r.r_ = r_sq;
    r.theta_r_ = theta_r;
    return r;
  }

  bath_kind kind() const { return kind_; }
  double n_th() const { return n_th_; }
  double r() const { return r_; }
  double theta_r() const { return theta_r_; }

  // Excitation weight of the bath: n_th or sinh²r.
  double P() const {
    if (kind_ == bath_kind::thermal) return n_th_;
    if (kind_ == bath_kind::squeezed) return std::sinh(r_) * std::sinh(r_);
    return 0.0;
  }

  cplx Q() const {
    if (kind_ != bath_kind::squeezed) return 0.0;
    return std::sinh(r_) * std::cosh(r_) * std::exp(cplx(0.0, -theta_r_));
  }

  // Kossakowski matrix over the pair (o, o†) of every dissipation channel.
  Eigen::Matrix2cd kossakowski() const {
    Eigen::Matrix2cd K;
    K << P() + 1.0, -Q(), -std::conj(Q()), P();
    return K;
  }

  std::string label() const {
    switch (kind_) {
      case bath_kind::vacuum: return "vacuum";
      case bath_kind::thermal: return "thermal(n_th=" + std::to_string(n_th_) + ")";
      case bath_kind::squeezed:
        return "squeezed(r=" + std::to_string(r_) + ",theta_r=" + std::to_string(theta_r_) + ")";
    }
    return "?";
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = kind_ == bath_kind::vacuum ? "vacuum" : kind_ == bath_kind::thermal ? "thermal" : "squeezed";
    if (kind_ == bath_kind::thermal) j["n_th"] = n_th_;
    if (kind_ == bath_kind::squeezed) {
      j["r"] = r_;
      j["theta_r"] = theta_r_;
    }
    return j;
  }

  static reservoir_spec from_json(const nlohmann::json& j) {
    const auto kind = j.value("kind", std::string("vacuum"));
    if (kind == "vacuum") return vacuum();
    if (kind == "thermal") return thermal(j.value("n_th", 0.0));
    if (kind == "squeezed") return squeezed(j.value("r", 0.0), j.value("theta_r", 0.0));
    throw error(errc::invalid_argument, "unknown bath kind '" + kind + "'");
  }

 private:
  bath_kind kind_ = bath_kind::vacuum;
  double n_th_ = 0.0;
  double r_ = 0.0;
  double theta_r_ = 0.0;
};

// A dissipation channel o = Σ_m c_m a_m.
struct channel {
  std::vector<std::pair<int, cplx>> terms;
};

// Local √κ_m a_m channels followed by collective √Γ_i (p_u a_u + p_d a_d).
inline std::vector<channel> dissipation_channels(const network_spec& s) {
  std::vector<channel> out;
  for (int m = 0; m < s.modes(); ++m)
    if (s.kappa()[m] > 0.0) out.push_back({{{m, std::sqrt(s.kappa()[m])}}});
  const auto& c = s.coupling();
  for (int i = 0; i < s.topo().links(); ++i) {
    if (c.gamma[i] == 0.0) continue;
    auto [u, d] = link_at(s.topo(), i);
    const double g = std::sqrt(c.gamma[i]);
    out.push_back({{{u, g * c.p[u]}, {d, g * c.p[d]}}});
  }
  return out;
}

// Quadrature order (x_0, p_0, x_1, p_1, …), x = (a + a†)/√2, p = −i(a − a†)/√2.
struct quadrature_system {
  rmat drift;
  rmat diffusion;
  rmat excess_diffusion;  // D + (A + A^T)/2: source of σ − I/2, zero for a vacuum bath
  rvec drive;
  cmat complex_drift;
  double omega = 1.0;

  int modes() const { return static_cast<int>(complex_drift.rows()); }
};

struct gaussian_state {
  rvec mean;
  rmat cov;
  double time = 0.0;
  // σ − I/2 carried separately so small occupations do not cancel against the
  // vacuum variance; optional (empty means derive from cov)
  rmat excess;

  static gaussian_state ground(int modes, double t0 = 0.0) {
    return {rvec::Zero(2 * modes), rmat::Identity(2 * modes, 2 * modes) / 2.0, t0,
            rmat::Zero(2 * modes, 2 * modes)};
  }

  static gaussian_state from_excess(rvec mean, rmat excess, double t) {
    rmat cov = excess;
    cov.diagonal().array() += 0.5;
    return {std::move(mean), std::move(cov), t, std::move(excess)};
  }

  int modes() const { return static_cast<int>(mean.size() / 2); }

  cplx amplitude(int m) const { return cplx(mean(2 * m), mean(2 * m + 1)) / std::sqrt(2.0); }

  // ⟨a_m† a_m⟩ with vacuum variance 1/2.
  double occupation(int m) const {
    const double fluct = excess.size() == cov.size() ? (excess(2 * m, 2 * m) + excess(2 * m + 1, 2 * m + 1)) / 2.0
                                                     : (cov(2 * m, 2 * m) + cov(2 * m + 1, 2 * m + 1) - 1.0) / 2.0;
    return fluct + (mean(2 * m) * mean(2 * m) + mean(2 * m + 1) * mean(2 * m + 1)) / 2.0;
  }

  Eigen::Matrix2d reduced_cov(int m) const { return cov.block<2, 2>(2 * m, 2 * m); }
  Eigen::Vector2d reduced_mean(int m) const { return mean.segment<2>(2 * m); }
};

inline bool is_physical(const gaussian_state& s, double slack = 1e-9) {
  if ((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, s.cov.cwiseAbs().maxCoeff()))
    return false;
  return linalg::symplectic_eigenvalues(s.cov).minCoeff() >= 0.5 - slack;
}

// Real image of a complex matrix acting on interleaved (Re, Im) pairs.
inline rmat real_image(const cmat& A) {
  const Eigen::Index M = A.rows();
  rmat R(2 * M, 2 * M);
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = 0; j < M; ++j) {
      const cplx z = A(i, j);
      R(2 * i, 2 * j) = z.real();
      R(2 * i, 2 * j + 1) = -z.imag();
      R(2 * i + 1, 2 * j) = z.imag();
      R(2 * i + 1, 2 * j + 1) = z.real();
    }
  return R;
}

inline rmat symplectic_form(int modes) {
  rmat W = rmat::Zero(2 * modes, 2 * modes);
  for (int m = 0; m < modes; ++m) {
    W(2 * m, 2 * m + 1) = 1.0;
    W(2 * m + 1, 2 * m) = -1.0;
  }
  return W;
}

// C = Σ_ch Σ_kl K_kl conj(v_l) v_k^T with v_1, v_2 the quadrature coefficient
// vectors of o and o†. Diffusion is Ω Re(C) Ω^T; Ω Im(C) is the damping part
// of the drift.
inline cmat channel_gram(const network_spec& s, const reservoir_spec& bath) {
  const int M = s.modes();
  const Eigen::Matrix2cd K = bath.kossakowski();
  const cplx I(0.0, 1.0);
  cmat C = cmat::Zero(2 * M, 2 * M);
  for (const auto& ch : dissipation_channels(s)) {
    cvec v1 = cvec::Zero(2 * M);
    for (auto [m, c] : ch.terms) {
      v1(2 * m) += c / std::sqrt(2.0);
      v1(2 * m + 1) += I * c / std::sqrt(2.0);
    }
    const cvec v2 = v1.conjugate();
    const std::array<const cvec*, 2> v{&v1, &v2};
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) C += K(k, l) * v[l]->conjugate() * v[k]->transpose();
  }
  return C;
}

inline quadrature_system assemble(const network_spec& s, const reservoir_spec& bath) {
  const auto d = drift_matrix(s);
  const int M = s.modes();
  quadrature_system q;
  q.complex_drift = d.A;
  q.drift = real_image(d.A);
  q.drive = rvec(2 * M);
  for (int m = 0; m < M; ++m) {
    q.drive(2 * m) = std::sqrt(2.0) * d.f(m).real();
    q.drive(2 * m + 1) = std::sqrt(2.0) * d.f(m).imag();
  }
  const rmat W = symplectic_form(M);
  const cmat C = channel_gram(s, bath);
  q.diffusion = W * C.real() * W.transpose();
  q.diffusion = (q.diffusion + q.diffusion.transpose()) / 2.0;
  q.excess_diffusion = q.diffusion + (q.drift + q.drift.transpose()) / 2.0;
  q.omega = s.omega();
  return q;
}

namespace detail {

inline double max_real_eig(const quadrature_system& q) {
  const cvec ev = q.complex_drift.eigenvalues();
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) mx = std::max(mx, ev(i).real());
  return mx;
}

inline double min_abs_real_eig(const quadrature_system& q) {
  const cvec ev = q.complex_drift.eigenvalues();
  double mn = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) mn = std::min(mn, std::abs(ev(i).real()));
  return mn;
}

// The propagator's Q integrates the excess diffusion, so it acts on σ − I/2.
inline gaussian_state advance(const linalg::step_propagator& p, const gaussian_state& s) {
  rmat ex = s.excess.size() == s.cov.size() ? s.excess : rmat(s.cov - rmat::Identity(s.cov.rows(), s.cov.cols()) / 2.0);
  ex = p.phi * ex * p.phi.transpose() + p.Q;
  ex = (ex + ex.transpose()) / 2.0;
  return gaussian_state::from_excess(p.phi * s.mean + p.g, std::move(ex), s.time + p.h);
}

}  // namespace detail

// Steps sharing a length (to 1e-12 relative) reuse one propagator.
class propagator_cache {
 public:
  explicit propagator_cache(const quadrature_system& q) : q_(q) {}

  const linalg::step_propagator& get(double h) {
    auto it = cache_.lower_bound(h * (1 - 1e-12));
    if (it != cache_.end() && it->first <= h * (1 + 1e-12)) return it->second;
    return cache_.emplace(h, linalg::make_propagator(q_.drift, q_.drive, q_.excess_diffusion, h)).first->second;
  }

 private:
  const quadrature_system& q_;
  std::map<double, linalg::step_propagator> cache_;
};

inline std::vector<gaussian_state> evolve(const quadrature_system& q, const gaussian_state& start,
                                          const std::vector<double>& t_grid) {
  if (t_grid.empty()) return {};
  if (t_grid.front() < start.time) throw error(errc::invalid_argument, "t_grid starts before the state time");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw error(errc::invalid_argument, "t_grid must be strictly increasing");

  const double growth = detail::max_real_eig(q);
  if (growth > 1e-12 * q.omega && growth * (t_grid.back() - start.time) > 1.0)
    throw error(errc::unstable_system, "drift has an eigenvalue with positive real part");

  propagator_cache cache(q);
  std::vector<gaussian_state> out;
  out.reserve(t_grid.size());
  gaussian_state cur = start;
  for (double t : t_grid) {
    const double h = t - cur.time;
    if (h > 0.0) cur = detail::advance(cache.get(h), cur);
    cur.time = t;
    out.push_back(cur);
  }
  return out;
}

inline gaussian_state steady_state(const quadrature_system& q) {
  const double tol = 1e-12 * q.omega;
  if (detail::min_abs_real_eig(q) <= tol)
    throw error(errc::singular_drift, "drift has an eigenvalue with vanishing real part");
  if (detail::max_real_eig(q) > tol) throw error(errc::unstable_system, "drift is unstable");
  rmat ex = linalg::solve_lyapunov(q.drift, q.excess_diffusion);
  return gaussian_state::from_excess(q.drift.partialPivLu().solve(-q.drive), std::move(ex),
                                     std::numeric_limits<double>::infinity());
}

// Earliest time after which the chosen mode's occupation stays at or above
// threshold·(steady value). Mode defaults to the last (terminal) mode.
inline double relaxation_time(const quadrature_system& q, double threshold = 0.95, int mode = -1) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw error(errc::invalid_argument, "threshold must lie in (0, 1)");
  if (mode < 0) mode = q.modes() - 1;
  const double e_ss = steady_state(q).occupation(mode);
  const double target = threshold * e_ss;
  const auto ground = gaussian_state::ground(q.modes());
  if (ground.occupation(mode) >= target && e_ss <= 0.0) return 0.0;

  const double horizon_cap = 1e7 / q.omega;
  const double slow = detail::min_abs_real_eig(q);
  double T = 40.0 / slow;
  if (T > horizon_cap) throw error(errc::not_converged, "relaxation horizon exceeds 1e7/omega");

  double previous = -1.0;
  int n = 256;
  while (true) {
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) grid[i] = T * (i + 1) / n;
    auto states = evolve(q, ground, grid);
    int last_below = -1;
    if (ground.occupation(mode) < target) last_below = 0;
    for (int i = 0; i < n; ++i)
      if (states[i].occupation(mode) < target) last_below = i + 1;

    if (last_below == n) {
      T *= 2.0;
      if (T > horizon_cap) throw error(errc::not_converged, "relaxation horizon exceeds 1e7/omega");
      previous = -1.0;
      continue;
    }

    double t_star = 0.0;
    if (last_below >= 0) {
      // bisection between the last grid point below target and the next one
      gaussian_state lo_state = last_below == 0 ? ground : states[last_below - 1];
      double lo = lo_state.time, hi = grid[last_below];
      for (int it = 0; it < 60 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        auto p = linalg::make_propagator(q.drift, q.drive, q.excess_diffusion, mid - lo_state.time);
        auto sm = detail::advance(p, lo_state);
        if (sm.occupation(mode) < target) {
          lo = mid;
          lo_state = sm;
        } else {
          hi = mid;
        }
      }
      t_star = hi;
    }
    if (previous >= 0.0 && std::abs(t_star - previous) <= 0.01 * std::max(t_star, 1e-300)) return t_star;
    if (previous >= 0.0 && t_star == 0.0 && previous == 0.0) return 0.0;
    previous = t_star;
    n *= 2;
    if (n > (1 << 17)) throw error(errc::not_converged, "relaxation time did not stabilise under grid refinement");
  }
}

}  // namespace qbn
