#pragma once

#include <cmath>
#include <vector>

#include "network_model.hpp"

namespace qbn::closed_form {

// Partial-fraction weights of the cascaded step response over rates Λ_0 … Λ_n:
//   b_n(t)/b_n(∞) = 1 − Σ_p c_p exp(−Λ_p t/2),  c_p = Π_{m≠p} Λ_m/(Λ_m − Λ_p).
// 𝒱 is the product of pairwise differences (Λ_j − Λ_m), m < j, and 𝒱^(p) the
// same product with index p removed, so that c_p = (−1)^p 𝒱^(p)/𝒱 · Π_{m≠p} Λ_m.
class vandermonde_kernel {
 public:
  static constexpr double delta_rel = 1e-9;

  explicit vandermonde_kernel(std::vector<double> lambda) : lambda_(std::move(lambda)) {
    const std::size_t n = lambda_.size();
    double mx = 0.0;
    for (double l : lambda_) mx = std::max(mx, std::abs(l));
    for (std::size_t m = 0; m < n; ++m) {
      if (!(lambda_[m] > 0.0)) throw error(errc::zero_rate, "effective rate must be positive");
      for (std::size_t j = m + 1; j < n; ++j)
        if (std::abs(lambda_[m] - lambda_[j]) < delta_rel * mx)
          throw error(errc::degenerate_rates, "effective rates are degenerate; use moment_dynamics::evolve");
    }
    // coefficients and the bracket are carried in extended precision: the
    // alternating sum cancels to O(t^{n}) at early times
    coeff_.resize(n);
    const bool log_space = n > 9;
    for (std::size_t p = 0; p < n; ++p) {
      if (log_space) {
        long double log_mag = 0.0L;
        int sign = 1;
        for (std::size_t m = 0; m < n; ++m) {
          if (m == p) continue;
          const long double diff = static_cast<long double>(lambda_[m]) - lambda_[p];
          log_mag += std::log(static_cast<long double>(lambda_[m])) - std::log(std::abs(diff));
          if (diff < 0) sign = -sign;
        }
        coeff_[p] = sign * std::exp(log_mag);
      } else {
        // c_p = (−1)^p 𝒱^(p)/𝒱 Π_{m≠p} Λ_m = Π_{m≠p} Λ_m / (Λ_m − Λ_p)
        long double c = 1.0L;
        for (std::size_t m = 0; m < n; ++m)
          if (m != p) c *= static_cast<long double>(lambda_[m]) / (static_cast<long double>(lambda_[m]) - lambda_[p]);
        coeff_[p] = c;
      }
    }
  }

  // 𝒱 = Π_{m<j} (Λ_j − Λ_m)
  double vandermonde() const { return vandermonde_without(lambda_.size()); }

  // 𝒱^(p): same product skipping index p (p out of range skips nothing)
  double vandermonde_without(std::size_t p) const {
    double v = 1.0;
    for (std::size_t m = 0; m < lambda_.size(); ++m)
      for (std::size_t j = m + 1; j < lambda_.size(); ++j)
        if (m != p && j != p) v *= lambda_[j] - lambda_[m];
    return v;
  }

  const std::vector<double>& lambda() const { return lambda_; }
  std::vector<double> coefficients() const { return {coeff_.begin(), coeff_.end()}; }

  // 1 − Σ_p c_p e^{−Λ_p t/2}; zero at t = 0, one at t → ∞.
  double bracket(double t) const {
    long double s = 1.0L;
    for (std::size_t p = 0; p < lambda_.size(); ++p)
      s -= coeff_[p] * std::exp(-static_cast<long double>(lambda_[p]) * t / 2.0L);
    return static_cast<double>(s);
  }

 private:
  std::vector<double> lambda_;
  std::vector<long double> coeff_;
};

namespace detail {

inline void require_nonreciprocal(const network_spec& s, topology_kind kind) {
  if (s.topo().kind != kind)
    throw error(errc::precondition, "closed form requested for the wrong topology");
  if (check_nonreciprocity(s) != reciprocity::nonreciprocal)
    throw error(errc::precondition, "closed forms require a nonreciprocal spec");
}

inline void require_mode(const network_spec& s, int n) {
  if (n < 0 || n >= s.modes()) throw error(errc::invalid_argument, "mode index out of range");
}

// log of 4^{n+1} ε² Π_{links ≤ n} |μ|²Γ² / Π_{modes ≤ n} Λ²
inline double log_cascaded_ss(const network_spec& s, int n) {
  const auto& r = s.rates();
  const auto& c = s.coupling();
  double lg = (n + 1) * std::log(4.0) + 2.0 * std::log(s.epsilon());
  for (int m = 0; m <= n; ++m) {
    if (!(r.lambda[m] > 0.0)) throw error(errc::zero_rate, "effective rate vanishes");
    lg -= 2.0 * std::log(r.lambda[m]);
  }
  for (int i = 0; i < n; ++i) lg += 2.0 * std::log(std::abs(r.mu[i]) * c.gamma[i]);
  return lg;
}

}  // namespace detail

inline double energy_cascaded_ss(const network_spec& s, int n) {
  detail::require_nonreciprocal(s, topology_kind::cascaded);
  detail::require_mode(s, n);
  if (s.epsilon() == 0.0) {
    for (int m = 0; m <= n; ++m)
      if (!(s.rates().lambda[m] > 0.0)) throw error(errc::zero_rate, "effective rate vanishes");
    return 0.0;
  }
  if (n > 8) return s.omega() * std::exp(detail::log_cascaded_ss(s, n));
  const auto& r = s.rates();
  const auto& c = s.coupling();
  double num = std::pow(4.0, n + 1) * s.epsilon() * s.epsilon();
  double den = 1.0;
  for (int m = 0; m <= n; ++m) {
    if (!(r.lambda[m] > 0.0)) throw error(errc::zero_rate, "effective rate vanishes");
    den *= r.lambda[m] * r.lambda[m];
  }
  for (int i = 0; i < n; ++i) num *= std::norm(r.mu[i]) * c.gamma[i] * c.gamma[i];
  return s.omega() * num / den;
}

inline double energy_cascaded_t(const network_spec& s, int n, double t) {
  detail::require_nonreciprocal(s, topology_kind::cascaded);
  detail::require_mode(s, n);
  const auto& lam = s.rates().lambda;
  vandermonde_kernel k(std::vector<double>(lam.begin(), lam.begin() + n + 1));
  const double b = k.bracket(t);
  return energy_cascaded_ss(s, n) * b * b;
}

inline double energy_parallel_ss(const network_spec& s, int n) {
  detail::require_nonreciprocal(s, topology_kind::parallel);
  detail::require_mode(s, n);
  const auto& r = s.rates();
  const double e2 = s.epsilon() * s.epsilon();
  if (!(r.lambda[0] > 0.0) || !(r.lambda[n] > 0.0)) throw error(errc::zero_rate, "effective rate vanishes");
  if (n == 0) return 4.0 * s.omega() * e2 / (r.lambda[0] * r.lambda[0]);
  const double g = s.coupling().gamma[n - 1];
  return 16.0 * s.omega() * e2 * std::norm(r.mu[n - 1]) * g * g /
         (r.lambda[0] * r.lambda[0] * r.lambda[n] * r.lambda[n]);
}

inline double energy_parallel_t(const network_spec& s, int n, double t) {
  detail::require_nonreciprocal(s, topology_kind::parallel);
  detail::require_mode(s, n);
  const auto& r = s.rates();
  const double l0 = r.lambda[0];
  if (n == 0) {
    const double b = 1.0 - std::exp(-l0 * t / 2.0);
    return energy_parallel_ss(s, 0) * b * b;
  }
  const double ln = r.lambda[n];
  vandermonde_kernel k({l0, ln});  // validates distinctness and positivity
  const double b = ((l0 - ln) - (l0 * std::exp(-ln * t / 2.0) - ln * std::exp(-l0 * t / 2.0))) / (l0 - ln);
  return energy_parallel_ss(s, n) * b * b;
}

inline double terminal_scaling_cascaded(int N, double gamma, double kappa, double eps, double omega) {
  if (N < 1) throw error(errc::invalid_argument, "N must be >= 1");
  if (gamma == 0.0 || eps == 0.0) return 0.0;
  const double lg = (N + 1) * std::log(4.0) + std::log(omega) + 2.0 * std::log(eps) + 2.0 * N * std::log(gamma) -
                    4.0 * std::log(gamma + kappa) - (2.0 * N - 2.0) * std::log(2.0 * gamma + kappa);
  return std::exp(lg);
}

inline double terminal_scaling_parallel(int N, double gamma, double kappa, double eps, double omega) {
  if (N < 1) throw error(errc::invalid_argument, "N must be >= 1");
  const double a = N * gamma + kappa, b = gamma + kappa;
  return 16.0 * omega * eps * eps * gamma * gamma / (a * a * b * b);
}

inline double optimal_coupling(topology_kind kind, int N, double kappa) {
  if (N < 1) throw error(errc::invalid_argument, "N must be >= 1");
  if (!(kappa > 0.0)) throw error(errc::invalid_argument, "kappa must be positive");
  const double n = N;
  if (kind == topology_kind::cascaded) return kappa / 8.0 * (n + std::sqrt(n * n + 8.0 * n));
  return kappa / (2.0 * std::sqrt(n));
}

// Reciprocal star graph with Γ read as 2J.
inline double reciprocal_parallel_ss(int N, double J, double kappa, double eps, double omega) {
  if (N < 1) throw error(errc::invalid_argument, "N must be >= 1");
  if (!(J > 0.0) || !(kappa > 0.0)) throw error(errc::invalid_argument, "J and kappa must be positive");
  const double G = 2.0 * J;
  const double d = 4.0 * N * J * J + kappa * kappa;
  return 4.0 * G * G * omega * eps * eps / (d * d);
}

// Open interval (κ/2N, κ/2) where the reciprocal star graph out-stores the
// nonreciprocal one.
inline std::pair<double, double> reciprocal_window(int N, double kappa) {
  return {kappa / (2.0 * N), kappa / 2.0};
}

}  // namespace qbn::closed_form
