// Terminal amplitude of a reciprocal chain and its eigenmode decomposition.
#include <cstdio>

#include "qbn/closed_form.hpp"
#include "qbn/spectral.hpp"

int main() {
  using namespace qbn;
  const double kappa = 0.003, eps = 0.01;
  std::printf("%3s %12s %14s %6s\n", "N", "J_op", "|b_N|^2", "zero");
  for (int n = 1; n <= 8; ++n) {
    const double J = closed_form::optimal_coupling(topology_kind::cascaded, n, kappa);
    const auto rep = spectral::parity(n, J, kappa, eps);
    std::printf("%3d %12.6g %14.6g %6s\n", n, J, std::norm(rep.terminal_amplitude), rep.has_zero_mode ? "yes" : "no");
  }

  // modal weights for N = 2 deep in the weak-damping regime
  const auto rep = spectral::parity(2, 1.0, 0.01);
  std::printf("\nN=2, kappa = 0.01 J: mode weights\n");
  for (std::size_t k = 0; k < rep.mode_weights.size(); ++k)
    std::printf("  k=%zu  |w| = %.6g\n", k + 1, std::abs(rep.mode_weights[k]));
  std::printf("  |sum| = %.6g\n", std::abs(rep.terminal_amplitude));
}
