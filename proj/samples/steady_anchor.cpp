// Single-battery anchor: three engines agree on E/ω = ε²/κ² at the optimal coupling.
#include <cstdio>

#include "qbn/closed_form.hpp"
#include "qbn/energetics.hpp"
#include "qbn/fock_oracle.hpp"

int main() {
  using namespace qbn;
  const double kappa = 0.003, eps = 0.01;
  const double J = closed_form::optimal_coupling(topology_kind::cascaded, 1, kappa);
  const auto spec = make_nonreciprocal(topology_kind::cascaded, 1, J, kappa, eps);

  const auto steady = steady_state(assemble(spec, reservoir_spec::vacuum()));
  std::printf("J_op              %.6g\n", J);
  std::printf("closed form       %.12f\n", closed_form::energy_cascaded_ss(spec, 1));
  std::printf("Lyapunov          %.12f\n", stored_energy(steady, 1));

  // the Fock oracle runs at a ten times weaker drive; energies scale with ε²
  const auto weak = make_nonreciprocal(topology_kind::cascaded, 1, J, kappa, eps / 10);
  fock::lindblad_model model(weak, reservoir_spec::vacuum(), fock::fock_config::uniform(2, 8));
  const cmat rho = fock::steady_state(model);
  const auto rep = fock::report(rho, model, 0.0);
  std::printf("Fock oracle x100  %.12f\n", 100.0 * rep.energy[1]);
  std::printf("eps^2/kappa^2     %.12f\n", eps * eps / (kappa * kappa));
}
