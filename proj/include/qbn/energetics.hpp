#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "moment_dynamics.hpp"

namespace qbn {

enum class engine_kind { closed_form, gaussian, spectral, fock_oracle };

inline std::string to_string(engine_kind e) {
  switch (e) {
    case engine_kind::closed_form: return "closed_form";
    case engine_kind::gaussian: return "gaussian";
    case engine_kind::spectral: return "spectral";
    case engine_kind::fock_oracle: return "fock_oracle";
  }
  return "?";
}

struct energy_report {
  std::vector<double> energy;
  std::vector<double> ergotropy;
  std::vector<double> passive;
  engine_kind engine = engine_kind::gaussian;
  double time = 0.0;  // +inf marks a steady state

  bool steady() const { return std::isinf(time); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["engine"] = to_string(engine);
    if (steady()) j["time"] = "steady";
    else j["time"] = time;
    j["energies"] = energy;
    j["ergotropies"] = ergotropy;
    j["passive"] = passive;
    return j;
  }
};

inline double stored_energy(const gaussian_state& s, int mode, double omega = 1.0) {
  return omega * s.occupation(mode);
}

// Passive occupation (ν − 1)/2 of the mode's reduced state; ν = 2√det σ.
inline double passive_occupation(const gaussian_state& s, int mode) {
  const double det = s.reduced_cov(mode).determinant();
  const double nu = 2.0 * std::sqrt(std::max(det, 0.0));
  return std::max(0.0, (nu - 1.0) / 2.0);
}

inline double ergotropy_gaussian(const gaussian_state& s, int mode, double omega = 1.0) {
  return omega * (s.occupation(mode) - passive_occupation(s, mode));
}

inline energy_report report(const gaussian_state& s, double omega = 1.0) {
  energy_report r;
  r.engine = engine_kind::gaussian;
  r.time = s.time;
  for (int m = 0; m < s.modes(); ++m) {
    r.energy.push_back(stored_energy(s, m, omega));
    r.passive.push_back(omega * passive_occupation(s, m));
    r.ergotropy.push_back(r.energy.back() - r.passive.back());
  }
  return r;
}

inline double steady_ergotropy(const network_spec& spec, const reservoir_spec& bath, int mode) {
  return ergotropy_gaussian(steady_state(assemble(spec, bath)), mode, spec.omega());
}

// ℰ^sq / ℰ at steady state; mode defaults to the terminal battery.
inline double enhancement_factor(const network_spec& spec, const reservoir_spec& squeezed, int mode = -1) {
  if (mode < 0) mode = spec.terminal();
  if (squeezed.kind() == bath_kind::thermal)
    throw error(errc::invalid_argument, "enhancement factor needs a squeezed (or vacuum) bath");
  const double ref = steady_ergotropy(spec, reservoir_spec::vacuum(), mode);
  if (ref <= std::numeric_limits<double>::min()) throw error(errc::zero_reference, "vacuum ergotropy is zero");
  return steady_ergotropy(spec, squeezed, mode) / ref;
}

}  // namespace qbn
