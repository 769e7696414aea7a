#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <openssl/evp.h>

#include "closed_form.hpp"
#include "fock_oracle.hpp"
#include "spectral.hpp"

namespace qbn::experiments {

inline constexpr const char* version = "1.0.0";

// ---- utilities -------------------------------------------------------------

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

// nlohmann::json keeps object keys sorted, so dump() is canonical.
inline std::string spec_hash(const nlohmann::json& j) { return sha256_hex(j.dump()); }

// Runs fn(i) for i in [0, n) on up to `workers` threads; results land by index.
template <typename T>
std::vector<T> parallel_map(std::size_t n, int workers, const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(n);
  const int w = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i);
    });
  for (auto& th : pool) th.join();
  return out;
}

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

struct table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }

  void write_csv(std::ostream& os) const {
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
  }
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw error(errc::invalid_argument, "cannot write " + p.string());
  f << content;
}

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

inline std::vector<double> logspace(double a, double b, int n) {
  auto v = linspace(std::log10(a), std::log10(b), n);
  for (auto& x : v) x = std::pow(10.0, x);
  return v;
}

// ---- Fock oracle with automatic truncation ---------------------------------

struct fock_result {
  energy_report report;
  std::vector<int> dims;
};

inline std::vector<int> guess_dims(const gaussian_state& g) {
  std::vector<int> dims;
  for (int m = 0; m < g.modes(); ++m) dims.push_back(fock::truncation_for(g.reduced_cov(m), g.amplitude(m)));
  return dims;
}

inline fock_result fock_steady_auto(const network_spec& spec, const reservoir_spec& bath, long cap = 4096) {
  auto dims = guess_dims(steady_state(assemble(spec, bath)));
  while (true) {
    fock::fock_config cfg;
    cfg.dims = dims;
    cfg.max_dim = cap;
    try {
      fock::lindblad_model model(spec, bath, cfg);
      const cmat rho = fock::steady_state(model);
      return {fock::report(rho, model, std::numeric_limits<double>::infinity()), dims};
    } catch (const error& e) {
      if (e.code() != errc::truncation_unsound) throw;
      for (auto& d : dims) d = static_cast<int>(std::ceil(d * 1.15)) + 1;
    }
  }
}

// ---- sweeps ----------------------------------------------------------------

enum class sweep_axis { coupling_j, battery_n, time, thermal_n, squeeze_r };
enum class observable { energy, ergotropy, relax_time, parity_report };

inline std::string to_string(sweep_axis a) {
  switch (a) {
    case sweep_axis::coupling_j: return "J";
    case sweep_axis::battery_n: return "N";
    case sweep_axis::time: return "t";
    case sweep_axis::thermal_n: return "n_th";
    case sweep_axis::squeeze_r: return "r";
  }
  return "?";
}

inline std::string to_string(observable o) {
  switch (o) {
    case observable::energy: return "energy";
    case observable::ergotropy: return "ergotropy";
    case observable::relax_time: return "relax_time";
    case observable::parity_report: return "parity_report";
  }
  return "?";
}

struct sweep_plan {
  uniform_params base;
  bool tie_gamma = true;   // keep Γ = 2J when J changes (nonreciprocal family)
  bool j_optimal = false;  // J = J_op(N) at every point
  reservoir_spec bath;
  sweep_axis axis = sweep_axis::coupling_j;
  std::vector<double> grid;
  std::vector<observable> observables;
  std::vector<engine_kind> engines;
  std::vector<int> modes;  // empty -> terminal battery
  double time = std::numeric_limits<double>::infinity();  // evaluation time off the time axis
  int workers = 1;
};

struct sweep_row {
  double x = 0.0;
  observable obs = observable::energy;
  engine_kind engine = engine_kind::gaussian;
  int mode = 0;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

struct sweep_result {
  std::vector<sweep_row> rows;
  std::vector<std::string> disagreements;

  table to_table(sweep_axis axis) const {
    table t;
    t.columns = {to_string(axis), "observable", "engine", "mode", "value", "error"};
    for (const auto& r : rows)
      t.add({fmt(r.x), to_string(r.obs), to_string(r.engine), std::to_string(r.mode),
             r.error.empty() ? fmt(r.value) : "", r.error});
    return t;
  }
};

inline bool is_reciprocal_base(const uniform_params& u) { return u.gamma == 0.0; }

inline void validate(const sweep_plan& p) {
  if (p.grid.empty()) throw error(errc::invalid_argument, "sweep grid is empty");
  bool inc = true, dec = true;
  for (std::size_t i = 1; i < p.grid.size(); ++i) {
    inc = inc && p.grid[i] > p.grid[i - 1];
    dec = dec && p.grid[i] < p.grid[i - 1];
  }
  if (!inc && !dec) throw error(errc::invalid_argument, "sweep grid must be strictly monotone");
  if (p.observables.empty()) throw error(errc::invalid_argument, "no observables requested");
  if (p.engines.empty()) throw error(errc::invalid_argument, "no engines requested");
  if (p.axis == sweep_axis::battery_n)
    for (double x : p.grid)
      if (x < 1 || x != std::floor(x)) throw error(errc::invalid_argument, "battery counts must be positive integers");
  const bool recip = is_reciprocal_base(p.base);
  for (auto e : p.engines) {
    if (e == engine_kind::closed_form && recip && p.base.kind == topology_kind::cascaded)
      throw error(errc::invalid_argument, "closed forms do not cover reciprocal cascaded networks");
    if (e == engine_kind::closed_form && recip && p.axis == sweep_axis::time)
      throw error(errc::invalid_argument, "closed forms do not cover reciprocal transients");
    if (e == engine_kind::spectral && !recip)
      throw error(errc::invalid_argument, "spectral engine covers reciprocal networks only");
  }
}

inline network_spec spec_at(const sweep_plan& p, double x) {
  uniform_params u = p.base;
  if (p.axis == sweep_axis::battery_n) u.n = static_cast<int>(x);
  if (!u.p.empty() && static_cast<int>(u.p.size()) != u.n + 1) {
    // re-derive the second-pattern phases for the new size
    u.p = (u.theta == 0.0 && u.gamma > 0.0) ? pattern2_phases({u.kind, u.n}) : std::vector<cplx>{};
  }
  const bool nonrecip = u.gamma > 0.0;
  if (p.j_optimal) u.J = closed_form::optimal_coupling(u.kind, u.n, u.kappa_b);
  if (p.axis == sweep_axis::coupling_j) u.J = x;
  if (nonrecip && p.tie_gamma) u.gamma = 2.0 * u.J;
  return make_uniform(u);
}

inline reservoir_spec bath_at(const sweep_plan& p, double x) {
  if (p.axis == sweep_axis::thermal_n) return reservoir_spec::thermal(x);
  if (p.axis == sweep_axis::squeeze_r) return reservoir_spec::squeezed(x, p.bath.theta_r());
  return p.bath;
}

namespace detail {

inline double closed_form_energy(const network_spec& s, const reservoir_spec& bath, int mode, double t) {
  if (bath.kind() != bath_kind::vacuum) throw error(errc::precondition, "closed forms assume a vacuum bath");
  const bool steady = std::isinf(t);
  const auto cls = check_nonreciprocity(s);
  if (cls == reciprocity::nonreciprocal) {
    if (s.topo().kind == topology_kind::cascaded)
      return steady ? closed_form::energy_cascaded_ss(s, mode) : closed_form::energy_cascaded_t(s, mode, t);
    return steady ? closed_form::energy_parallel_ss(s, mode) : closed_form::energy_parallel_t(s, mode, t);
  }
  if (cls == reciprocity::reciprocal && s.topo().kind == topology_kind::parallel && steady && mode > 0)
    return closed_form::reciprocal_parallel_ss(s.topo().n_batteries, s.coupling().J[0], s.kappa()[0],
                                               s.epsilon(), s.omega());
  throw error(errc::precondition, "no closed form for this network class");
}

inline gaussian_state gaussian_at(const network_spec& s, const reservoir_spec& bath, double t) {
  const auto q = assemble(s, bath);
  if (std::isinf(t)) return steady_state(q);
  return evolve(q, gaussian_state::ground(s.modes()), {t}).back();
}

}  // namespace detail

inline std::vector<sweep_row> evaluate_point(const sweep_plan& p, double x) {
  std::vector<sweep_row> rows;
  std::optional<network_spec> spec;
  std::string spec_error;
  try {
    spec = spec_at(p, x);
  } catch (const error& e) {
    spec_error = e.what();
  }
  const reservoir_spec bath = bath_at(p, x);
  const double t = p.axis == sweep_axis::time ? x : p.time;
  std::vector<int> modes = p.modes;
  if (modes.empty()) modes.push_back(spec ? spec->terminal() : 0);

  for (auto obs : p.observables)
    for (auto eng : p.engines) {
      std::vector<sweep_row> batch;
      for (int m : modes) batch.push_back({x, obs, eng, m, std::numeric_limits<double>::quiet_NaN(), {}});
      try {
        if (!spec) throw error(errc::invalid_argument, spec_error);
        const network_spec& s = *spec;
        for (auto& r : batch)
          if (r.mode < 0 || r.mode >= s.modes()) throw error(errc::invalid_argument, "mode out of range");
        switch (obs) {
          case observable::energy:
          case observable::ergotropy: {
            if (eng == engine_kind::closed_form) {
              if (obs == observable::ergotropy) throw error(errc::precondition, "closed forms give energies only");
              for (auto& r : batch) r.value = detail::closed_form_energy(s, bath, r.mode, t);
            } else if (eng == engine_kind::gaussian) {
              const auto g = detail::gaussian_at(s, bath, t);
              for (auto& r : batch)
                r.value = obs == observable::energy ? stored_energy(g, r.mode, s.omega())
                                                    : ergotropy_gaussian(g, r.mode, s.omega());
            } else if (eng == engine_kind::spectral) {
              if (obs == observable::ergotropy || !std::isinf(t) || bath.kind() != bath_kind::vacuum)
                throw error(errc::precondition, "spectral engine gives vacuum steady energies only");
              const auto b = spectral::steady_amplitudes(s.coupling().J[0], s.kappa()[0], s.epsilon(),
                                                         s.topo().kind, s.topo().n_batteries);
              for (auto& r : batch) r.value = s.omega() * std::norm(b(r.mode));
            } else {
              energy_report rep;
              if (std::isinf(t)) {
                rep = fock_steady_auto(s, bath).report;
              } else {
                const auto dims = guess_dims(detail::gaussian_at(s, bath, t));
                fock::fock_config cfg;
                cfg.dims = dims;
                fock::lindblad_model model(s, bath, cfg);
                auto st = fock::evolve(model, {model.ground(), 0.0}, {t}).back();
                rep = fock::report(st.rho, model, t);
              }
              for (auto& r : batch)
                r.value = obs == observable::energy ? rep.energy[r.mode] : rep.ergotropy[r.mode];
            }
            break;
          }
          case observable::relax_time: {
            if (eng != engine_kind::gaussian) throw error(errc::precondition, "relaxation times use the Gaussian engine");
            const auto q = assemble(s, bath);
            for (auto& r : batch) r.value = relaxation_time(q, 0.95, r.mode);
            break;
          }
          case observable::parity_report: {
            if (eng != engine_kind::spectral) throw error(errc::precondition, "parity reports use the spectral engine");
            if (s.topo().kind != topology_kind::cascaded) throw error(errc::precondition, "parity reports need a chain");
            const auto rep = spectral::parity(s.topo().n_batteries, s.coupling().J[0], s.kappa()[0], s.epsilon());
            for (auto& r : batch) r.value = std::abs(rep.terminal_amplitude);
            break;
          }
        }
      } catch (const error& e) {
        for (auto& r : batch) r.error = e.what();
      }
      rows.insert(rows.end(), batch.begin(), batch.end());
    }
  return rows;
}

inline double agreement_tolerance(engine_kind a, engine_kind b, double x, double y) {
  if (a == engine_kind::fock_oracle || b == engine_kind::fock_oracle)
    return std::max(1e-3 * std::max(std::abs(x), std::abs(y)), 1e-6);
  return 1e-6 * std::max({std::abs(x), std::abs(y), 1e-300});
}

inline sweep_result run(const sweep_plan& plan) {
  validate(plan);
  auto per_point = parallel_map<std::vector<sweep_row>>(
      plan.grid.size(), plan.workers, [&](std::size_t i) { return evaluate_point(plan, plan.grid[i]); });
  sweep_result res;
  for (auto& v : per_point) res.rows.insert(res.rows.end(), v.begin(), v.end());

  // cross-engine agreement for every point with two or more successful engines
  std::map<std::tuple<double, int, int>, std::vector<const sweep_row*>> groups;
  for (const auto& r : res.rows)
    if (r.error.empty()) groups[{r.x, static_cast<int>(r.obs), r.mode}].push_back(&r);
  for (const auto& [key, rs] : groups)
    for (std::size_t i = 1; i < rs.size(); ++i) {
      const double tol = agreement_tolerance(rs[0]->engine, rs[i]->engine, rs[0]->value, rs[i]->value);
      if (std::abs(rs[0]->value - rs[i]->value) > tol)
        res.disagreements.push_back(to_string(rs[0]->obs) + " at " + fmt(rs[0]->x) + " mode " +
                                    std::to_string(rs[0]->mode) + ": " + to_string(rs[0]->engine) + "=" +
                                    fmt(rs[0]->value) + " vs " + to_string(rs[i]->engine) + "=" + fmt(rs[i]->value));
    }
  return res;
}

inline nlohmann::json plan_to_json(const sweep_plan& p) {
  nlohmann::json j;
  j["topology"] = to_string(p.base.kind);
  j["n"] = p.base.n;
  j["J"] = p.base.J;
  j["theta"] = p.base.theta;
  j["gamma"] = p.base.gamma;
  j["kappa_a"] = p.base.kappa_a;
  j["kappa_b"] = p.base.kappa_b;
  j["epsilon"] = p.base.epsilon;
  j["omega"] = p.base.omega;
  j["tie_gamma"] = p.tie_gamma;
  j["j_optimal"] = p.j_optimal;
  j["bath"] = p.bath.to_json();
  j["axis"] = to_string(p.axis);
  j["grid"] = p.grid;
  for (auto o : p.observables) j["observables"].push_back(to_string(o));
  for (auto e : p.engines) j["engines"].push_back(to_string(e));
  j["modes"] = p.modes;
  if (!std::isinf(p.time)) j["time"] = p.time;
  return j;
}

// ---- figure presets ---------------------------------------------------------

struct figure_output {
  table data;
  nlohmann::json meta;
};

namespace presets {

inline constexpr double kappa = 0.003;
inline constexpr double eps_strong = 0.01;
inline constexpr double eps_weak = 0.001;

inline const char* coupling_label(bool nonrecip) { return nonrecip ? "nonreciprocal" : "reciprocal"; }

inline network_spec network(topology_kind kind, bool nonrecip, int n, double J, double eps) {
  return nonrecip ? make_nonreciprocal(kind, n, J, kappa, eps) : make_reciprocal(kind, n, J, kappa, eps);
}

inline std::vector<double> energies_over(const network_spec& s, const reservoir_spec& bath,
                                         const std::vector<double>& times, int mode,
                                         std::vector<double>* ergotropy = nullptr) {
  auto states = evolve(assemble(s, bath), gaussian_state::ground(s.modes()), times);
  std::vector<double> e;
  for (const auto& st : states) {
    e.push_back(stored_energy(st, mode, s.omega()));
    if (ergotropy) ergotropy->push_back(ergotropy_gaussian(st, mode, s.omega()));
  }
  return e;
}

inline figure_output fig1(int workers) {
  figure_output out;
  out.data.columns = {"topology", "N", "J_op", "E_terminal_closed_form", "E_terminal_gaussian"};
  struct item {
    topology_kind kind;
    int n;
  };
  std::vector<item> items;
  for (auto kind : {topology_kind::cascaded, topology_kind::parallel})
    for (int n = 1; n <= 8; ++n) items.push_back({kind, n});
  auto rows = parallel_map<std::vector<std::string>>(items.size(), workers, [&](std::size_t i) {
    const auto [kind, n] = items[i];
    const double J = closed_form::optimal_coupling(kind, n, kappa);
    const auto s = network(kind, true, n, J, eps_strong);
    const double cf = kind == topology_kind::cascaded
                          ? closed_form::terminal_scaling_cascaded(n, 2 * J, kappa, eps_strong, 1.0)
                          : closed_form::terminal_scaling_parallel(n, 2 * J, kappa, eps_strong, 1.0);
    const double g = stored_energy(steady_state(assemble(s, reservoir_spec::vacuum())), s.terminal());
    return std::vector<std::string>{to_string(kind), std::to_string(n), fmt(J), fmt(cf), fmt(g)};
  });
  out.data.rows = rows;
  out.meta["parameters"] = {{"kappa", kappa}, {"epsilon", eps_strong}, {"omega", 1.0}, {"N", {1, 8}},
                            {"coupling", "nonreciprocal, J = J_op(N), Gamma = 2J"}, {"bath", "vacuum"}};
  return out;
}

inline figure_output fig2(int workers) {
  figure_output out;
  out.data.columns = {"topology", "regime", "J", "t", "E_charger", "E_b1", "E_b2"};
  const auto times = linspace(0.0, 5000.0, 501);
  struct item {
    topology_kind kind;
    std::string label;
    double J;
  };
  std::vector<item> items;
  for (auto kind : {topology_kind::cascaded, topology_kind::parallel}) {
    items.push_back({kind, "weak", 0.001});
    items.push_back({kind, "optimal", closed_form::optimal_coupling(kind, 2, kappa)});
    items.push_back({kind, "strong", 0.01});
  }
  auto blocks = parallel_map<std::vector<std::vector<std::string>>>(items.size(), workers, [&](std::size_t i) {
    const auto& it = items[i];
    const auto s = network(it.kind, true, 2, it.J, eps_strong);
    std::vector<std::vector<double>> E;
    for (int m = 0; m < 3; ++m) E.push_back(energies_over(s, reservoir_spec::vacuum(), times, m));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < times.size(); ++k)
      rows.push_back({to_string(it.kind), it.label, fmt(it.J), fmt(times[k]), fmt(E[0][k]), fmt(E[1][k]), fmt(E[2][k])});
    return rows;
  });
  for (auto& b : blocks) out.data.rows.insert(out.data.rows.end(), b.begin(), b.end());
  out.meta["parameters"] = {{"kappa", kappa}, {"epsilon", eps_strong}, {"N", 2},
                            {"J", {0.001, "J_op", 0.01}}, {"coupling", "nonreciprocal"}, {"t_max", 5000}};
  return out;
}

inline figure_output fig3(int workers) {
  figure_output out;
  out.data.columns = {"panel", "topology", "coupling", "N", "J", "E_terminal"};
  struct item {
    std::string panel;
    topology_kind kind;
    bool nonrecip;
    int n;
    double J;
  };
  std::vector<item> items;
  for (auto kind : {topology_kind::cascaded, topology_kind::parallel})
    for (bool nr : {false, true})
      for (int n = 1; n <= 8; ++n)
        items.push_back({"steady_vs_N", kind, nr, n, closed_form::optimal_coupling(kind, n, kappa)});
  for (int n : {3, 4})
    for (bool nr : {false, true})
      for (double J : logspace(1e-4, 1e-1, 121)) items.push_back({"J_sweep", topology_kind::cascaded, nr, n, J});
  auto rows = parallel_map<std::vector<std::string>>(items.size(), workers, [&](std::size_t i) {
    const auto& it = items[i];
    const auto s = network(it.kind, it.nonrecip, it.n, it.J, eps_strong);
    const double e = stored_energy(steady_state(assemble(s, reservoir_spec::vacuum())), s.terminal());
    return std::vector<std::string>{it.panel, to_string(it.kind), coupling_label(it.nonrecip), std::to_string(it.n),
                                    fmt(it.J), fmt(e)};
  });
  out.data.rows = rows;
  out.meta["parameters"] = {{"kappa", kappa}, {"epsilon", eps_strong},
                            {"J_sweep", {{"min", 1e-4}, {"max", 1e-1}, {"points", 121}, {"spacing", "log"}}},
                            {"steady_vs_N", "J = J_op(N) of the topology"}};
  return out;
}

inline figure_output fig4(int workers) {
  figure_output out;
  out.data.columns = {"topology", "coupling", "N", "t", "E_terminal"};
  const auto times = linspace(0.0, 10000.0, 501);
  struct item {
    topology_kind kind;
    bool nonrecip;
    int n;
  };
  std::vector<item> items;
  for (int n : {3, 4})
    for (auto kind : {topology_kind::cascaded, topology_kind::parallel})
      for (bool nr : {false, true}) items.push_back({kind, nr, n});
  nlohmann::json relax = nlohmann::json::array();
  std::vector<double> taus(items.size());
  auto blocks = parallel_map<std::vector<std::vector<std::string>>>(items.size(), workers, [&](std::size_t i) {
    const auto& it = items[i];
    const double J = closed_form::optimal_coupling(it.kind, it.n, kappa);
    const auto s = network(it.kind, it.nonrecip, it.n, J, eps_strong);
    const auto E = energies_over(s, reservoir_spec::vacuum(), times, s.terminal());
    taus[i] = relaxation_time(assemble(s, reservoir_spec::vacuum()));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < times.size(); ++k)
      rows.push_back({to_string(it.kind), coupling_label(it.nonrecip), std::to_string(it.n), fmt(times[k]), fmt(E[k])});
    return rows;
  });
  for (auto& b : blocks) out.data.rows.insert(out.data.rows.end(), b.begin(), b.end());
  for (std::size_t i = 0; i < items.size(); ++i)
    relax.push_back({{"topology", to_string(items[i].kind)}, {"coupling", coupling_label(items[i].nonrecip)},
                     {"N", items[i].n}, {"relaxation_time_95", taus[i]}});
  out.meta["parameters"] = {{"kappa", kappa}, {"epsilon", eps_strong}, {"J", "J_op(N) of the topology"}};
  out.meta["relaxation_times"] = relax;
  return out;
}

inline figure_output fig5(int workers) {
  figure_output out;
  out.data.columns = {"topology", "n_th", "t", "mode", "energy", "ergotropy"};
  const auto times = linspace(0.0, 5000.0, 251);
  struct item {
    topology_kind kind;
    double n_th;
  };
  std::vector<item> items;
  for (auto kind : {topology_kind::cascaded, topology_kind::parallel})
    for (double n : {0.0, 1.0, 2.0}) items.push_back({kind, n});
  nlohmann::json steady = nlohmann::json::array();
  std::vector<nlohmann::json> steady_items(items.size());
  auto blocks = parallel_map<std::vector<std::vector<std::string>>>(items.size(), workers, [&](std::size_t i) {
    const auto& it = items[i];
    const auto s = network(it.kind, true, 2, closed_form::optimal_coupling(it.kind, 2, kappa), eps_weak);
    const auto bath = reservoir_spec::thermal(it.n_th);
    std::vector<std::vector<std::string>> rows;
    for (int m = 1; m <= 2; ++m) {
      std::vector<double> erg;
      const auto E = energies_over(s, bath, times, m, &erg);
      for (std::size_t k = 0; k < times.size(); ++k)
        rows.push_back({to_string(it.kind), fmt(it.n_th), fmt(times[k]), std::to_string(m), fmt(E[k]), fmt(erg[k])});
    }
    const auto rep = report(steady_state(assemble(s, bath)));
    steady_items[i] = {{"topology", to_string(it.kind)}, {"n_th", it.n_th}, {"steady", rep.to_json()}};
    return rows;
  });
  for (auto& b : blocks) out.data.rows.insert(out.data.rows.end(), b.begin(), b.end());
  for (auto& j : steady_items) steady.push_back(j);
  out.meta["parameters"] = {{"kappa", kappa}, {"epsilon", eps_weak}, {"N", 2}, {"J", "J_op(2)"},
                            {"coupling", "nonreciprocal"}, {"n_th", {0, 1, 2}}};
  out.meta["steady_states"] = steady;
  return out;
}

inline figure_output fig6(int workers) {
  figure_output out;
  out.data.columns = {"panel", "topology", "r", "t", "mode", "ergotropy", "enhancement"};
  const auto times = linspace(0.0, 5000.0, 251);
  const auto r_grid = linspace(0.0, 1.5, 16);
  struct item {
    topology_kind kind;
    double r;
    bool trajectory;
  };
  std::vector<item> items;
  for (auto kind : {topology_kind::cascaded, topology_kind::parallel}) {
    for (double r : {0.0, 0.5, 1.0}) items.push_back({kind, r, true});
    for (double r : r_grid) items.push_back({kind, r, false});
  }
  auto blocks = parallel_map<std::vector<std::vector<std::string>>>(items.size(), workers, [&](std::size_t i) {
    const auto& it = items[i];
    const auto s = network(it.kind, true, 2, closed_form::optimal_coupling(it.kind, 2, kappa), eps_weak);
    const auto bath = reservoir_spec::squeezed(it.r);
    std::vector<std::vector<std::string>> rows;
    if (it.trajectory) {
      for (int m = 1; m <= 2; ++m) {
        std::vector<double> erg;
        energies_over(s, bath, times, m, &erg);
        for (std::size_t k = 0; k < times.size(); ++k)
          rows.push_back({"trajectory", to_string(it.kind), fmt(it.r), fmt(times[k]), std::to_string(m), fmt(erg[k]), ""});
      }
    } else {
      for (int m = 1; m <= 2; ++m) {
        const double erg = steady_ergotropy(s, bath, m);
        rows.push_back({"enhancement", to_string(it.kind), fmt(it.r), "steady", std::to_string(m), fmt(erg),
                        fmt(enhancement_factor(s, bath, m))});
      }
    }
    return rows;
  });
  for (auto& b : blocks) out.data.rows.insert(out.data.rows.end(), b.begin(), b.end());
  out.meta["parameters"] = {{"kappa", kappa}, {"epsilon", eps_weak}, {"N", 2}, {"J", "J_op(2)"},
                            {"coupling", "nonreciprocal"}, {"theta_r", 0.0}, {"r_grid", r_grid}};
  return out;
}

}  // namespace presets

inline const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"fig1", "fig2", "fig3", "fig4", "fig5", "fig6"};
  return ids;
}

inline std::string engine_versions() {
  return std::string("qbn ") + version + ", Eigen " + std::to_string(EIGEN_WORLD_VERSION) + "." +
         std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION);
}

// Writes <id>.csv and <id>.meta.json into out_dir; returns both paths.
inline std::vector<std::filesystem::path> reproduce(const std::string& id, const std::filesystem::path& out_dir,
                                                    int workers = 1) {
  figure_output fo;
  if (id == "fig1") fo = presets::fig1(workers);
  else if (id == "fig2") fo = presets::fig2(workers);
  else if (id == "fig3") fo = presets::fig3(workers);
  else if (id == "fig4") fo = presets::fig4(workers);
  else if (id == "fig5") fo = presets::fig5(workers);
  else if (id == "fig6") fo = presets::fig6(workers);
  else throw error(errc::invalid_argument, "unknown figure id '" + id + "'");

  std::ostringstream csv;
  fo.data.write_csv(csv);
  fo.meta["figure"] = id;
  fo.meta["columns"] = fo.data.columns;
  fo.meta["engine_versions"] = engine_versions();
  fo.meta["spec_hash"] = spec_hash(fo.meta["parameters"]);
  fo.meta["units"] = "energies in quanta of omega, times in 1/omega, rates in omega";
  const auto csv_path = out_dir / (id + ".csv");
  const auto meta_path = out_dir / (id + ".meta.json");
  write_file(csv_path, csv.str());
  write_file(meta_path, fo.meta.dump(2) + "\n");
  return {csv_path, meta_path};
}

}  // namespace qbn::experiments
