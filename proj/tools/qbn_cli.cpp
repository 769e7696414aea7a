// qbn: experiment runner for driven battery networks.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qbn/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qbn;
using namespace qbn::experiments;

namespace {

struct globals {
  std::string config;
  std::string out = ".";
  std::string engines;
  std::string verify;
  int workers = 1;
};

json load_config(const std::string& path) {
  if (path.empty()) throw error(errc::invalid_argument, "--config is required");
  std::ifstream f(path);
  if (!f) throw error(errc::invalid_argument, "cannot open config " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw error(errc::invalid_argument, std::string("config is not valid JSON: ") + e.what());
  }
}

reservoir_spec bath_of(const json& cfg) {
  return cfg.contains("bath") ? reservoir_spec::from_json(cfg["bath"]) : reservoir_spec::vacuum();
}

engine_kind parse_engine(const std::string& s) {
  if (s == "closed_form" || s == "closed-form") return engine_kind::closed_form;
  if (s == "gaussian") return engine_kind::gaussian;
  if (s == "spectral") return engine_kind::spectral;
  if (s == "fock" || s == "fock_oracle") return engine_kind::fock_oracle;
  throw error(errc::invalid_argument, "unknown engine '" + s + "'");
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<engine_kind> engines_of(const globals& g, const json& cfg, std::vector<engine_kind> fallback) {
  std::vector<std::string> names;
  if (!g.engines.empty()) names = split(g.engines);
  else if (cfg.contains("engines")) names = cfg["engines"].get<std::vector<std::string>>();
  if (names.empty()) return fallback;
  std::vector<engine_kind> out;
  for (const auto& n : names) out.push_back(parse_engine(n));
  return out;
}

void warn_conventions(const network_spec& s) {
  for (const auto& w : convention_warnings(s)) std::cerr << "warning: " << w << "\n";
}

void emit(const globals& g, const std::string& name, const std::string& content) {
  if (g.out == "-") {
    std::cout << content;
    return;
  }
  const auto p = fs::path(g.out) / name;
  write_file(p, content);
  std::cout << p.string() << "\n";
}

energy_report evaluate(engine_kind e, const network_spec& s, const reservoir_spec& bath) {
  switch (e) {
    case engine_kind::gaussian: return report(steady_state(assemble(s, bath)), s.omega());
    case engine_kind::fock_oracle: return fock_steady_auto(s, bath).report;
    case engine_kind::closed_form:
    case engine_kind::spectral: {
      energy_report r;
      r.engine = e;
      r.time = std::numeric_limits<double>::infinity();
      for (int m = 0; m < s.modes(); ++m) {
        double v;
        if (e == engine_kind::closed_form) {
          v = experiments::detail::closed_form_energy(s, bath, m, r.time);
        } else {
          if (bath.kind() != bath_kind::vacuum) throw error(errc::precondition, "spectral engine needs a vacuum bath");
          if (check_nonreciprocity(s) != reciprocity::reciprocal)
            throw error(errc::precondition, "spectral engine covers reciprocal networks only");
          const auto b = spectral::steady_amplitudes(s.coupling().J[0], s.kappa()[0], s.epsilon(), s.topo().kind,
                                                     s.topo().n_batteries);
          v = s.omega() * std::norm(b(m));
        }
        r.energy.push_back(v);
      }
      return r;
    }
  }
  throw error(errc::invalid_argument, "unknown engine");
}

// Compares Gaussian energies and ergotropies with the Fock oracle.
json verify_fock(const network_spec& s, const reservoir_spec& bath, const energy_report& gauss) {
  const auto f = fock_steady_auto(s, bath);
  double worst = 0.0;
  bool ok = true;
  for (int m = 0; m < s.modes(); ++m)
    for (auto [a, b] : {std::pair{gauss.energy[m], f.report.energy[m]}, std::pair{gauss.ergotropy[m], f.report.ergotropy[m]}}) {
      const double tol = std::max(1e-3 * std::max(std::abs(a), std::abs(b)), 1e-6);
      worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-300));
      ok = ok && std::abs(a - b) <= tol;
    }
  return {{"passed", ok}, {"max_rel_diff", worst}, {"dims", f.dims}, {"fock", f.report.to_json()}};
}

int cmd_steady(const globals& g, bool ergotropy_only) {
  const json cfg = load_config(g.config);
  const auto s = spec_from_json(cfg);
  const auto bath = bath_of(cfg);
  warn_conventions(s);
  json out;
  out["spec"] = spec_to_json(s);
  out["bath"] = bath.to_json();
  out["spec_hash"] = spec_hash({{"spec", out["spec"]}, {"bath", out["bath"]}});
  out["reciprocity"] = to_string(check_nonreciprocity(s));
  const auto engines = ergotropy_only ? std::vector{engine_kind::gaussian} : engines_of(g, cfg, {engine_kind::gaussian});
  std::optional<energy_report> gauss;
  for (auto e : engines) {
    auto r = evaluate(e, s, bath);
    if (e == engine_kind::gaussian) gauss = r;
    json j = r.to_json();
    if (ergotropy_only) {
      j.erase("energies");
    }
    out["reports"].push_back(j);
  }
  bool failed = false;
  if (g.verify == "fock") {
    if (!gauss) gauss = evaluate(engine_kind::gaussian, s, bath);
    out["verification"] = verify_fock(s, bath, *gauss);
    failed = !out["verification"]["passed"].get<bool>();
  }
  emit(g, ergotropy_only ? "ergotropy.json" : "steady_state.json", out.dump(2) + "\n");
  if (failed) {
    std::cerr << "error: Fock oracle disagrees with the Gaussian engine\n";
    return 3;
  }
  return 0;
}

int cmd_dynamics(const globals& g, double t_max, int points) {
  const json cfg = load_config(g.config);
  const auto s = spec_from_json(cfg);
  const auto bath = bath_of(cfg);
  warn_conventions(s);
  if (cfg.contains("dynamics")) {
    t_max = cfg["dynamics"].value("t_max", t_max);
    points = cfg["dynamics"].value("points", points);
  }
  if (!(t_max > 0.0) || points < 2) throw error(errc::invalid_argument, "need t_max > 0 and at least 2 points");
  const auto times = linspace(0.0, t_max, points);
  const auto states = evolve(assemble(s, bath), gaussian_state::ground(s.modes()), times);
  table t;
  t.columns.push_back("t");
  for (int m = 0; m < s.modes(); ++m) t.columns.push_back(m == 0 ? "E_charger" : "E_b" + std::to_string(m));
  for (int m = 0; m < s.modes(); ++m)
    t.columns.push_back(m == 0 ? "W_charger" : "W_b" + std::to_string(m));
  for (const auto& st : states) {
    std::vector<std::string> row{fmt(st.time)};
    for (int m = 0; m < s.modes(); ++m) row.push_back(fmt(stored_energy(st, m, s.omega())));
    for (int m = 0; m < s.modes(); ++m) row.push_back(fmt(ergotropy_gaussian(st, m, s.omega())));
    t.add(std::move(row));
  }
  std::ostringstream os;
  t.write_csv(os);
  emit(g, "dynamics.csv", os.str());
  return 0;
}

sweep_axis parse_axis(const std::string& a) {
  if (a == "J" || a == "coupling_j") return sweep_axis::coupling_j;
  if (a == "N" || a == "battery_n") return sweep_axis::battery_n;
  if (a == "t" || a == "time") return sweep_axis::time;
  if (a == "n_th" || a == "thermal_n") return sweep_axis::thermal_n;
  if (a == "r" || a == "squeeze_r") return sweep_axis::squeeze_r;
  throw error(errc::invalid_argument, "unknown sweep axis '" + a + "'");
}

observable parse_observable(const std::string& o) {
  if (o == "energy") return observable::energy;
  if (o == "ergotropy") return observable::ergotropy;
  if (o == "relax_time") return observable::relax_time;
  if (o == "parity_report") return observable::parity_report;
  throw error(errc::invalid_argument, "unknown observable '" + o + "'");
}

sweep_plan plan_from_json(const json& cfg) {
  if (!cfg.contains("sweep")) throw error(errc::invalid_argument, "config lacks a 'sweep' section");
  const json& sw = cfg["sweep"];
  sweep_plan p;
  const auto s = spec_from_json(cfg);  // validates the base
  warn_conventions(s);
  p.base.kind = s.topo().kind;
  p.base.n = s.topo().n_batteries;
  p.base.J = s.coupling().J[0];
  p.base.theta = s.coupling().theta[0];
  p.base.gamma = s.coupling().gamma[0];
  p.base.kappa_a = s.kappa()[0];
  p.base.kappa_b = s.modes() > 1 ? s.kappa()[1] : s.kappa()[0];
  p.base.epsilon = s.epsilon();
  p.base.omega = s.omega();
  if (cfg.contains("p_coeffs")) p.base.p = s.coupling().p;
  p.bath = bath_of(cfg);
  p.axis = parse_axis(sw.value("axis", "J"));
  const json& grid = sw.at("grid");
  if (grid.is_array()) {
    p.grid = grid.get<std::vector<double>>();
  } else {
    const double a = grid.at("start"), b = grid.at("stop");
    const int n = grid.at("num");
    p.grid = grid.value("log", false) ? logspace(a, b, n) : linspace(a, b, n);
  }
  for (const auto& o : sw.value("observables", std::vector<std::string>{})) p.observables.push_back(parse_observable(o));
  for (const auto& e : sw.value("engines", std::vector<std::string>{"gaussian"})) p.engines.push_back(parse_engine(e));
  p.modes = sw.value("modes", std::vector<int>{});
  p.tie_gamma = sw.value("tie_gamma", true);
  p.j_optimal = sw.value("j_optimal", false);
  if (sw.contains("time")) p.time = sw["time"];
  return p;
}

int cmd_sweep(const globals& g) {
  const json cfg = load_config(g.config);
  auto plan = plan_from_json(cfg);
  if (!g.engines.empty()) {
    plan.engines.clear();
    for (const auto& n : split(g.engines)) plan.engines.push_back(parse_engine(n));
  }
  if (g.verify == "fock" &&
      std::find(plan.engines.begin(), plan.engines.end(), engine_kind::fock_oracle) == plan.engines.end())
    plan.engines.push_back(engine_kind::fock_oracle);
  plan.workers = g.workers;
  const auto res = run(plan);
  std::ostringstream os;
  res.to_table(plan.axis).write_csv(os);
  emit(g, "sweep.csv", os.str());
  json meta;
  meta["plan"] = plan_to_json(plan);
  meta["spec_hash"] = spec_hash(meta["plan"]);
  meta["engine_versions"] = engine_versions();
  meta["disagreements"] = res.disagreements;
  emit(g, "sweep.meta.json", meta.dump(2) + "\n");
  for (const auto& d : res.disagreements) std::cerr << "warning: engines disagree: " << d << "\n";
  return 0;
}

int cmd_parity(const globals& g, int n_max, double kappa, double J) {
  json cfg = g.config.empty() ? json::object() : load_config(g.config);
  kappa = cfg.value("kappa_b", kappa);
  if (n_max < 1) throw error(errc::invalid_argument, "--n-max must be >= 1");
  json out = json::array();
  for (int n = 1; n <= n_max; ++n) {
    const double Jn = J > 0.0 ? J : closed_form::optimal_coupling(topology_kind::cascaded, n, kappa);
    auto rep = spectral::parity(n, Jn, kappa, cfg.value("epsilon", 1.0)).to_json();
    rep["J"] = Jn;
    rep["kappa"] = kappa;
    out.push_back(rep);
  }
  emit(g, "parity_scan.json", out.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qbn: driven quantum battery network experiments"};
  app.require_subcommand(1);
  globals g;
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_option("--out", g.out, "output directory ('-' for stdout)");
  app.add_option("--engines", g.engines, "comma-separated engines: closed_form,gaussian,spectral,fock");
  app.add_option("--verify", g.verify, "cross-check against an oracle engine")->check(CLI::IsMember({"fock"}));
  app.add_option("--workers", g.workers, "worker threads for sweeps and presets")->check(CLI::PositiveNumber);

  auto* steady = app.add_subcommand("steady-state", "per-mode steady energies and ergotropies");
  auto* ergo = app.add_subcommand("ergotropy", "per-mode steady ergotropy report");
  double t_max = 5000.0;
  int points = 501;
  auto* dyn = app.add_subcommand("dynamics", "per-mode energies and ergotropies over time");
  dyn->add_option("--t-max", t_max, "final time in 1/omega");
  dyn->add_option("--points", points, "number of output times");
  auto* sweep = app.add_subcommand("sweep", "parameter sweep from the config's 'sweep' section");
  int n_max = 8;
  double kappa = 0.003, J = 0.0;
  auto* par = app.add_subcommand("parity-scan", "chain parity reports for N = 1..n-max");
  par->add_option("--n-max", n_max, "largest battery count");
  par->add_option("--kappa", kappa, "damping rate");
  par->add_option("--J", J, "hopping (default: J_op of each N)");
  std::string fig;
  auto* rep = app.add_subcommand("reproduce", "write <figN>.csv and <figN>.meta.json");
  rep->add_option("figure", fig, "fig1 .. fig6")->required();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*steady) return cmd_steady(g, false);
    if (*ergo) return cmd_steady(g, true);
    if (*dyn) return cmd_dynamics(g, t_max, points);
    if (*sweep) return cmd_sweep(g);
    if (*par) return cmd_parity(g, n_max, kappa, J);
    if (*rep) {
      for (const auto& p : reproduce(fig, g.out, g.workers)) std::cout << p.string() << "\n";
      return 0;
    }
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation(e.code()) ? 2 : 3;
  } catch (const json::exception& e) {
    std::cerr << "error: InvalidArgument: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
