#include "app.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "crowd/analysis.hpp"
#include "crowd/errors.hpp"
#include "crowd/linearized.hpp"
#include "crowd/parallel.hpp"
#include "crowd/solver.hpp"
#include "experiments.hpp"
#include "snapshot.hpp"

namespace crowdsim {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string preset;
  std::string config;
  std::optional<double> mesh;
  std::optional<double> tmax;
  std::optional<double> cfl;
  std::optional<std::string> out;
  std::optional<int> threads;
  bool strict = false;
  bool normalize_kernel = false;
  double perturb = 0.1;
  bool constant_speed = false;
  std::vector<double> hs{0.2, 0.1, 0.05, 0.025};
};

void add_common(CLI::App* cmd, Options& o) {
  auto* p = cmd->add_option("--preset", o.preset, "crossing or evacuation");
  auto* c = cmd->add_option("--config", o.config, "sectioned key = value file");
  p->excludes(c);
  cmd->add_option("--mesh", o.mesh, "cell size (dx = dy)");
  cmd->add_option("--tmax", o.tmax, "final time");
  cmd->add_option("--cfl", o.cfl, "CFL number in (0, 1]");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads (0: runtime default)");
  cmd->add_flag("--strict", o.strict, "abort on invariant or bound violations");
  cmd->add_flag("--normalize-kernel", o.normalize_kernel, "rescale the kernel to unit mass");
}

RunConfig load(const Options& o) {
  RunConfig cfg = o.config.empty() ? preset(o.preset.empty() ? "crossing" : o.preset)
                                   : parse_config(o.config);
  if (o.mesh) set_mesh(cfg, *o.mesh);
  if (o.tmax) cfg.t_max = *o.tmax;
  if (o.cfl) cfg.cfl = *o.cfl;
  if (o.out) cfg.out_dir = *o.out;
  if (o.threads) cfg.threads = *o.threads;
  if (o.strict) cfg.strict = true;
  if (o.normalize_kernel) cfg.normalize_kernel = true;
  if (cfg.snapshot_times.empty()) cfg.snapshot_times = {0.0, cfg.t_max};
  for (double t : cfg.snapshot_times)
    if (t < 0.0 || t > cfg.t_max)
      throw crowd::ConfigError("snapshot time " + std::to_string(t) + " outside [0, t_max]");
  if (cfg.threads > 0) crowd::parallel::set_threads(cfg.threads);
  return cfg;
}

std::ofstream open_csv(const fs::path& path) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

const crowd::BoundRow* find_row(const std::vector<crowd::BoundRow>& rows, const std::string& q) {
  for (const auto& r : rows)
    if (r.quantity == q) return &r;
  return nullptr;
}

void write_bound_rows(std::ostream& f, const std::vector<crowd::BoundRow>& rows) {
  f << "t,quantity,measured,bound,log10_bound,log10_slack,dominated\n";
  for (const auto& r : rows)
    f << format_number(r.t) << ',' << r.quantity << ',' << format_number(r.measured) << ','
      << format_number(r.bound) << ',' << format_number(r.bound_log10) << ','
      << format_number(r.slack_log10) << ',' << (r.dominated ? 1 : 0) << '\n';
}

// Simulation with snapshots and diagnostics; returns the bound rows at snapshot times.
std::vector<crowd::BoundRow> simulate(const RunConfig& cfg, std::ostream& out) {
  const BuiltModel built = build_model(cfg);
  const crowd::ModelSpec& model = built.model;
  const std::size_t n = model.n();
  const fs::path dir = cfg.out_dir;
  const std::vector<double> c_i = model.family == crowd::ModelFamily::Deviation
                                      ? estimate_constants(model, built.datum)
                                      : std::vector<double>(n, 0.0);
  crowd::BoundMonitor monitor(model, built.datum, c_i);

  std::ofstream diag = open_csv(dir / "diagnostics.csv");
  diag << "t,dt";
  for (const char* col : {"mass", "linf", "tv", "tv_bound", "escaped"})
    for (std::size_t p = 0; p < n; ++p) diag << ',' << col << '_' << p + 1;
  diag << '\n';

  std::vector<double> escaped(n, 0.0);
  auto row = [&](double t, double dt, const crowd::PopulationField& s) {
    const auto nr = crowd::norms(s);
    const auto bounds = monitor.evaluate(t, s);
    diag << format_number(t) << ',' << format_number(dt);
    for (std::size_t p = 0; p < n; ++p) diag << ',' << format_number(crowd::mass(s[p], s.grid()));
    for (std::size_t p = 0; p < n; ++p) diag << ',' << format_number(nr.linf[p]);
    for (std::size_t p = 0; p < n; ++p) diag << ',' << format_number(nr.tv[p]);
    for (std::size_t p = 0; p < n; ++p) {
      const auto* r = find_row(bounds, "tv_" + std::to_string(p + 1));
      diag << ',' << format_number(r ? r->bound : 0.0);
    }
    for (std::size_t p = 0; p < n; ++p) diag << ',' << format_number(escaped[p]);
    diag << '\n';
  };
  row(0.0, 0.0, built.datum);

  std::vector<crowd::BoundRow> report;
  std::size_t steps = 0, files = 0;
  crowd::RunObserver obs;
  obs.on_step = [&](const crowd::StepReport& rep, const crowd::PopulationField& s,
                    const crowd::Transport& tr) {
    monitor.observe(tr, s);
    ++steps;
    for (std::size_t p = 0; p < n; ++p) escaped[p] += rep.outflow[p];
    if (steps % cfg.diagnostics_every == 0 || rep.t == model.t_max) row(rep.t, rep.dt, s);
  };
  obs.on_snapshot = [&](double t, const crowd::PopulationField& s) {
    files += write_snapshot(s, t, dir).size();
    for (auto& r : monitor.evaluate(t, s)) report.push_back(std::move(r));
  };
  const crowd::RunResult res = crowd::run(model, built.datum, obs);
  if (!diag) throw std::runtime_error("cannot write " + (dir / "diagnostics.csv").string());

  out << "steps " << steps << ", t = " << model.t_max << ", snapshot files " << files << '\n';
  for (std::size_t p = 0; p < n; ++p)
    out << "population " << p + 1 << ": mass " << format_number(crowd::mass(res.final_state[p], model.grid))
        << ", escaped " << format_number(res.escaped[p]) << '\n';
  return report;
}

int cmd_run(const Options& o, std::ostream& out) {
  simulate(load(o), out);
  return kOk;
}

int cmd_bounds(const Options& o, std::ostream& out) {
  const RunConfig cfg = load(o);
  const auto rows = simulate(cfg, out);
  std::ofstream f = open_csv(fs::path(cfg.out_dir) / "bounds.csv");
  write_bound_rows(f, rows);
  bool ok = true;
  for (const auto& r : rows) {
    out << "t " << format_number(r.t) << "  " << r.quantity << "  measured "
        << format_number(r.measured) << "  log10(bound) " << format_number(r.bound_log10)
        << (r.dominated ? "" : "  VIOLATED") << '\n';
    ok = ok && r.dominated;
  }
  return ok || !cfg.strict ? kOk : kViolation;
}

int cmd_gateaux(const Options& o, std::ostream& out) {
  const GateauxScenario s = gateaux_scenario(o.constant_speed);
  const auto rows = crowd::gateaux_sweep(s.model, s.rho0, s.sigma0, s.t, o.hs);
  const fs::path dir = o.out.value_or("out");
  std::ofstream f = open_csv(dir / "gateaux.csv");
  f << "h,residual,residual_over_h\n";
  out << "h  r(h)  r(h)/h  r(h)/r(2h)\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    f << format_number(r.h) << ',' << format_number(r.residual) << ',' << format_number(r.ratio)
      << '\n';
    out << r.h << "  " << r.residual << "  " << r.ratio;
    if (k > 0 && rows[k - 1].residual > 0.0) out << "  " << r.residual / rows[k - 1].residual;
    out << '\n';
  }
  return kOk;
}

int cmd_stability(const Options& o, std::ostream& out) {
  const RunConfig cfg = load(o);
  const BuiltModel built = build_model(cfg);
  const auto rows = stability_experiment(built.model, built.datum, o.perturb);
  std::ofstream f = open_csv(fs::path(cfg.out_dir) / "stability.csv");
  f << "t,distance,bound,log10_bound,dominated\n";
  bool ok = true;
  for (const auto& r : rows) {
    f << format_number(r.t) << ',' << format_number(r.distance) << ',' << format_number(r.bound)
      << ',' << format_number(r.bound_log10) << ',' << (r.dominated ? 1 : 0) << '\n';
    out << "t " << format_number(r.t) << "  distance " << format_number(r.distance) << "  bound "
        << format_number(r.bound) << (r.dominated ? "" : "  VIOLATED") << '\n';
    ok = ok && r.dominated;
  }
  return ok || !cfg.strict ? kOk : kViolation;
}

}  // namespace

int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation of nonlocal multi-population crowd models"};
  app.require_subcommand(1);
  Options o;
  auto* run = app.add_subcommand("run", "simulate and write snapshots and diagnostics.csv");
  auto* bounds = app.add_subcommand("bounds", "simulate and compare with the a-priori bounds");
  auto* gateaux = app.add_subcommand("gateaux", "Gateaux residual table on a smooth 64x64 case");
  auto* stability = app.add_subcommand("stability", "paired runs against the stability bound");
  for (auto* cmd : {run, bounds, stability}) add_common(cmd, o);
  stability->add_option("--perturb", o.perturb, "L1 size of the datum perturbation");
  gateaux->add_option("--out", o.out, "output directory");
  gateaux->add_option("--threads", o.threads, "worker threads");
  gateaux->add_option("--steps", o.hs, "perturbation sizes h");
  gateaux->add_flag("--constant-speed", o.constant_speed, "use v = 1 (exact linearization)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "crowdsim: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (o.threads && *o.threads > 0) crowd::parallel::set_threads(*o.threads);
    if (*run) return cmd_run(o, out);
    if (*bounds) return cmd_bounds(o, out);
    if (*gateaux) return cmd_gateaux(o, out);
    return cmd_stability(o, out);
  } catch (const crowd::InvariantViolation& e) {
    err << "crowdsim: invariant violated: " << e.what() << '\n';
    return kViolation;
  } catch (const crowd::ConfigError& e) {
    err << "crowdsim: configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const crowd::RangeError& e) {
    err << "crowdsim: " << e.what() << '\n';
    return kConfigError;
  } catch (const crowd::UnsupportedModelError& e) {
    err << "crowdsim: " << e.what() << '\n';
    return kConfigError;
  } catch (const crowd::Error& e) {
    err << "crowdsim: numerical error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    err << "crowdsim: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace crowdsim
