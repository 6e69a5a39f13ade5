// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "app.hpp"
#include "config.hpp"
#include "crowd/analysis.hpp"
#include "crowd/linearized.hpp"
#include "crowd/solver.hpp"
#include "experiments.hpp"
#include "oracles.hpp"

using namespace crowdsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

BuiltModel preset_model(const std::string& name, double mesh, double t_max,
                        std::vector<double> snapshots = {}) {
  RunConfig c = preset(name);
  set_mesh(c, mesh);
  c.t_max = t_max;
  c.snapshot_times = std::move(snapshots);
  return build_model(c);
}

std::vector<double> times(double t_max, double every) {
  std::vector<double> out;
  const auto n = static_cast<int>(std::lround(t_max / every));
  for (int k = 0; k <= n; ++k) out.push_back(k * every);
  return out;
}

Outcome conservation() {
  const auto start = std::chrono::steady_clock::now();
  const BuiltModel b = preset_model("crossing", 0.1, 1.0);
  const std::size_t n = b.model.n();
  std::vector<double> m0(n), escaped(n, 0.0);
  for (std::size_t p = 0; p < n; ++p) m0[p] = crowd::mass(b.datum[p], b.model.grid);
  double worst = 0.0;
  std::size_t steps = 0;
  crowd::RunObserver obs;
  obs.on_step = [&](const crowd::StepReport& r, const crowd::PopulationField&, const crowd::Transport&) {
    ++steps;
    for (std::size_t p = 0; p < n; ++p) {
      escaped[p] += r.outflow[p];
      worst = std::max(worst, std::abs(r.mass[p] + escaped[p] - m0[p]) / m0[p]);
    }
  };
  (void)crowd::run(b.model, b.datum, obs);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= 1e-10 && secs < 60.0,
          "initial mass " + fmt("%.6g", m0[0]) + " + " + fmt("%.6g", m0[1]) + ", " +
              std::to_string(steps) + " steps, max relative defect " + fmt("%.2e", worst) + ", " +
              fmt("%.2f", secs) + " s"};
}

Outcome maximum_principle() {
  double lo = 1.0, hi = 0.0;
  for (const char* name : {"crossing", "evacuation"}) {
    const BuiltModel b = preset_model(name, 0.1, 2.0);
    crowd::RunObserver obs;
    obs.on_step = [&](const crowd::StepReport& r, const crowd::PopulationField&, const crowd::Transport&) {
      for (double v : r.min) lo = std::min(lo, v);
      for (double v : r.max) hi = std::max(hi, v);
    };
    (void)crowd::run(b.model, b.datum, obs);
  }
  return {lo >= -1e-6 && hi <= 1.0 + 1e-6, "range [" + fmt("%.3e", lo) + ", " + fmt("%.12g", hi) + "]"};
}

Outcome convolution_oracle() {
  const crowd::Rect box{-2.0, 2.0, -2.0, 2.0};
  const crowd::GridSpec g = crowd::make_grid(box, 4.0 / 64, 4.0 / 64, box);
  const crowd::SampledKernel k = crowd::sample_kernel(crowd::KernelSpec{}, g);
  std::mt19937_64 rng(20240611);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const crowd::Field2D rho = oracle::random_field(g.nx, g.ny, rng);
    const crowd::Field2D fast = crowd::convolve(rho, k);
    const crowd::Field2D slow = oracle::convolve(rho, g, k);
    for (std::size_t c = 0; c < fast.size(); ++c)
      worst = std::max(worst, std::abs(fast.values()[c] - slow.values()[c]));
  }
  const crowd::Rect big{-1.0, 1.0, -1.0, 1.0};
  const crowd::GridSpec fine = crowd::make_grid(big, 0.025, 0.025, big);
  const double mass = crowd::sample_kernel(crowd::KernelSpec{}, fine).mass;
  const double mass_err = std::abs(mass - std::pow(16.0 / 35.0, 2));
  return {worst <= 1e-12 && mass_err <= 1e-4,
          "max abs error " + fmt("%.2e", worst) + " over 50 fields, kernel mass error " + fmt("%.2e", mass_err)};
}

Outcome wd_values() {
  const double e1 = std::abs(crowd::wd(1) - 1.0);
  const double e2 = std::abs(crowd::wd(2) - std::numbers::pi / 4);
  const double e3 = std::abs(crowd::wd(3) - 2.0 / 3.0);
  return {e1 <= 1e-12 && e2 <= 1e-10 && e3 <= 1e-10,
          "errors " + fmt("%.1e", e1) + ", " + fmt("%.1e", e2) + ", " + fmt("%.1e", e3)};
}

Outcome tv_bound() {
  const BuiltModel b = preset_model("crossing", 0.1, 0.5, times(0.5, 0.05));
  const crowd::BoundReport r = bounds_experiment(b.model, b.datum);
  double min_slack = INFINITY;
  std::size_t count = 0;
  for (const auto& row : r.rows)
    if (row.quantity == "tv") {
      ++count;
      if (row.t > 0.0) min_slack = std::min(min_slack, row.slack_log10);
    }
  return {r.all_dominated() && count == 11,
          std::to_string(r.rows.size()) + " rows at " + std::to_string(count) +
              " output times, smallest log10 slack of the total after t = 0: " + fmt("%.3g", min_slack)};
}

Outcome stability() {
  const BuiltModel b = preset_model("crossing", 0.1, 0.5, times(0.5, 0.05));
  const auto rows = stability_experiment(b.model, b.datum, 0.1);
  bool ok = rows.size() == 11;
  double max_dist = 0.0;
  for (const auto& r : rows) {
    ok = ok && r.dominated;
    max_dist = std::max(max_dist, r.distance);
  }
  return {ok, std::to_string(rows.size()) + " output times, initial distance " +
                  fmt("%.6g", rows.empty() ? 0.0 : rows.front().distance) + ", max distance " +
                  fmt("%.6g", max_dist) + ", final log10 bound " +
                  fmt("%.3g", rows.empty() ? 0.0 : rows.back().bound_log10)};
}

Outcome gateaux() {
  const std::vector<double> hs{0.2, 0.1, 0.05, 0.025};
  const GateauxScenario s = gateaux_scenario(false);
  const auto rows = crowd::gateaux_sweep(s.model, s.rho0, s.sigma0, s.t, hs);
  bool ok = rows.size() == hs.size();
  std::string detail = "r(h)/h:";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    detail += " " + fmt("%.3e", rows[k].ratio);
    if (k > 0) {
      ok = ok && rows[k].ratio < rows[k - 1].ratio;
      ok = ok && rows[k].residual <= 0.6 * rows[k - 1].residual;
    }
  }
  const GateauxScenario c = gateaux_scenario(true);
  double worst = 0.0;
  for (const auto& r : crowd::gateaux_sweep(c.model, c.rho0, c.sigma0, c.t, hs))
    worst = std::max(worst, r.residual);
  ok = ok && worst <= 1e-10;
  return {ok, detail + "; constant speed max r(h) " + fmt("%.2e", worst)};
}

Outcome cost_gradient() {
  const std::vector<double> hs{0.2, 0.1, 0.05, 0.025};
  const GateauxScenario s = gateaux_scenario(false);
  const crowd::Trajectory traj = crowd::record_trajectory(s.model, s.rho0);
  const crowd::GridSpec& g = s.model.grid;

  crowd::CostSpec cost;
  cost.f = [](std::span<const double> r) { return r[0] * r[0]; };
  cost.grad_f = [](std::span<const double> r, std::span<double> out) { out[0] = 2.0 * r[0]; };
  cost.psi = crowd::sample_field(g, [](double x, double y) { return std::exp(-(x - 0.5) * (x - 0.5) - y * y); });
  cost.t = s.t;
  const crowd::CostValue base = crowd::cost_and_gradient(traj, cost, s.sigma0);

  std::vector<double> err;
  for (double h : hs) {
    const crowd::Trajectory moved =
        crowd::record_trajectory(s.model, crowd::combine(1.0, s.rho0, h, s.sigma0), &traj.schedule);
    const double fd = (crowd::cost_value(moved.states.back(), cost) - base.J) / h;
    err.push_back(std::abs(fd - base.DJ));
  }
  // C is the smallest constant covering the sweep; err / h must also stay
  // within a factor 1.5 across it, i.e. the error is genuinely O(h).
  double C = 0.0, lo = INFINITY;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    C = std::max(C, err[k] / hs[k]);
    lo = std::min(lo, err[k] / hs[k]);
  }
  bool ok = C <= 1.5 * lo;
  std::string detail = "DJ " + fmt("%.6g", base.DJ) + ", C " + fmt("%.3g", C) + ", errors";
  for (std::size_t k = 0; k < hs.size(); ++k) {
    detail += " " + fmt("%.2e", err[k]);
    ok = ok && err[k] <= C * hs[k] + 1e-8;
    if (k > 0) ok = ok && err[k] < err[k - 1];
  }

  crowd::CostSpec total;
  total.f = [](std::span<const double> r) { return r[0]; };
  total.grad_f = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  total.psi = crowd::Field2D(g.nx, g.ny, 1.0);
  total.t = s.t;
  const double dj = crowd::cost_and_gradient(traj, total, s.sigma0).DJ;
  const double mass_err = std::abs(dj - crowd::mass(s.sigma0[0], g));
  ok = ok && mass_err <= 1e-10;
  return {ok, detail + "; mass identity error " + fmt("%.2e", mass_err)};
}

Outcome symmetry() {
  RunConfig c = preset("crossing");
  set_mesh(c, 0.1);
  c.t_max = 1.0;
  c.snapshot_times = times(1.0, 0.1);
  c.populations[0].density = 0.8;
  c.populations[1].density = 0.8;
  c.populations[1].rect = {-c.populations[0].rect.x1, -c.populations[0].rect.x0, c.populations[0].rect.y0,
                           c.populations[0].rect.y1};
  c.populations[1].gx = -c.populations[0].gx;
  c.populations[1].gy = c.populations[0].gy;
  c.populations[1].eps = {c.populations[0].eps[1], c.populations[0].eps[0]};
  const BuiltModel b = build_model(c);
  const std::size_t nx = b.model.grid.nx, ny = b.model.grid.ny;
  double worst = 0.0;
  std::size_t checked = 0;
  crowd::RunObserver obs;
  obs.on_step = [&](const crowd::StepReport&, const crowd::PopulationField& s, const crowd::Transport&) {
    ++checked;
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) worst = std::max(worst, std::abs(s[1](i, j) - s[0](nx - 1 - i, j)));
  };
  (void)crowd::run(b.model, b.datum, obs);
  return {worst <= 1e-10 && checked > 0,
          std::to_string(checked) + " steps, max |rho2(x, y) - rho1(-x, y)| " + fmt("%.2e", worst)};
}

// Local maxima of p at interior indices whose height above the lower
// neighbouring minimum exceeds `prominence`.
std::size_t count_peaks(const std::vector<double>& p, double prominence) {
  std::size_t peaks = 0;
  for (std::size_t j = 1; j + 1 < p.size(); ++j) {
    if (!(p[j] > p[j - 1] && p[j] >= p[j + 1])) continue;
    double left = p[j], right = p[j];
    for (std::size_t k = j; k-- > 0 && p[k] <= p[k + 1];) left = p[k];
    for (std::size_t k = j + 1; k < p.size() && p[k] <= p[k - 1]; ++k) right = p[k];
    if (p[j] - std::max(left, right) > prominence) ++peaks;
  }
  return peaks;
}

Outcome lanes() {
  const double t_max = 3.0;
  const BuiltModel b = preset_model("crossing", 0.05, t_max, times(t_max, 0.05));
  const crowd::GridSpec& g = b.model.grid;
  struct Sample {
    double t, overlap;
    std::size_t peaks;
  };
  std::vector<Sample> samples;
  crowd::RunObserver obs;
  obs.on_snapshot = [&](double t, const crowd::PopulationField& s) {
    double overlap = 0.0;
    std::vector<double> column(g.nx, 0.0);
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) {
        const double w = s[0](i, j) * s[1](i, j) * g.cell_area();
        overlap += w;
        column[i] += w;
      }
    // interaction zone: columns carrying at least a tenth of the peak column overlap
    const double top = *std::max_element(column.begin(), column.end());
    std::vector<double> profile;
    for (std::size_t j = 0; j < g.ny; ++j) {
      if (g.y_center(j) < g.room.y0 || g.y_center(j) > g.room.y1) continue;
      double sum = 0.0;
      std::size_t cols = 0;
      for (std::size_t i = 0; i < g.nx; ++i)
        if (top > 0.0 && column[i] >= 0.1 * top) {
          sum += s[0](i, j);
          ++cols;
        }
      profile.push_back(cols ? sum / cols : 0.0);
    }
    samples.push_back({t, overlap, top > 0.0 ? count_peaks(profile, 1e-3) : 0});
  };
  (void)crowd::run(b.model, b.datum, obs);

  std::size_t peak = 0;
  for (std::size_t k = 0; k < samples.size(); ++k)
    if (samples[k].overlap > samples[peak].overlap) peak = k;
  double after = samples[peak].overlap;
  std::size_t lanes_max = 0;
  double lanes_t = 0.0;
  for (std::size_t k = peak; k < samples.size(); ++k) after = std::min(after, samples[k].overlap);
  for (std::size_t k = 0; k < samples.size(); ++k)
    if (samples[k].t >= samples[peak].t - 0.5 && samples[k].peaks > lanes_max) {
      lanes_max = samples[k].peaks;
      lanes_t = samples[k].t;
    }
  const double peak_overlap = samples[peak].overlap;
  const double drop = peak_overlap > 0.0 ? 1.0 - after / peak_overlap : 0.0;
  return {peak_overlap > 0.0 && drop >= 0.2 && lanes_max >= 2,
          "max overlap " + fmt("%.4g", peak_overlap) + " at t = " + fmt("%.2f", samples[peak].t) +
              ", later drop " + fmt("%.1f", 100.0 * drop) + "%, " + std::to_string(lanes_max) +
              " interior maxima of the rho1 profile (t = " + fmt("%.2f", lanes_t) + ")"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "crowd_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream sink;
  for (const char* run : {"a", "b"}) {
    const std::string dir = (root / run).string();
    const char* argv[] = {"crowdsim", "run", "--preset", "crossing", "--mesh", "0.1", "--tmax", "0.5",
                          "--out", dir.c_str()};
    if (run_app(10, argv, sink, sink) != 0) return {false, "run failed: " + sink.str()};
  }
  std::size_t files = 0;
  bool same = true;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    ++files;
    const fs::path other = root / "b" / e.path().filename();
    same = same && fs::exists(other) && slurp(e.path()) == slurp(other);
  }
  fs::remove_all(root);
  return {same && files >= 5, std::to_string(files) + " files compared"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"1 conservation", conservation},
      {"2 maximum principle", maximum_principle},
      {"3 convolution oracle", convolution_oracle},
      {"4 W_d", wd_values},
      {"5 TV bound", tv_bound},
      {"6 stability", stability},
      {"7 Gateaux derivative", gateaux},
      {"8 cost gradient", cost_gradient},
      {"9 mirror symmetry", symmetry},
      {"10 lane formation", lanes},
      {"11 determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
