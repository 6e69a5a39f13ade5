#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "app.hpp"
#include "config.hpp"
#include "crowd/errors.hpp"
#include "experiments.hpp"
#include "snapshot.hpp"

using namespace crowdsim;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "crowdsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Invocation r;
  r.code = run_app(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("crowdsim_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("presets") {
  const RunConfig c = preset("crossing");
  REQUIRE(c.populations.size() == 2);
  CHECK(c.populations[0].gx == 1.0);
  CHECK(c.populations[1].gx == -1.0);
  CHECK(c.exits.size() == 2);
  const RunConfig e = preset("evacuation");
  CHECK(e.populations[1].gx == 0.0);
  try {
    (void)preset("stadium");
    FAIL("expected ConfigError");
  } catch (const crowd::ConfigError& err) {
    CHECK(std::string(err.what()).find("crossing, evacuation") != std::string::npos);
  }
}

TEST_CASE("config text overrides a preset key by key") {
  const RunConfig c = parse_config_text(
      "preset = crossing\n"
      "# comment\n"
      "[grid]\nmesh = 0.1\n"
      "[model]\nt_max = 0.5 # inline comment\nsnapshots = 0, 0.25, 0.5\norder = strang\n"
      "[population.2]\ndensity = 0.4\n");
  CHECK(c.mesh == 0.1);
  CHECK(c.t_max == 0.5);
  CHECK(c.snapshot_times.size() == 3);
  CHECK(c.order == crowd::SplitOrder::Strang);
  CHECK(c.populations[1].density == 0.4);
  CHECK(c.populations[0].density == 0.9);
}

TEST_CASE("config errors carry origin and line") {
  auto message = [](const std::string& text) {
    try {
      (void)parse_config_text(text, "cfg.ini");
    } catch (const crowd::ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("preset = crossing\n[model]\nbogus = 1\n").find("cfg.ini:3") == 0);
  CHECK(message("preset = crossing\n[model]\ncfl = 0.5\ncfl = 0.4\n").find("duplicate") != std::string::npos);
  CHECK(message("preset = crossing\n[nowhere]\n").find("cfg.ini:2") == 0);
  CHECK(message("[model]\ncfl = 0.5\n").find("no preset") != std::string::npos);
  CHECK(message("[model]\ncfl = 0.5\npreset = crossing\n").find("unknown key 'preset' in [model]") != std::string::npos);
  CHECK(message("preset = crossing\n[model]\ncfl = abc\n").find("expected a number") != std::string::npos);
  CHECK(message("preset = crossing\n[model]\nsnapshots = 3\n").find("outside") != std::string::npos);
  CHECK_THROWS_AS(parse_config("/nonexistent/crowd.ini"), crowd::ConfigError);
}

TEST_CASE("build_model from a minimal custom configuration") {
  const RunConfig c = parse_config_text(
      "[grid]\ndomain = 0, 2, 0, 1\nroom = 0, 2, 0, 1\nmesh = 0.05\nexits = none\n"
      "[population.1]\ndirection = 1, 0\ndensity = 0.5\nrect = 0.2, 0.8, 0.2, 0.8\n");
  const BuiltModel b = build_model(c);
  CHECK(b.model.n() == 1);
  CHECK(b.model.grid.nx == 40);
  CHECK(b.model.grid.exits.empty());
  CHECK(crowd::mass(b.datum[0], b.model.grid) == doctest::Approx(0.5 * 0.36));
  RunConfig bad = c;
  bad.populations[0].eps = {0.1, 0.2};
  CHECK_THROWS_AS(build_model(bad), crowd::ConfigError);
}

TEST_CASE("snapshot round trip") {
  const fs::path dir = scratch("snap");
  const crowd::GridSpec g = crowd::make_grid({0.0, 1.0, 0.0, 0.5}, 0.25, 0.25, {0.0, 1.0, 0.0, 0.5});
  crowd::PopulationField s(g, 1);
  s[0](1, 1) = 1.0 / 3.0;
  const auto paths = write_snapshot(s, 0.125, dir);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].filename() == "pop1_t0.125.csv");
  const Snapshot r = read_snapshot(paths[0]);
  CHECK(r.field == s[0]);
  CHECK(r.t == 0.125);
  CHECK(r.dx == 0.25);
  CHECK(slurp(paths[0]).rfind("4,2,0,0,0.25,0.25,0.125\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("run subcommand writes diagnostics and snapshots") {
  const fs::path dir = scratch("run");
  const Invocation r = invoke({"run", "--preset", "crossing", "--mesh", "0.2", "--tmax", "0.2", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  CHECK(fs::exists(dir / "diagnostics.csv"));
  CHECK(fs::exists(dir / "pop1_t0.000.csv"));
  CHECK(fs::exists(dir / "pop2_t0.200.csv"));
  const std::string diag = slurp(dir / "diagnostics.csv");
  CHECK(diag.rfind("t,dt,mass_1,mass_2,linf_1,linf_2,tv_1,tv_2,tv_bound_1,tv_bound_2,escaped_1,escaped_2\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("bounds and stability subcommands") {
  const fs::path dir = scratch("bounds");
  const Invocation b = invoke({"bounds", "--mesh", "0.2", "--tmax", "0.1", "--out", dir.string()});
  CHECK(b.code == 0);
  CHECK(slurp(dir / "bounds.csv").rfind("t,quantity,measured,bound,log10_bound,log10_slack,dominated\n", 0) == 0);
  CHECK(b.out.find("VIOLATED") == std::string::npos);
  const Invocation s = invoke({"stability", "--mesh", "0.2", "--tmax", "0.1", "--perturb", "0.05", "--out", dir.string()});
  CHECK(s.code == 0);
  CHECK(fs::exists(dir / "stability.csv"));
  fs::remove_all(dir);
}

TEST_CASE("gateaux subcommand") {
  const fs::path dir = scratch("gateaux");
  const Invocation g = invoke({"gateaux", "--steps", "0.1", "0.05", "--out", dir.string()});
  CHECK(g.code == 0);
  CHECK(fs::exists(dir / "gateaux.csv"));
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  CHECK(invoke({}).code == kConfigError);
  CHECK(invoke({"run", "--preset", "stadium"}).code == kConfigError);
  CHECK(invoke({"run", "--preset", "crossing", "--config", "x.ini"}).code == kConfigError);
  CHECK(invoke({"run", "--config", "/nonexistent.ini"}).code == kConfigError);
  CHECK(invoke({"run", "--mesh", "0.3"}).code == kConfigError);
  CHECK(invoke({"run", "--mesh", "0.2", "--cfl", "2"}).code == kConfigError);
  CHECK(invoke({"run", "--help"}).code == kOk);
  const Invocation bad = invoke({"run", "--mesh", "-1"});
  CHECK(bad.code == kConfigError);
  CHECK(bad.err.find("mesh") != std::string::npos);
}

TEST_CASE("perturbed datum has the requested distance") {
  const BuiltModel b = build_model([] {
    RunConfig c = preset("crossing");
    set_mesh(c, 0.2);
    return c;
  }());
  const crowd::PopulationField p = perturbed_datum(b.datum, 0.1);
  CHECK(crowd::l1_distance(b.datum, p) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK_THROWS_AS(perturbed_datum(b.datum, 1e6), crowd::ConfigError);
}
