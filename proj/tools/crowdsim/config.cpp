#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "crowd/errors.hpp"
#include "crowd/kernel.hpp"
#include "crowd/nonlocal.hpp"
#include "crowd/velocity.hpp"

namespace crowdsim {

using crowd::ConfigError;

namespace {

const crowd::Rect kCorridorDomain{-8.0, 8.0, -4.0, 4.0};
const crowd::Rect kCorridorRoom{-8.0, 8.0, -3.0, 3.0};

std::vector<crowd::Segment> corridor_exits() {
  return {{-8.0, -3.0, -8.0, 3.0}, {8.0, -3.0, 8.0, 3.0}};
}

PopulationConfig population(double gx, double gy, double density, crowd::Rect rect,
                            std::vector<double> eps) {
  PopulationConfig p;
  p.vmax = 4.0;
  p.gx = gx;
  p.gy = gy;
  p.density = density;
  p.rect = rect;
  p.eps = std::move(eps);
  return p;
}

}  // namespace

std::vector<std::string> preset_names() { return {"crossing", "evacuation"}; }

RunConfig preset(const std::string& name) {
  RunConfig c;
  c.preset = name;
  c.family = crowd::ModelFamily::Deviation;
  c.domain = kCorridorDomain;
  c.room = kCorridorRoom;
  c.exits = corridor_exits();
  c.mesh = 0.025;
  c.max_density = 1.0;
  c.delta_max = 0.8;
  c.delta_r = 0.75;
  c.kernel_half_width = 0.5;
  const crowd::Rect left{-6.4, -3.2, -2.4, 2.4};
  if (name == "crossing") {
    c.populations = {population(1.0, 0.0, 0.9, left, {0.3, 0.7}),
                     population(-1.0, 0.0, 0.7, {3.2, 6.4, -2.4, 2.4}, {0.7, 0.3})};
    return c;
  }
  if (name == "evacuation") {
    c.populations = {population(1.0, 0.0, 0.5, left, {0.0, 0.3}),
                     population(0.0, 0.0, 0.5, left, {0.3, 0.0})};
    return c;
  }
  std::string valid;
  for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "' (valid presets: " + valid + ")");
}

void set_mesh(RunConfig& cfg, double mesh) {
  if (!(mesh > 0.0)) throw ConfigError("mesh must be positive");
  cfg.mesh = mesh;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

class Parser {
 public:
  Parser(std::string origin, RunConfig& cfg) : origin_(std::move(origin)), cfg_(cfg) {}

  void line(std::size_t number, const std::string& raw) {
    line_ = number;
    std::string s = raw;
    if (const auto hash = s.find('#'); hash != std::string::npos) s.erase(hash);
    s = trim(s);
    if (s.empty()) return;
    if (s.front() == '[') {
      if (s.back() != ']') fail("unterminated section header");
      section_ = trim(s.substr(1, s.size() - 2));
      open_section();
      return;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (!seen_.insert(section_ + "/" + key).second)
      fail("duplicate key '" + key + "'" + (section_.empty() ? "" : " in [" + section_ + "]"));
    assign(key, value);
    entries_ = true;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line_) + ": " + msg);
  }

  std::string where(const std::string& key) const {
    return "[" + section_ + "] " + key;
  }

  double number(const std::string& key, const std::string& v) const {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d))
      fail(where(key) + ": expected a number, got '" + v + "'");
    return d;
  }

  std::vector<double> numbers(const std::string& key, const std::string& v,
                              std::size_t expected = 0) const {
    std::vector<double> out;
    for (const auto& part : split(v, ',')) out.push_back(number(key, part));
    if (expected != 0 && out.size() != expected)
      fail(where(key) + ": expected " + std::to_string(expected) + " values");
    return out;
  }

  bool boolean(const std::string& key, const std::string& v) const {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(where(key) + ": expected true or false");
  }

  crowd::Rect rect(const std::string& key, const std::string& v) const {
    const auto r = numbers(key, v, 4);
    return {r[0], r[1], r[2], r[3]};
  }

  void open_section() {
    if (section_ == "grid" || section_ == "model" || section_ == "kernel" || section_ == "output")
      return;
    const std::string prefix = "population.";
    if (section_.rfind(prefix, 0) == 0) {
      const std::string idx = section_.substr(prefix.size());
      char* end = nullptr;
      const long i = std::strtol(idx.c_str(), &end, 10);
      if (idx.empty() || end != idx.c_str() + idx.size() || i < 1 || i > 64)
        fail("bad population index '" + idx + "'");
      if (static_cast<std::size_t>(i) > cfg_.populations.size())
        cfg_.populations.resize(static_cast<std::size_t>(i));
      population_ = static_cast<std::size_t>(i - 1);
      return;
    }
    fail("unknown section [" + section_ + "]");
  }

  void assign(const std::string& key, const std::string& v) {
    if (section_.empty()) {
      if (key != "preset") fail("unknown top-level key '" + key + "'");
      if (entries_) fail("preset must come before every other entry");
      cfg_ = preset(v);
      return;
    }
    if (section_ == "grid") {
      if (key == "domain") cfg_.domain = rect(key, v);
      else if (key == "room") cfg_.room = rect(key, v);
      else if (key == "mesh") cfg_.mesh = number(key, v);
      else if (key == "exits") {
        cfg_.exits.clear();
        if (v != "none")
          for (const auto& seg : split(v, ';')) {
            const auto s = numbers(key, seg, 4);
            cfg_.exits.push_back({s[0], s[1], s[2], s[3]});
          }
      } else fail("unknown key '" + key + "' in [grid]");
      return;
    }
    if (section_ == "model") {
      if (key == "family") {
        if (v == "deviation") cfg_.family = crowd::ModelFamily::Deviation;
        else if (v == "differentiable") cfg_.family = crowd::ModelFamily::Differentiable;
        else fail(where(key) + ": expected deviation or differentiable");
      } else if (key == "R") cfg_.max_density = number(key, v);
      else if (key == "cfl") cfg_.cfl = number(key, v);
      else if (key == "t_max") cfg_.t_max = number(key, v);
      else if (key == "snapshots") cfg_.snapshot_times = numbers(key, v);
      else if (key == "order") {
        if (v == "godunov") cfg_.order = crowd::SplitOrder::Godunov;
        else if (v == "strang") cfg_.order = crowd::SplitOrder::Strang;
        else fail(where(key) + ": expected godunov or strang");
      } else if (key == "strict") cfg_.strict = boolean(key, v);
      else if (key == "delta_max") cfg_.delta_max = number(key, v);
      else if (key == "delta_r") cfg_.delta_r = number(key, v);
      else fail("unknown key '" + key + "' in [model]");
      return;
    }
    if (section_ == "kernel") {
      if (key == "half_width") cfg_.kernel_half_width = number(key, v);
      else if (key == "normalize") cfg_.normalize_kernel = boolean(key, v);
      else fail("unknown key '" + key + "' in [kernel]");
      return;
    }
    if (section_ == "output") {
      if (key == "dir") cfg_.out_dir = v;
      else if (key == "diagnostics_every") {
        const double n = number(key, v);
        if (n < 1 || n != std::floor(n)) fail(where(key) + ": expected a positive integer");
        cfg_.diagnostics_every = static_cast<std::size_t>(n);
      } else if (key == "threads") {
        const double n = number(key, v);
        if (n < 0 || n != std::floor(n)) fail(where(key) + ": expected a non-negative integer");
        cfg_.threads = static_cast<int>(n);
      } else fail("unknown key '" + key + "' in [output]");
      return;
    }
    PopulationConfig& p = cfg_.populations[population_];
    if (key == "speed") {
      if (v != "linear" && v != "constant") fail(where(key) + ": expected linear or constant");
      p.speed = v;
    } else if (key == "vmax") p.vmax = number(key, v);
    else if (key == "direction") {
      const auto d = numbers(key, v, 2);
      p.gx = d[0];
      p.gy = d[1];
    } else if (key == "density") p.density = number(key, v);
    else if (key == "rect") p.rect = rect(key, v);
    else if (key == "eps") p.eps = numbers(key, v);
    else if (key == "push") p.push = numbers(key, v);
    else fail("unknown key '" + key + "' in [" + section_ + "]");
  }

  std::string origin_;
  RunConfig& cfg_;
  std::string section_;
  std::size_t population_ = 0;
  std::size_t line_ = 0;
  bool entries_ = false;
  std::set<std::string> seen_;
};

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  cfg.populations.clear();
  Parser parser(origin, cfg);
  std::istringstream in(text);
  std::string raw;
  std::size_t n = 0;
  while (std::getline(in, raw)) parser.line(++n, raw);
  if (cfg.populations.empty()) throw ConfigError(origin + ": no preset and no [population.i] sections");
  for (double t : cfg.snapshot_times)
    if (t < 0.0 || t > cfg.t_max)
      throw ConfigError(origin + ": [model] snapshots: time " + std::to_string(t) +
                        " outside [0, t_max]");
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

BuiltModel build_model(const RunConfig& cfg) {
  const std::size_t n = cfg.populations.size();
  if (n == 0) throw ConfigError("configuration has no populations");
  if (!(cfg.mesh > 0.0)) throw ConfigError("[grid] mesh must be positive");
  const crowd::GridSpec grid = crowd::make_grid(cfg.domain, cfg.mesh, cfg.mesh, cfg.room, cfg.exits);

  crowd::KernelSpec ks;
  ks.x_factor = crowd::AxisProfile::cubic_bump(cfg.kernel_half_width);
  ks.y_factor = crowd::AxisProfile::cubic_bump(cfg.kernel_half_width);
  ks.normalize = cfg.normalize_kernel;
  const auto kernel = std::make_shared<const crowd::SampledKernel>(crowd::sample_kernel(ks, grid));

  std::vector<crowd::SpeedLaw> laws;
  std::vector<crowd::DirectionField> dirs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = cfg.populations[i];
    if (p.speed == "constant")
      laws.push_back(crowd::SpeedLaw::constant(p.vmax, cfg.max_density));
    else
      laws.push_back(crowd::SpeedLaw::linear(p.vmax, cfg.max_density));
    dirs.push_back(crowd::corridor_direction(grid, p.gx, p.gy, cfg.delta_max, cfg.delta_r));
  }

  BuiltModel out;
  out.model.family = cfg.family;
  out.model.grid = grid;
  out.model.max_density = cfg.max_density;
  out.model.cfl = cfg.cfl;
  out.model.t_max = cfg.t_max;
  out.model.snapshot_times = cfg.snapshot_times;
  out.model.order = cfg.order;
  out.model.strict = cfg.strict;

  std::vector<crowd::Field2D> data;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = cfg.populations[i];
    const std::string who = "[population." + std::to_string(i + 1) + "] ";
    if (!p.eps.empty() && p.eps.size() != n)
      throw ConfigError(who + "eps: expected " + std::to_string(n) + " values");
    if (!p.push.empty() && p.push.size() != n)
      throw ConfigError(who + "push: expected " + std::to_string(n) + " values");
    crowd::NonlocalOp op;
    auto add = [&op](double w, crowd::NonlocalOp term) {
      op = op.is_zero() && w == 1.0 ? std::move(term)
                                    : crowd::NonlocalOp::weighted_sum(1.0, op, w, std::move(term));
    };
    for (std::size_t j = 0; j < p.eps.size(); ++j)
      if (p.eps[j] != 0.0) add(1.0, crowd::NonlocalOp::gradient_avoidance(p.eps[j], kernel, j));
    for (std::size_t j = 0; j < p.push.size(); ++j)
      if (p.push[j] != 0.0)
        add(p.push[j], crowd::NonlocalOp::flux_push(kernel, j, laws[j], dirs[j].total()));
    out.model.populations.push_back({laws[i], dirs[i], kernel, op});
    data.push_back(p.rect.empty() ? grid.zeros() : crowd::indicator_datum(grid, p.density, p.rect));
  }
  out.datum = crowd::PopulationField(grid, std::move(data));
  out.model.validate();
  return out;
}

}  // namespace crowdsim
