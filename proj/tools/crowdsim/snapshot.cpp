#include "snapshot.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace crowdsim {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string snapshot_name(std::size_t population, double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "pop%zu_t%.3f.csv", population, t);
  return buf;
}

std::vector<std::filesystem::path> write_snapshot(const crowd::PopulationField& state, double t,
                                                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
  const crowd::GridSpec& g = state.grid();
  std::vector<std::filesystem::path> paths;
  for (std::size_t p = 0; p < state.n(); ++p) {
    const auto path = dir / snapshot_name(p + 1, t);
    std::string text;
    text += std::to_string(g.nx) + "," + std::to_string(g.ny) + "," + format_number(g.x0) + "," +
            format_number(g.y0) + "," + format_number(g.dx) + "," + format_number(g.dy) + "," +
            format_number(t) + "\n";
    for (std::size_t j = 0; j < g.ny; ++j) {
      const auto row = state[p].row(j);
      for (std::size_t i = 0; i < g.nx; ++i) {
        if (i) text += ',';
        text += format_number(row[i]);
      }
      text += '\n';
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write snapshot " + path.string());
    paths.push_back(path);
  }
  return paths;
}

namespace {

std::vector<double> parse_row(const std::string& line, const std::filesystem::path& path) {
  std::vector<double> out;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || *end != '\0') throw std::runtime_error("malformed number in " + path.string());
    out.push_back(v);
  }
  return out;
}

}  // namespace

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read snapshot " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty snapshot " + path.string());
  const auto head = parse_row(line, path);
  if (head.size() != 7) throw std::runtime_error("bad snapshot header in " + path.string());
  Snapshot s;
  const auto nx = static_cast<std::size_t>(head[0]);
  const auto ny = static_cast<std::size_t>(head[1]);
  s.x0 = head[2];
  s.y0 = head[3];
  s.dx = head[4];
  s.dy = head[5];
  s.t = head[6];
  s.field = crowd::Field2D(nx, ny);
  for (std::size_t j = 0; j < ny; ++j) {
    if (!std::getline(in, line)) throw std::runtime_error("truncated snapshot " + path.string());
    const auto row = parse_row(line, path);
    if (row.size() != nx) throw std::runtime_error("row length mismatch in " + path.string());
    for (std::size_t i = 0; i < nx; ++i) s.field(i, j) = row[i];
  }
  return s;
}

}  // namespace crowdsim
