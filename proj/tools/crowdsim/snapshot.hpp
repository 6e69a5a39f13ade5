#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crowd/grid.hpp"

namespace crowdsim {

/// pop{i}_t{t:.3f}.csv with i starting at 1.
std::string snapshot_name(std::size_t population, double t);

/// One CSV per population: line 1 holds nx,ny,x0,y0,dx,dy,t, then ny rows
/// (j ascending) of nx densities with 17 significant digits.
/// Returns the written paths. Throws std::runtime_error naming the path on I/O failure.
std::vector<std::filesystem::path> write_snapshot(const crowd::PopulationField& state, double t,
                                                  const std::filesystem::path& dir);

struct Snapshot {
  crowd::Field2D field;
  double x0 = 0.0, y0 = 0.0, dx = 0.0, dy = 0.0, t = 0.0;
};

Snapshot read_snapshot(const std::filesystem::path& path);

/// %.17g, which reads back to the same double.
std::string format_number(double v);

}  // namespace crowdsim
