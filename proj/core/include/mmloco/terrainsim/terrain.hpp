#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmloco/perception/geometry.hpp"

namespace mmloco::terrainsim {

enum class TerrainKind { kRough, kStairs, kGaps, kDiscrete };

TerrainKind terrain_kind_from_string(const std::string& s);
std::string to_string(TerrainKind k);

// Procedural heightfield at 0.05 m resolution. The course runs along +x with
// a flat spawn platform around the origin; difficulty scales linearly with
// level 0..9 (rough amplitude 0 -> 0.10 m, stair rise 0.05 -> 0.27 m at run
// 0.30 m, gap width 0.05 -> 0.50 m, obstacle height 0.03 -> 0.27 m).
struct TerrainField {
  TerrainKind kind = TerrainKind::kRough;
  int level = 0;
  std::uint64_t seed = 0;
  double resolution = 0.05;
  double x0 = -2.0;  // world x of grid column 0
  double y0 = -2.0;  // world y of grid row 0
  int nx = 0;
  int ny = 0;
  std::vector<double> height;  // nx * ny, row-major in x

  double course_length = 8.0;  // meters of scored course from the spawn point

  double at_cell(int ix, int iy) const {
    return height[static_cast<std::size_t>(ix) * static_cast<std::size_t>(ny) +
                  static_cast<std::size_t>(iy)];
  }
  double& at_cell_mut(int ix, int iy) {
    return height[static_cast<std::size_t>(ix) * static_cast<std::size_t>(ny) +
                  static_cast<std::size_t>(iy)];
  }
};

double rough_amplitude(int level);
double stair_rise(int level);
double gap_width(int level);
double obstacle_height(int level);

TerrainField generate_terrain(TerrainKind kind, int level, std::uint64_t seed);

// Explicit stair geometry for the evaluation protocol; stairs start at
// x = 1.0 and climb for n_steps treads.
TerrainField generate_stairs_exact(double rise, double run, int n_steps, std::uint64_t seed);

// Bilinear interpolation; queries outside the field clamp to the edge.
double height_at(const TerrainField& field, double x, double y);

// Heightfield CSV export (one row per x line) for plotting.
void write_terrain_csv(const TerrainField& field, const std::string& path);

}  // namespace mmloco::terrainsim
