#include "mmloco/terrainsim/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mmloco/support/rng.hpp"

namespace mmloco::terrainsim {

using mmloco::RngStream;

TerrainKind terrain_kind_from_string(const std::string& s) {
  if (s == "rough") return TerrainKind::kRough;
  if (s == "stairs") return TerrainKind::kStairs;
  if (s == "gaps") return TerrainKind::kGaps;
  if (s == "discrete") return TerrainKind::kDiscrete;
  throw std::invalid_argument("unknown terrain kind: " + s +
                              " (expected rough|stairs|gaps|discrete)");
}

std::string to_string(TerrainKind k) {
  switch (k) {
    case TerrainKind::kRough: return "rough";
    case TerrainKind::kStairs: return "stairs";
    case TerrainKind::kGaps: return "gaps";
    case TerrainKind::kDiscrete: return "discrete";
  }
  return "?";
}

namespace {

void check_level(int level) {
  if (level < 0 || level > 9)
    throw std::invalid_argument("terrain level must be in [0,9], got " + std::to_string(level));
}

double level_lerp(int level, double lo, double hi) {
  return lo + static_cast<double>(level) * (hi - lo) / 9.0;
}

TerrainField blank_field(TerrainKind kind, int level, std::uint64_t seed) {
  TerrainField f;
  f.kind = kind;
  f.level = level;
  f.seed = seed;
  f.x0 = -2.0;
  f.y0 = -2.0;
  // x spans [-2, 10], y spans [-2, 2].
  f.nx = static_cast<int>(std::lround((10.0 - f.x0) / f.resolution)) + 1;
  f.ny = static_cast<int>(std::lround((2.0 - f.y0) / f.resolution)) + 1;
  f.height.assign(static_cast<std::size_t>(f.nx) * static_cast<std::size_t>(f.ny), 0.0);
  return f;
}

// The spawn platform stays flat so every episode starts from a stable stand.
constexpr double kPlatformEnd = 1.0;

}  // namespace

double rough_amplitude(int level) { return level_lerp(level, 0.0, 0.10); }
double stair_rise(int level) { return level_lerp(level, 0.05, 0.27); }
double gap_width(int level) { return level_lerp(level, 0.05, 0.50); }
double obstacle_height(int level) { return level_lerp(level, 0.03, 0.27); }

TerrainField generate_terrain(TerrainKind kind, int level, std::uint64_t seed) {
  check_level(level);
  TerrainField f = blank_field(kind, level, seed);
  RngStream rng = RngStream::keyed({seed, static_cast<std::uint64_t>(kind),
                                    static_cast<std::uint64_t>(level), 0x7465727261ULL});
  switch (kind) {
    case TerrainKind::kRough: {
      double amp = rough_amplitude(level);
      if (amp > 0.0) {
        // Coarse noise lattice (0.25 m) bilinearly upsampled: gives rubble-like
        // bumps rather than per-cell spikes.
        const int step = 5;
        int cnx = f.nx / step + 2, cny = f.ny / step + 2;
        std::vector<double> coarse(static_cast<std::size_t>(cnx * cny));
        for (double& v : coarse) v = rng.uniform(-amp, amp);
        for (int ix = 0; ix < f.nx; ++ix)
          for (int iy = 0; iy < f.ny; ++iy) {
            double gx = static_cast<double>(ix) / step;
            double gy = static_cast<double>(iy) / step;
            int cx = static_cast<int>(gx), cy = static_cast<int>(gy);
            double fx = gx - cx, fy = gy - cy;
            auto cc = [&](int a, int b) { return coarse[static_cast<std::size_t>(a * cny + b)]; };
            double h = (1 - fx) * (1 - fy) * cc(cx, cy) + fx * (1 - fy) * cc(cx + 1, cy) +
                       (1 - fx) * fy * cc(cx, cy + 1) + fx * fy * cc(cx + 1, cy + 1);
            double x = f.x0 + ix * f.resolution;
            if (x > kPlatformEnd) f.at_cell_mut(ix, iy) = h;
          }
      }
      break;
    }
    case TerrainKind::kStairs: {
      double rise = stair_rise(level);
      double run = 0.30;
      for (int ix = 0; ix < f.nx; ++ix) {
        double x = f.x0 + ix * f.resolution;
        double h = 0.0;
        if (x > kPlatformEnd) {
          double stepi = std::floor((x - kPlatformEnd) / run) + 1.0;
          h = stepi * rise;
        }
        for (int iy = 0; iy < f.ny; ++iy) f.at_cell_mut(ix, iy) = h;
      }
      break;
    }
    case TerrainKind::kGaps: {
      double w = gap_width(level);
      // Gaps every 1.5 m along the course, 1 m deep, full width.
      for (int ix = 0; ix < f.nx; ++ix) {
        double x = f.x0 + ix * f.resolution;
        if (x <= kPlatformEnd) continue;
        double phase = std::fmod(x - kPlatformEnd, 1.5);
        if (phase >= 1.5 - w) {
          for (int iy = 0; iy < f.ny; ++iy) f.at_cell_mut(ix, iy) = -1.0;
        }
      }
      break;
    }
    case TerrainKind::kDiscrete: {
      double hmax = obstacle_height(level);
      // Scattered rectangular blocks, up or down by the level height.
      int blocks = 60;
      for (int b = 0; b < blocks; ++b) {
        double bx = rng.uniform(kPlatformEnd + 0.2, 9.5);
        double by = rng.uniform(-1.8, 1.8);
        double bw = rng.uniform(0.2, 0.6);
        double bl = rng.uniform(0.2, 0.6);
        double bh = rng.uniform01() < 0.5 ? hmax : -hmax;
        int ix0 = std::max(0, static_cast<int>((bx - f.x0) / f.resolution));
        int ix1 = std::min(f.nx - 1, static_cast<int>((bx + bl - f.x0) / f.resolution));
        int iy0 = std::max(0, static_cast<int>((by - f.y0) / f.resolution));
        int iy1 = std::min(f.ny - 1, static_cast<int>((by + bw - f.y0) / f.resolution));
        for (int ix = ix0; ix <= ix1; ++ix)
          for (int iy = iy0; iy <= iy1; ++iy) f.at_cell_mut(ix, iy) = bh;
      }
      break;
    }
  }
  return f;
}

TerrainField generate_stairs_exact(double rise, double run, int n_steps, std::uint64_t seed) {
  if (rise < 0.0 || run <= 0.0 || n_steps <= 0)
    throw std::invalid_argument("generate_stairs_exact: bad geometry");
  TerrainField f = blank_field(TerrainKind::kStairs, 0, seed);
  f.course_length = kPlatformEnd + run * n_steps;
  for (int ix = 0; ix < f.nx; ++ix) {
    double x = f.x0 + ix * f.resolution;
    double h = 0.0;
    if (x > kPlatformEnd) {
      double stepi = std::min(static_cast<double>(n_steps),
                              std::floor((x - kPlatformEnd) / run) + 1.0);
      h = stepi * rise;
    }
    for (int iy = 0; iy < f.ny; ++iy) f.at_cell_mut(ix, iy) = h;
  }
  return f;
}

double height_at(const TerrainField& field, double x, double y) {
  double gx = (x - field.x0) / field.resolution;
  double gy = (y - field.y0) / field.resolution;
  gx = std::clamp(gx, 0.0, static_cast<double>(field.nx - 1));
  gy = std::clamp(gy, 0.0, static_cast<double>(field.ny - 1));
  int ix = std::min(static_cast<int>(gx), field.nx - 2);
  int iy = std::min(static_cast<int>(gy), field.ny - 2);
  if (field.nx < 2 || field.ny < 2) return field.at_cell(0, 0);
  double fx = gx - ix, fy = gy - iy;
  return (1 - fx) * (1 - fy) * field.at_cell(ix, iy) + fx * (1 - fy) * field.at_cell(ix + 1, iy) +
         (1 - fx) * fy * field.at_cell(ix, iy + 1) + fx * fy * field.at_cell(ix + 1, iy + 1);
}

void write_terrain_csv(const TerrainField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write terrain csv: " + path);
  out << "# kind=" << to_string(field.kind) << " level=" << field.level
      << " seed=" << field.seed << " x0=" << field.x0 << " y0=" << field.y0
      << " resolution=" << field.resolution << "\n";
  for (int ix = 0; ix < field.nx; ++ix) {
    for (int iy = 0; iy < field.ny; ++iy) {
      if (iy) out << ",";
      out << field.at_cell(ix, iy);
    }
    out << "\n";
  }
}

}  // namespace mmloco::terrainsim
