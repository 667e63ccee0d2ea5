#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "settle/esdf_map.hpp"
#include "settle/geometry.hpp"

namespace settle {

/// Regular-grid terrain elevation samples. Node (i,j) sits at
/// (origin_x + i*cell_size, origin_y + j*cell_size); the surface between
/// nodes is the standard two-triangles-per-cell interpolation.
struct HeightmapGrid {
  double cell_size = 0.1;
  double origin_x = 0.0;
  double origin_y = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<double> heights;  // row-major, x fastest

  double at(int i, int j) const { return heights[static_cast<size_t>(j) * nx + i]; }
  double minHeight() const;
  double maxHeight() const;
  /// Interpolated surface height; (x,y) is clamped to the grid extent.
  double surfaceHeight(double x, double y) const;
};

/// Parses the plain-text heightmap format:
///   cell_size <v>
///   origin <x> <y>
///   dims <nx> <ny>
///   <nx*ny height values, row-major, x fastest>
/// Header lines may appear in any order; '#' starts a comment.
HeightmapGrid parseHeightmap(const std::string& text);
HeightmapGrid loadHeightmap(const std::string& path);

struct HeightmapBuildOptions {
  double z_below = 0.3;  // map extends this far below the lowest surface point
  double z_above = 1.2;  // and this far above the highest
};

/// Exact signed distance to the triangulated surface, sampled on a lattice.
/// Points above the surface are positive, below negative.
EsdfMap buildEsdfFromHeightmap(const HeightmapGrid& hm, double voxel_size,
                               const HeightmapBuildOptions& options = {});

struct RandomTerrainParams {
  int nx = 61;
  int ny = 61;
  double cell_size = 0.1;
  double amplitude = 0.25;      // peak-to-mean height variation before smoothing
  int smooth_iters = 3;         // box-blur passes; higher = gentler slopes
  double max_slope_deg = 25.0;  // hard cap on the grid slope between neighbor cells
};

/// Deterministic pseudo-random rolling terrain; identical output for a given
/// seed on every platform.
HeightmapGrid randomHeightmap(uint32_t seed, const RandomTerrainParams& params = {});

}  // namespace settle
