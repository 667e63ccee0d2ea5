#include "settle/heightmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "settle/errors.hpp"
#include "settle/parallel.hpp"

namespace settle {

double HeightmapGrid::minHeight() const {
  return *std::min_element(heights.begin(), heights.end());
}

double HeightmapGrid::maxHeight() const {
  return *std::max_element(heights.begin(), heights.end());
}

double HeightmapGrid::surfaceHeight(double x, double y) const {
  double u = std::clamp((x - origin_x) / cell_size, 0.0, static_cast<double>(nx - 1));
  double v = std::clamp((y - origin_y) / cell_size, 0.0, static_cast<double>(ny - 1));
  const int i = std::min(static_cast<int>(u), nx - 2);
  const int j = std::min(static_cast<int>(v), ny - 2);
  u -= i;
  v -= j;
  const double h00 = at(i, j), h10 = at(i + 1, j), h01 = at(i, j + 1), h11 = at(i + 1, j + 1);
  // Cells are split along the (i,j)-(i+1,j+1) diagonal.
  if (u >= v) return h00 + (h10 - h00) * u + (h11 - h10) * v;
  return h00 + (h11 - h01) * u + (h01 - h00) * v;
}

HeightmapGrid parseHeightmap(const std::string& text) {
  std::istringstream in(text);
  HeightmapGrid hm;
  hm.cell_size = 0.0;
  hm.nx = hm.ny = 0;
  std::string line;
  std::vector<double> values;
  bool have_origin = false;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string first;
    if (!(row >> first)) continue;
    if (first == "cell_size") {
      if (!(row >> hm.cell_size)) throw ParseError("heightmap: bad cell_size line");
    } else if (first == "origin") {
      if (!(row >> hm.origin_x >> hm.origin_y)) throw ParseError("heightmap: bad origin line");
      have_origin = true;
    } else if (first == "dims") {
      if (!(row >> hm.nx >> hm.ny)) throw ParseError("heightmap: bad dims line");
    } else {
      try {
        values.push_back(std::stod(first));
      } catch (const std::exception&) {
        throw ParseError("heightmap: unexpected token '" + first + "'");
      }
      double h;
      while (row >> h) values.push_back(h);
      if (!row.eof()) throw ParseError("heightmap: malformed height row");
    }
  }
  (void)have_origin;  // origin defaults to (0,0)
  if (hm.cell_size <= 0.0) throw ParseError("heightmap: missing or non-positive cell_size");
  if (hm.nx < 2 || hm.ny < 2) throw ParseError("heightmap: dims must be at least 2 x 2");
  if (values.size() != static_cast<size_t>(hm.nx) * hm.ny)
    throw ParseError("heightmap: expected " + std::to_string(hm.nx * hm.ny) + " values, got " +
                     std::to_string(values.size()));
  hm.heights = std::move(values);
  return hm;
}

HeightmapGrid loadHeightmap(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open heightmap file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parseHeightmap(ss.str());
}

namespace {

/// Closest point on triangle (a,b,c) to p (Voronoi-region walk).
Vec3 closestPointOnTriangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0)
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

struct SurfaceSearcher {
  const HeightmapGrid& hm;

  Vec3 node(int i, int j) const {
    return Vec3(hm.origin_x + hm.cell_size * i, hm.origin_y + hm.cell_size * j, hm.at(i, j));
  }

  double cellDistanceSq(int i, int j, const Vec3& p) const {
    const Vec3 p00 = node(i, j), p10 = node(i + 1, j);
    const Vec3 p01 = node(i, j + 1), p11 = node(i + 1, j + 1);
    const double da = (p - closestPointOnTriangle(p, p00, p10, p11)).squaredNorm();
    const double db = (p - closestPointOnTriangle(p, p00, p11, p01)).squaredNorm();
    return std::min(da, db);
  }

  /// Exact unsigned distance to the triangulated surface via an expanding
  /// ring search over cells; rings are pruned with the horizontal bound
  /// (ring-1)*cell_size once a candidate distance is known.
  double unsignedDistance(const Vec3& p) const {
    const int ci = std::clamp(static_cast<int>(std::floor((p.x() - hm.origin_x) / hm.cell_size)), 0,
                              hm.nx - 2);
    const int cj = std::clamp(static_cast<int>(std::floor((p.y() - hm.origin_y) / hm.cell_size)), 0,
                              hm.ny - 2);
    const int max_ring = std::max(std::max(ci, hm.nx - 2 - ci), std::max(cj, hm.ny - 2 - cj));
    double best_sq = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= max_ring; ++r) {
      if (r > 0) {
        const double lower = (r - 1) * hm.cell_size;
        if (best_sq <= lower * lower) break;
      }
      const int i_lo = std::max(0, ci - r), i_hi = std::min(hm.nx - 2, ci + r);
      const int j_lo = std::max(0, cj - r), j_hi = std::min(hm.ny - 2, cj + r);
      for (int j = j_lo; j <= j_hi; ++j) {
        const bool j_edge = (j == cj - r || j == cj + r);
        for (int i = i_lo; i <= i_hi; ++i) {
          if (!j_edge && i != ci - r && i != ci + r) continue;
          best_sq = std::min(best_sq, cellDistanceSq(i, j, p));
        }
      }
    }
    return std::sqrt(best_sq);
  }
};

}  // namespace

EsdfMap buildEsdfFromHeightmap(const HeightmapGrid& hm, double voxel_size,
                               const HeightmapBuildOptions& options) {
  if (voxel_size <= 0.0) throw InvalidGridError("voxel size must be positive");
  if (hm.nx < 2 || hm.ny < 2 || hm.cell_size <= 0.0)
    throw InvalidGridError("heightmap must be at least 2 x 2 with positive cell size");
  if (hm.heights.size() != static_cast<size_t>(hm.nx) * hm.ny)
    throw InvalidGridError("heightmap data size does not match dims");
  for (const double h : hm.heights)
    if (!std::isfinite(h)) throw InvalidGridError("heightmap contains non-finite heights");
  const Vec3 lo(hm.origin_x, hm.origin_y, hm.minHeight() - options.z_below);
  const Vec3 hi(hm.origin_x + hm.cell_size * (hm.nx - 1), hm.origin_y + hm.cell_size * (hm.ny - 1),
                hm.maxHeight() + options.z_above);
  Eigen::Vector3i dims;
  // Slack as in EsdfMap::buildFromScene: exact-multiple extents must not gain
  // a spurious node row past the surface edge through floating-point rounding.
  for (int a = 0; a < 3; ++a)
    dims[a] = std::max(2, static_cast<int>(std::ceil((hi[a] - lo[a]) / voxel_size - 1e-9)) + 1);
  const size_t n =
      static_cast<size_t>(dims.x()) * static_cast<size_t>(dims.y()) * static_cast<size_t>(dims.z());
  std::vector<double> data(n);
  const SurfaceSearcher searcher{hm};
  const size_t slab = static_cast<size_t>(dims.x()) * static_cast<size_t>(dims.y());
  parallelFor(static_cast<size_t>(dims.z()), [&](size_t k) {
    const double z = lo.z() + voxel_size * static_cast<double>(k);
    size_t idx = slab * k;
    for (int j = 0; j < dims.y(); ++j) {
      const double y = lo.y() + voxel_size * j;
      for (int i = 0; i < dims.x(); ++i, ++idx) {
        const double x = lo.x() + voxel_size * i;
        const Vec3 p(x, y, z);
        const double d = searcher.unsignedDistance(p);
        data[idx] = (z >= hm.surfaceHeight(x, y)) ? d : -d;
      }
    }
  });
  return EsdfMap(dims, lo, voxel_size, std::move(data));
}

namespace {

/// 53-bit uniform in [0,1); written out explicitly so every platform draws
/// the same sequence from a given engine state.
double uniformDouble(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

HeightmapGrid randomHeightmap(uint32_t seed, const RandomTerrainParams& params) {
  if (params.nx < 2 || params.ny < 2 || params.cell_size <= 0.0)
    throw InvalidGridError("random terrain params must describe a valid grid");
  HeightmapGrid hm;
  hm.cell_size = params.cell_size;
  hm.nx = params.nx;
  hm.ny = params.ny;
  hm.heights.resize(static_cast<size_t>(params.nx) * params.ny);
  std::mt19937_64 rng(seed);
  for (double& h : hm.heights) h = params.amplitude * (2.0 * uniformDouble(rng) - 1.0);
  std::vector<double> tmp(hm.heights.size());
  for (int pass = 0; pass < params.smooth_iters; ++pass) {
    for (int j = 0; j < hm.ny; ++j) {
      for (int i = 0; i < hm.nx; ++i) {
        double sum = 0.0;
        int count = 0;
        for (int dj = -1; dj <= 1; ++dj) {
          for (int di = -1; di <= 1; ++di) {
            const int ii = i + di, jj = j + dj;
            if (ii < 0 || jj < 0 || ii >= hm.nx || jj >= hm.ny) continue;
            sum += hm.at(ii, jj);
            ++count;
          }
        }
        tmp[static_cast<size_t>(j) * hm.nx + i] = sum / count;
      }
    }
    hm.heights.swap(tmp);
  }
  // Slope limiting: relax neighbor pairs toward their mean until no grid
  // step exceeds the cap. Deterministic sweep order keeps the terrain a
  // pure function of the seed.
  if (params.max_slope_deg > 0.0) {
    const double limit = params.cell_size * std::tan(degToRad(params.max_slope_deg));
    for (int pass = 0; pass < 1000; ++pass) {
      bool changed = false;
      auto relax = [&](int i0, int j0, int i1, int j1) {
        double& a = hm.heights[static_cast<size_t>(j0) * hm.nx + i0];
        double& b = hm.heights[static_cast<size_t>(j1) * hm.nx + i1];
        const double excess = std::abs(a - b) - limit;
        if (excess <= 1e-12) return;
        const double shift = 0.5 * excess;
        if (a > b) {
          a -= shift;
          b += shift;
        } else {
          a += shift;
          b -= shift;
        }
        changed = true;
      };
      for (int j = 0; j < hm.ny; ++j)
        for (int i = 0; i < hm.nx; ++i) {
          if (i + 1 < hm.nx) relax(i, j, i + 1, j);
          if (j + 1 < hm.ny) relax(i, j, i, j + 1);
        }
      if (!changed) break;
    }
  }
  return hm;
}

}  // namespace settle
