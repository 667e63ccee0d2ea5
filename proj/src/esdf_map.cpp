#include "settle/esdf_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "settle/errors.hpp"
#include "settle/parallel.hpp"

namespace settle {

namespace {
constexpr size_t kMaxNodes = 200'000'000;  // ~1.6 GB of doubles
constexpr char kMagic[4] = {'E', 'S', 'D', 'F'};
constexpr uint8_t kVersion = 1;
}  // namespace

EsdfMap::EsdfMap(const Eigen::Vector3i& dims, const Vec3& origin, double voxel_size,
                 std::vector<double> data)
    : dims_(dims), origin_(origin), voxel_(voxel_size), data_(std::move(data)) {
  if (voxel_ <= 0.0) throw InvalidGridError("voxel size must be positive");
  if (dims_.minCoeff() < 2) throw InvalidGridError("grid needs at least 2 nodes per axis");
  const size_t n =
      static_cast<size_t>(dims_.x()) * static_cast<size_t>(dims_.y()) * static_cast<size_t>(dims_.z());
  if (n > kMaxNodes) throw ExcessiveGridError("grid exceeds the node budget");
  if (data_.size() != n) throw InvalidGridError("grid data size does not match dims");
}

EsdfMap EsdfMap::buildFromScene(const TerrainScene& scene, double voxel_size) {
  if (voxel_size <= 0.0) throw InvalidGridError("voxel size must be positive");
  if (scene.primitives.empty()) throw InvalidSceneError("terrain scene has no primitives");
  const Vec3 extent = scene.bounds.max() - scene.bounds.min();
  Eigen::Vector3i dims;
  for (int a = 0; a < 3; ++a) {
    // The small slack keeps extents that are an exact multiple of the voxel
    // size from gaining a spurious node row through floating-point rounding.
    const double nodes = std::ceil(extent[a] / voxel_size - 1e-9) + 1.0;
    if (!(nodes < static_cast<double>(kMaxNodes)))
      throw ExcessiveGridError("requested grid exceeds the node budget");
    dims[a] = std::max(2, static_cast<int>(nodes));
  }
  const size_t n =
      static_cast<size_t>(dims.x()) * static_cast<size_t>(dims.y()) * static_cast<size_t>(dims.z());
  if (n > kMaxNodes) throw ExcessiveGridError("requested grid exceeds the node budget");
  const Vec3 origin = scene.bounds.min();
  std::vector<double> data(n);
  const size_t slab = static_cast<size_t>(dims.x()) * static_cast<size_t>(dims.y());
  parallelFor(static_cast<size_t>(dims.z()), [&](size_t k) {
    const double z = origin.z() + voxel_size * static_cast<double>(k);
    size_t idx = slab * k;
    for (int j = 0; j < dims.y(); ++j) {
      const double y = origin.y() + voxel_size * j;
      for (int i = 0; i < dims.x(); ++i, ++idx)
        data[idx] = scene.distance(Vec3(origin.x() + voxel_size * i, y, z));
    }
  });
  return EsdfMap(dims, origin, voxel_size, std::move(data));
}

bool EsdfMap::inBounds(const Vec3& p) const {
  const Vec3 hi = maxBound();
  for (int a = 0; a < 3; ++a)
    if (p[a] < origin_[a] || p[a] > hi[a]) return false;
  return true;
}

double EsdfMap::distance(const Vec3& p) const {
  if (!inBounds(p)) throw OutOfBoundsError("ESDF query outside the map");
  const Vec3 u = (p - origin_) / voxel_;
  Eigen::Vector3i cell;
  Vec3 f;
  for (int a = 0; a < 3; ++a) {
    cell[a] = std::clamp(static_cast<int>(std::floor(u[a])), 0, dims_[a] - 2);
    f[a] = std::clamp(u[a] - cell[a], 0.0, 1.0);
  }
  double accum = 0.0;
  for (int dk = 0; dk < 2; ++dk) {
    const double wz = dk ? f.z() : 1.0 - f.z();
    for (int dj = 0; dj < 2; ++dj) {
      const double wy = dj ? f.y() : 1.0 - f.y();
      for (int di = 0; di < 2; ++di) {
        const double wx = di ? f.x() : 1.0 - f.x();
        accum += wx * wy * wz * data_[index(cell.x() + di, cell.y() + dj, cell.z() + dk)];
      }
    }
  }
  return accum;
}

std::optional<double> EsdfMap::tryDistance(const Vec3& p) const {
  if (!inBounds(p)) return std::nullopt;
  return distance(p);
}

Vec3 EsdfMap::rawGradient(const Vec3& p) const {
  if (!inBounds(p)) throw OutOfBoundsError("ESDF gradient outside the map");
  const double h = 0.5 * voxel_;
  const Vec3 hi = maxBound();
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 lo_p = p, hi_p = p;
    lo_p[a] = std::max(origin_[a], p[a] - h);
    hi_p[a] = std::min(hi[a], p[a] + h);
    const double delta = hi_p[a] - lo_p[a];
    g[a] = delta > 0.0 ? (distance(hi_p) - distance(lo_p)) / delta : 0.0;
  }
  return g;
}

SdfGradient EsdfMap::gradient(const Vec3& p, double degenerate_tol) const {
  const Vec3 raw = rawGradient(p);
  const double norm = raw.norm();
  if (norm < degenerate_tol) return {Vec3::UnitZ(), true};
  return {raw / norm, false};
}

namespace {

template <typename T>
void writeRaw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void readRaw(std::ifstream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
}

}  // namespace

void saveEsdf(const EsdfMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open map cache for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  writeRaw(out, kVersion);
  for (int a = 0; a < 3; ++a) writeRaw(out, static_cast<int32_t>(map.dims()[a]));
  for (int a = 0; a < 3; ++a) writeRaw(out, map.origin()[a]);
  writeRaw(out, map.voxelSize());
  out.write(reinterpret_cast<const char*>(map.data().data()),
            static_cast<std::streamsize>(map.data().size() * sizeof(double)));
  if (!out) throw ParseError("failed writing map cache: " + path);
}

EsdfMap loadEsdf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open map cache: " + path);
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError("not an ESDF cache file: " + path);
  uint8_t version = 0;
  readRaw(in, version);
  if (version != kVersion) throw ParseError("unsupported ESDF cache version");
  Eigen::Vector3i dims;
  for (int a = 0; a < 3; ++a) {
    int32_t v = 0;
    readRaw(in, v);
    dims[a] = v;
  }
  Vec3 origin;
  for (int a = 0; a < 3; ++a) readRaw(in, origin[a]);
  double voxel = 0.0;
  readRaw(in, voxel);
  if (!in) throw ParseError("truncated ESDF cache header: " + path);
  if (dims.minCoeff() < 2 || voxel <= 0.0) throw InvalidGridError("corrupt ESDF cache header");
  const size_t n =
      static_cast<size_t>(dims.x()) * static_cast<size_t>(dims.y()) * static_cast<size_t>(dims.z());
  if (n > kMaxNodes) throw ExcessiveGridError("cached grid exceeds the node budget");
  std::vector<double> data(n);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw ParseError("truncated ESDF cache data: " + path);
  return EsdfMap(dims, origin, voxel, std::move(data));
}

}  // namespace settle
