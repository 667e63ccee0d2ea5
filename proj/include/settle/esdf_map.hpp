#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "settle/geometry.hpp"
#include "settle/terrain.hpp"

namespace settle {

/// Direction of steepest distance increase, i.e. the estimated surface normal
/// for points near terrain. Near the medial axis (equidistant from several
/// surfaces) the finite difference cancels and the result is flagged
/// degenerate instead of normalized.
struct SdfGradient {
  Vec3 vector = Vec3::UnitZ();
  bool degenerate = false;
};

/// Dense Euclidean signed distance field on a regular lattice.
/// Node (i,j,k) sits at origin + voxel_size * (i,j,k); queries between nodes
/// are answered by trilinear interpolation. Free space is positive, the
/// interior of obstacles/terrain negative.
class EsdfMap {
 public:
  EsdfMap(const Eigen::Vector3i& dims, const Vec3& origin, double voxel_size,
          std::vector<double> data);

  /// Samples an analytic terrain scene over its stated bounds.
  static EsdfMap buildFromScene(const TerrainScene& scene, double voxel_size);

  bool inBounds(const Vec3& p) const;
  /// Trilinear distance; throws OutOfBoundsError when !inBounds(p).
  double distance(const Vec3& p) const;
  std::optional<double> tryDistance(const Vec3& p) const;
  /// Central-difference gradient with step voxel_size/2; probes are clamped
  /// to the map so the result stays defined up to the border. The vector is
  /// unit length unless the raw difference norm falls below degenerate_tol.
  SdfGradient gradient(const Vec3& p, double degenerate_tol = 1e-6) const;
  /// Unnormalized central difference, the building block of gradient().
  Vec3 rawGradient(const Vec3& p) const;

  const Eigen::Vector3i& dims() const { return dims_; }
  const Vec3& origin() const { return origin_; }
  double voxelSize() const { return voxel_; }
  Vec3 minBound() const { return origin_; }
  Vec3 maxBound() const { return origin_ + voxel_ * (dims_.cast<double>() - Vec3::Ones()); }
  const std::vector<double>& data() const { return data_; }
  double nodeDistance(int i, int j, int k) const { return data_[index(i, j, k)]; }

 private:
  size_t index(int i, int j, int k) const {
    return static_cast<size_t>(i) + static_cast<size_t>(dims_.x()) *
                                        (static_cast<size_t>(j) +
                                         static_cast<size_t>(dims_.y()) * static_cast<size_t>(k));
  }

  Eigen::Vector3i dims_;
  Vec3 origin_;
  double voxel_;
  std::vector<double> data_;
};

/// Binary cache round-trip (magic "ESDF", version 1, little-endian doubles).
void saveEsdf(const EsdfMap& map, const std::string& path);
EsdfMap loadEsdf(const std::string& path);

}  // namespace settle
