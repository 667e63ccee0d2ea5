#pragma once

#include <memory>
#include <string>
#include <vector>

#include "settle/geometry.hpp"

namespace settle {

/// Exact signed distance of a point to a closed 2D polygon (negative inside).
/// Winding-independent; vertices need not be ordered CCW.
double polygonSdf(const std::vector<Vec2>& vertices, const Vec2& p);

/// Analytic signed-distance primitive. Free space is positive, interior negative.
class SdfPrimitive {
 public:
  virtual ~SdfPrimitive() = default;
  virtual double distance(const Vec3& p) const = 0;
};

/// Solid half-space below the plane through `point` with outward normal `normal`.
class PlanePrimitive : public SdfPrimitive {
 public:
  PlanePrimitive(const Vec3& point, const Vec3& normal);
  double distance(const Vec3& p) const override;

 private:
  Vec3 point_;
  Vec3 normal_;  // unit
};

/// Box with given center, full size and yaw about world z.
class BoxPrimitive : public SdfPrimitive {
 public:
  BoxPrimitive(const Vec3& center, const Vec3& size, double yaw = 0.0);
  double distance(const Vec3& p) const override;

 private:
  Vec3 center_;
  Vec3 half_;
  double cos_yaw_, sin_yaw_;
};

/// Polygonal cross-section in the local x-z plane, extruded along local y.
/// Covers ramps, wedges and slant-topped blocks exactly.
class PrismPrimitive : public SdfPrimitive {
 public:
  PrismPrimitive(std::vector<Vec2> cross_section_xz, double length_y, const Vec3& translation,
                 double yaw = 0.0);
  double distance(const Vec3& p) const override;

 private:
  std::vector<Vec2> section_;
  double half_length_;
  Vec3 translation_;
  double cos_yaw_, sin_yaw_;
};

/// Union of primitives combined by pointwise minimum, plus the world-space
/// box the ESDF should be sampled over.
struct TerrainScene {
  std::vector<std::shared_ptr<const SdfPrimitive>> primitives;
  AlignedBox3 bounds;

  double distance(const Vec3& p) const;
};

/// Parses a terrain scene file (JSON: bounds + primitive list).
/// Throws ParseError / InvalidSceneError.
TerrainScene loadTerrainScene(const std::string& path);
TerrainScene parseTerrainScene(const std::string& json_text);

}  // namespace settle
