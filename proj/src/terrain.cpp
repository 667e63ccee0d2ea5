#include "settle/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "settle/errors.hpp"

namespace settle {

using json = nlohmann::json;

double polygonSdf(const std::vector<Vec2>& v, const Vec2& p) {
  const size_t n = v.size();
  double d = (p - v[0]).squaredNorm();
  double s = 1.0;
  for (size_t i = 0, j = n - 1; i < n; j = i, ++i) {
    const Vec2 e = v[j] - v[i];
    const Vec2 w = p - v[i];
    const double t = std::clamp(w.dot(e) / e.squaredNorm(), 0.0, 1.0);
    const Vec2 b = w - e * t;
    d = std::min(d, b.squaredNorm());
    const bool c0 = p.y() >= v[i].y();
    const bool c1 = p.y() < v[j].y();
    const bool c2 = e.x() * w.y() > e.y() * w.x();
    if ((c0 && c1 && c2) || (!c0 && !c1 && !c2)) s = -s;
  }
  return s * std::sqrt(d);
}

PlanePrimitive::PlanePrimitive(const Vec3& point, const Vec3& normal)
    : point_(point), normal_(normal.normalized()) {
  if (normal.norm() < 1e-12) throw InvalidSceneError("plane normal must be nonzero");
}

double PlanePrimitive::distance(const Vec3& p) const { return normal_.dot(p - point_); }

BoxPrimitive::BoxPrimitive(const Vec3& center, const Vec3& size, double yaw)
    : center_(center), half_(0.5 * size), cos_yaw_(std::cos(yaw)), sin_yaw_(std::sin(yaw)) {
  if (size.minCoeff() <= 0.0) throw InvalidSceneError("box size must be positive");
}

double BoxPrimitive::distance(const Vec3& p) const {
  const Vec3 r = p - center_;
  // Rotate into the box frame (inverse yaw).
  const Vec3 q(cos_yaw_ * r.x() + sin_yaw_ * r.y(), -sin_yaw_ * r.x() + cos_yaw_ * r.y(), r.z());
  const Vec3 a = q.cwiseAbs() - half_;
  const Vec3 outside = a.cwiseMax(0.0);
  return outside.norm() + std::min(a.maxCoeff(), 0.0);
}

PrismPrimitive::PrismPrimitive(std::vector<Vec2> cross_section_xz, double length_y,
                               const Vec3& translation, double yaw)
    : section_(std::move(cross_section_xz)),
      half_length_(0.5 * length_y),
      translation_(translation),
      cos_yaw_(std::cos(yaw)),
      sin_yaw_(std::sin(yaw)) {
  if (section_.size() < 3) throw InvalidSceneError("prism cross-section needs >= 3 vertices");
  if (length_y <= 0.0) throw InvalidSceneError("prism length must be positive");
}

double PrismPrimitive::distance(const Vec3& p) const {
  const Vec3 r = p - translation_;
  const Vec3 q(cos_yaw_ * r.x() + sin_yaw_ * r.y(), -sin_yaw_ * r.x() + cos_yaw_ * r.y(), r.z());
  const double d_section = polygonSdf(section_, Vec2(q.x(), q.z()));
  const double d_len = std::abs(q.y()) - half_length_;
  const Vec2 w(std::max(d_section, 0.0), std::max(d_len, 0.0));
  return std::min(std::max(d_section, d_len), 0.0) + w.norm();
}

double TerrainScene::distance(const Vec3& p) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& prim : primitives) d = std::min(d, prim->distance(p));
  return d;
}

namespace {

Vec3 readVec3(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3)
    throw ParseError(std::string("expected 3-element array for '") + key + "'");
  return Vec3(j[key][0].get<double>(), j[key][1].get<double>(), j[key][2].get<double>());
}

void appendColumns(const json& j, std::vector<std::shared_ptr<const SdfPrimitive>>& out) {
  const Vec3 origin = readVec3(j, "origin");
  const double footprint = j.at("footprint").get<double>();
  const double pitch = j.at("pitch").get<double>();
  const int nx = j.at("counts")[0].get<int>();
  const int ny = j.at("counts")[1].get<int>();
  if (footprint <= 0.0 || pitch <= 0.0 || nx <= 0 || ny <= 0)
    throw InvalidSceneError("columns require positive footprint, pitch and counts");
  std::vector<double> heights;
  const json& h = j.at("heights");
  if (h.is_number()) {
    heights.assign(static_cast<size_t>(nx) * ny, h.get<double>());
  } else {
    heights = h.get<std::vector<double>>();
    if (heights.size() != static_cast<size_t>(nx) * ny)
      throw InvalidSceneError("columns heights must match counts[0]*counts[1]");
  }
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const double height = heights[static_cast<size_t>(iy) * nx + ix];
      if (height <= 0.0) continue;
      const Vec3 center = origin + Vec3(ix * pitch, iy * pitch, 0.5 * height);
      out.push_back(std::make_shared<BoxPrimitive>(center, Vec3(footprint, footprint, height)));
    }
  }
}

}  // namespace

TerrainScene parseTerrainScene(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("terrain scene: ") + e.what());
  }
  TerrainScene scene;
  if (!j.contains("bounds")) throw ParseError("terrain scene missing 'bounds'");
  const Vec3 lo = readVec3(j["bounds"], "min");
  const Vec3 hi = readVec3(j["bounds"], "max");
  if ((hi - lo).minCoeff() <= 0.0) throw InvalidSceneError("scene bounds must have positive extent");
  scene.bounds = AlignedBox3(lo, hi);

  if (!j.contains("primitives") || !j["primitives"].is_array() || j["primitives"].empty())
    throw ParseError("terrain scene missing non-empty 'primitives'");
  try {
    for (const json& prim : j["primitives"]) {
      const std::string type = prim.at("type").get<std::string>();
      if (type == "plane") {
        scene.primitives.push_back(
            std::make_shared<PlanePrimitive>(readVec3(prim, "point"), readVec3(prim, "normal")));
      } else if (type == "box") {
        scene.primitives.push_back(std::make_shared<BoxPrimitive>(
            readVec3(prim, "center"), readVec3(prim, "size"), prim.value("yaw", 0.0)));
      } else if (type == "prism") {
        std::vector<Vec2> section;
        for (const json& v : prim.at("cross_section"))
          section.emplace_back(v[0].get<double>(), v[1].get<double>());
        scene.primitives.push_back(
            std::make_shared<PrismPrimitive>(std::move(section), prim.at("length").get<double>(),
                                             readVec3(prim, "translation"), prim.value("yaw", 0.0)));
      } else if (type == "columns") {
        appendColumns(prim, scene.primitives);
      } else {
        throw InvalidSceneError("unknown primitive type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("terrain scene: ") + e.what());
  }
  if (scene.primitives.empty()) throw InvalidSceneError("terrain scene produced no primitives");
  return scene;
}

TerrainScene loadTerrainScene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open terrain scene file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parseTerrainScene(ss.str());
}

}  // namespace settle
