#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "settle/esdf_map.hpp"
#include "settle/errors.hpp"
#include "settle/terrain.hpp"

using namespace settle;

namespace {

TerrainScene planeScene(double z = 0.0) {
  TerrainScene scene;
  scene.primitives.push_back(
      std::make_shared<PlanePrimitive>(Vec3(0.0, 0.0, z), Vec3(0.0, 0.0, 1.0)));
  scene.bounds = AlignedBox3(Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5));
  return scene;
}

double uniformIn(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

}  // namespace

TEST_CASE("plane scene stores node heights exactly") {
  const EsdfMap map = EsdfMap::buildFromScene(planeScene(), 0.05);
  const Eigen::Vector3i d = map.dims();
  CHECK(d.x() == 21);
  CHECK(d.z() == 21);
  for (int k = 0; k < d.z(); ++k) {
    const double z = map.origin().z() + 0.05 * k;
    for (int j = 0; j < d.y(); j += 5)
      for (int i = 0; i < d.x(); i += 5) CHECK(map.nodeDistance(i, j, k) == z);
  }
}

TEST_CASE("trilinear query on the plane map reproduces the height") {
  const EsdfMap map = EsdfMap::buildFromScene(planeScene(), 0.05);
  CHECK(map.distance(Vec3(0.2, 0.3, 0.42)) == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(map.distance(Vec3(-0.13, 0.07, -0.31)) == doctest::Approx(-0.31).epsilon(1e-12));
  // Interpolation at a node center returns the stored value exactly.
  CHECK(map.distance(map.origin()) == map.nodeDistance(0, 0, 0));
  CHECK(map.distance(Vec3(0.0, 0.0, 0.0)) == map.nodeDistance(10, 10, 10));
}

TEST_CASE("solid box interior center reads minus half extent") {
  TerrainScene scene;
  scene.primitives.push_back(
      std::make_shared<BoxPrimitive>(Vec3::Zero(), Vec3(1.0, 1.0, 1.0)));
  scene.bounds = AlignedBox3(Vec3(-1.0, -1.0, -1.0), Vec3(1.0, 1.0, 1.0));
  const EsdfMap map = EsdfMap::buildFromScene(scene, 0.05);
  CHECK(map.distance(Vec3::Zero()) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("sampled sphere field agrees with the analytic distance") {
  // Lattice filled directly from the analytic sphere SDF, radius 1.
  const double voxel = 0.05;
  const Eigen::Vector3i dims(65, 65, 65);
  const Vec3 origin(-1.6, -1.6, -1.6);
  std::vector<double> data(static_cast<size_t>(dims.x()) * dims.y() * dims.z());
  size_t idx = 0;
  for (int k = 0; k < dims.z(); ++k)
    for (int j = 0; j < dims.y(); ++j)
      for (int i = 0; i < dims.x(); ++i, ++idx)
        data[idx] = (origin + voxel * Vec3(i, j, k)).norm() - 1.0;
  const EsdfMap map(dims, origin, voxel, std::move(data));

  CHECK(std::abs(map.distance(Vec3(0.0, 0.0, 1.3)) - 0.3) < 1e-3);

  const SdfGradient g = map.gradient(Vec3(0.0, 0.0, 1.3));
  CHECK_FALSE(g.degenerate);
  CHECK(g.vector.dot(Vec3::UnitZ()) > 0.9999);

  // Radial direction at an off-axis probe.
  const Vec3 p(0.6, -0.4, 0.9);
  const SdfGradient gp = map.gradient(p);
  CHECK_FALSE(gp.degenerate);
  CHECK(gp.vector.dot(p.normalized()) > 0.999);
}

TEST_CASE("plane gradient is the plane normal to 1e-6") {
  const EsdfMap map = EsdfMap::buildFromScene(planeScene(), 0.05);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const Vec3 p(uniformIn(rng, -0.4, 0.4), uniformIn(rng, -0.4, 0.4), uniformIn(rng, -0.4, 0.4));
    const SdfGradient g = map.gradient(p);
    CHECK_FALSE(g.degenerate);
    CHECK((g.vector - Vec3::UnitZ()).norm() < 1e-6);
  }
}

TEST_CASE("midpoint between two parallel walls has a degenerate gradient") {
  TerrainScene scene;
  scene.primitives.push_back(
      std::make_shared<BoxPrimitive>(Vec3(-0.5, 0.0, 0.0), Vec3(0.4, 2.0, 2.0)));
  scene.primitives.push_back(
      std::make_shared<BoxPrimitive>(Vec3(0.5, 0.0, 0.0), Vec3(0.4, 2.0, 2.0)));
  scene.bounds = AlignedBox3(Vec3(-1.0, -1.0, -1.0), Vec3(1.0, 1.0, 1.0));
  const EsdfMap map = EsdfMap::buildFromScene(scene, 0.05);
  const SdfGradient g = map.gradient(Vec3(0.0, 0.0, 0.0));
  CHECK(g.degenerate);
  // Off the medial axis the gradient points away from the nearer wall.
  const SdfGradient off = map.gradient(Vec3(0.1, 0.0, 0.0));
  CHECK_FALSE(off.degenerate);
  CHECK(off.vector.dot(-Vec3::UnitX()) > 0.999);
}

TEST_CASE("scene build equals the pointwise minimum over primitives") {
  const BoxPrimitive a(Vec3(-0.2, 0.0, 0.0), Vec3(1.0, 1.0, 0.6));
  const BoxPrimitive b(Vec3(0.3, 0.1, 0.1), Vec3(0.8, 1.2, 0.7));
  TerrainScene scene;
  scene.primitives.push_back(std::make_shared<BoxPrimitive>(a));
  scene.primitives.push_back(std::make_shared<BoxPrimitive>(b));
  scene.bounds = AlignedBox3(Vec3(-1.0, -1.0, -1.0), Vec3(1.0, 1.0, 1.0));
  const EsdfMap map = EsdfMap::buildFromScene(scene, 0.1);
  const Eigen::Vector3i d = map.dims();
  for (int k = 0; k < d.z(); ++k)
    for (int j = 0; j < d.y(); ++j)
      for (int i = 0; i < d.x(); ++i) {
        const Vec3 p = map.origin() + 0.1 * Vec3(i, j, k);
        CHECK(map.nodeDistance(i, j, k) == std::min(a.distance(p), b.distance(p)));
      }
}

TEST_CASE("sampled field is 1-Lipschitz") {
  TerrainScene scene = planeScene();
  scene.primitives.push_back(
      std::make_shared<BoxPrimitive>(Vec3(0.1, 0.0, 0.1), Vec3(0.3, 0.3, 0.2)));
  const EsdfMap map = EsdfMap::buildFromScene(scene, 0.05);
  std::mt19937_64 rng(11);
  for (int t = 0; t < 1000; ++t) {
    Vec3 u, v;
    for (int a = 0; a < 3; ++a) {
      u[a] = uniformIn(rng, -0.5, 0.5);
      v[a] = uniformIn(rng, -0.5, 0.5);
    }
    CHECK(std::abs(map.distance(u) - map.distance(v)) <= (u - v).norm() + 1e-9);
  }
}

TEST_CASE("sign convention: interior negative, clear free space positive") {
  TerrainScene scene = planeScene();
  scene.primitives.push_back(
      std::make_shared<BoxPrimitive>(Vec3(0.1, 0.0, 0.1), Vec3(0.3, 0.3, 0.2)));
  const EsdfMap map = EsdfMap::buildFromScene(scene, 0.05);
  std::mt19937_64 rng(12);
  int checked_in = 0, checked_out = 0;
  for (int t = 0; t < 2000; ++t) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = uniformIn(rng, -0.45, 0.45);
    const double analytic = scene.distance(p);
    if (analytic < -1e-9) {
      CHECK(map.distance(p) < 0.0);
      ++checked_in;
    } else if (analytic > 0.05) {  // at least one voxel outside everything
      CHECK(map.distance(p) > 0.0);
      ++checked_out;
    }
  }
  CHECK(checked_in > 50);
  CHECK(checked_out > 50);
}

TEST_CASE("zero level set of the flat plane is sub-voxel accurate") {
  const EsdfMap map = EsdfMap::buildFromScene(planeScene(), 0.05);
  std::mt19937_64 rng(13);
  for (int t = 0; t < 25; ++t) {
    const double x = uniformIn(rng, -0.4, 0.4), y = uniformIn(rng, -0.4, 0.4);
    double lo = -0.4, hi = 0.4;  // d(lo) < 0 < d(hi)
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (map.distance(Vec3(x, y, mid)) < 0.0 ? lo : hi) = mid;
    }
    CHECK(std::abs(0.5 * (lo + hi)) < 0.01);
  }
}

TEST_CASE("bounds checking and tryDistance") {
  const EsdfMap map = EsdfMap::buildFromScene(planeScene(), 0.05);
  CHECK(map.inBounds(Vec3(0.5, 0.5, 0.5)));
  CHECK_FALSE(map.inBounds(Vec3(0.51, 0.0, 0.0)));
  CHECK_THROWS_AS(map.distance(Vec3(0.0, 0.0, 0.6)), OutOfBoundsError);
  CHECK_THROWS_AS(map.gradient(Vec3(0.0, -0.6, 0.0)), OutOfBoundsError);
  CHECK_FALSE(map.tryDistance(Vec3(2.0, 0.0, 0.0)).has_value());
  CHECK(map.tryDistance(Vec3(0.1, 0.1, 0.1)).has_value());
}

TEST_CASE("constructor and build validation") {
  CHECK_THROWS_AS(EsdfMap(Eigen::Vector3i(1, 4, 4), Vec3::Zero(), 0.05, std::vector<double>(16)),
                  InvalidGridError);
  CHECK_THROWS_AS(EsdfMap(Eigen::Vector3i(2, 2, 2), Vec3::Zero(), 0.05, std::vector<double>(7)),
                  InvalidGridError);
  CHECK_THROWS_AS(EsdfMap(Eigen::Vector3i(2, 2, 2), Vec3::Zero(), 0.0, std::vector<double>(8)),
                  InvalidGridError);
  TerrainScene empty;
  empty.bounds = AlignedBox3(Vec3::Zero(), Vec3::Ones());
  CHECK_THROWS_AS(EsdfMap::buildFromScene(empty, 0.05), InvalidSceneError);
  TerrainScene huge = planeScene();
  CHECK_THROWS_AS(EsdfMap::buildFromScene(huge, 1e-4), ExcessiveGridError);
}

TEST_CASE("cache round-trip preserves the map bit for bit") {
  const EsdfMap map = EsdfMap::buildFromScene(planeScene(), 0.05);
  const std::string path =
      (std::filesystem::temp_directory_path() / "settle_test_cache.esdf").string();
  saveEsdf(map, path);
  const EsdfMap back = loadEsdf(path);
  CHECK(back.dims() == map.dims());
  CHECK(back.origin() == map.origin());
  CHECK(back.voxelSize() == map.voxelSize());
  CHECK(back.data() == map.data());
  std::filesystem::remove(path);
}

TEST_CASE("loading a non-cache file is a parse error") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "settle_test_garbage.esdf").string();
  std::ofstream(path) << "definitely not a map";
  CHECK_THROWS_AS(loadEsdf(path), ParseError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(loadEsdf("/nonexistent/path/map.esdf"), ParseError);
}
