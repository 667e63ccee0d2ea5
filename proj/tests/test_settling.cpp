#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "settle/errors.hpp"
#include "settle/esdf_map.hpp"
#include "settle/geometry.hpp"
#include "settle/robot_model.hpp"
#include "settle/settling.hpp"
#include "settle/terrain.hpp"

using namespace settle;

namespace {

const std::string kDataDir = SETTLE_DATA_DIR;

EsdfMap planeMap() {
  TerrainScene scene;
  scene.primitives.push_back(std::make_shared<PlanePrimitive>(Vec3::Zero(), Vec3::UnitZ()));
  scene.bounds = AlignedBox3(Vec3(-2.0, -2.0, -0.3), Vec3(2.0, 2.0, 1.5));
  return EsdfMap::buildFromScene(scene, 0.05);
}

RobotModel boxRobot() { return RobotModel::load(kDataDir + "/robots/box.json"); }

}  // namespace

TEST_CASE("zero distance needs zero rotation, penetration rotates backward") {
  CHECK(*rotationAngle(Vec3(0.0, 0.5, 0.3), 0.0, RotationCenterMode::StraightDown) == 0.0);
  const auto back = rotationAngle(Vec3(0.0, 0.5, -0.01), -0.01, RotationCenterMode::StraightDown);
  REQUIRE(back.has_value());
  CHECK(*back < 0.0);
}

TEST_CASE("rotation angle reproduces an exact 30 degree construction") {
  // Start at radius 1, target at radius cos(30): the included angle is 30.
  const auto a =
      rotationAngle(Vec3(0.0, std::sqrt(3.0) / 2.0, 0.5), 0.5, RotationCenterMode::StraightDown);
  REQUIRE(a.has_value());
  CHECK(*a == doctest::Approx(kPi / 6.0).epsilon(1e-12));
}

TEST_CASE("candidates on or above the axis cannot constrain the rotation") {
  CHECK(!rotationAngle(Vec3(0.3, 0.0, 0.0), 0.2, RotationCenterMode::StraightDown).has_value());
  // Target collapses onto the axis.
  CHECK(!rotationAngle(Vec3(0.0, 0.0, 0.5), 0.5, RotationCenterMode::StraightDown).has_value());
}

TEST_CASE("gradient mode with a vertical gradient matches straight-down") {
  const std::vector<Vec3> probes{{0.0, 0.4, 0.2}, {0.1, -0.3, 0.5}, {0.0, 0.7, -0.1}};
  for (const Vec3& p : probes) {
    for (const double d : {0.15, 0.0, -0.004}) {
      const auto down = rotationAngle(p, d, RotationCenterMode::StraightDown);
      const auto grad = rotationAngle(p, d, RotationCenterMode::AlongGradient, Vec3::UnitZ());
      REQUIRE(down.has_value() == grad.has_value());
      if (down) CHECK(*down == *grad);
    }
  }
  // A radial gradient moves the target along the spoke: no rotation needed.
  const auto radial =
      rotationAngle(Vec3(0.0, 0.6, 0.8), 0.2, RotationCenterMode::AlongGradient, Vec3(0.0, 0.6, 0.8));
  REQUIRE(radial.has_value());
  CHECK(*radial == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("single-contact axis is horizontal and perpendicular to the CoM offset") {
  const RotationAxis axis = computeRotationAxis({{1.0, 0.0, 0.0}}, Vec3(0.0, 0.0, 1.0));
  CHECK((axis.anchor == Vec3(1.0, 0.0, 0.0)));
  CHECK((axis.dir - Vec3(0.0, -1.0, 0.0)).norm() < 1e-12);
}

TEST_CASE("two contacts tip about their connecting line") {
  const RotationAxis axis =
      computeRotationAxis({{-0.3, 0.0, 0.0}, {0.4, 0.0, 0.0}}, Vec3(0.0, 0.1, 0.5));
  CHECK(axis.dir.cross(Vec3::UnitX()).norm() < 1e-12);
  const bool anchored = (axis.anchor == Vec3(-0.3, 0.0, 0.0)) || (axis.anchor == Vec3(0.4, 0.0, 0.0));
  CHECK(anchored);
}

TEST_CASE("degenerate axis requests throw") {
  CHECK_THROWS_AS(computeRotationAxis({}, Vec3(0, 0, 1)), DegenerateAxisError);
  CHECK_THROWS_AS(computeRotationAxis({{0.2, 0.3, 0.0}}, Vec3(0.2, 0.3, 0.7)),
                  DegenerateAxisError);
}

TEST_CASE("falling stage drops a meter into clean contact") {
  const EsdfMap map = planeMap();
  const RobotState robot = boxRobot().shape();
  Isometry3 pose = Isometry3::Identity();
  pose.translation() = Vec3(0.0, 0.0, 1.1);
  SettlingParams params;
  SettlingTrace trace;
  const SettleStatus status = detail::fallingStage(map, robot.candidates, pose, params, trace);
  CHECK(status == SettleStatus::Converged);
  CHECK(pose.translation().z() == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(trace.fall_iterations >= 1);
  for (const Vec3& c : robot.candidates) {
    const double d = map.distance(pose * c);
    CHECK(d >= -kPenetrationSlack);
  }
}

TEST_CASE("falling stage lifts a robot that starts underground") {
  const EsdfMap map = planeMap();
  const RobotState robot = boxRobot().shape();
  Isometry3 pose = Isometry3::Identity();
  pose.translation() = Vec3(0.0, 0.0, 0.02);  // bottom 8 cm below the floor
  SettlingParams params;
  SettlingTrace trace;
  CHECK(detail::fallingStage(map, robot.candidates, pose, params, trace) ==
        SettleStatus::Converged);
  CHECK(pose.translation().z() > 0.02);
  CHECK(pose.translation().z() == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("an already-valid start is accepted without any step") {
  const EsdfMap map = planeMap();
  const RobotState robot = boxRobot().shape();
  Isometry3 pose = Isometry3::Identity();
  pose.translation() = Vec3(0.0, 0.0, 0.105);
  const Isometry3 entry = pose;
  SettlingParams params;
  SettlingTrace trace;
  CHECK(detail::fallingStage(map, robot.candidates, pose, params, trace) ==
        SettleStatus::Converged);
  CHECK(trace.fall_iterations == 0);
  CHECK((pose.matrix() == entry.matrix()));
}

TEST_CASE("overshooting steps shrink until the surface is met") {
  // A synthetic two-times-too-steep field makes every full step overshoot, so
  // the trust region has to decay before the stage can finish.
  const int nx = 5, ny = 5, nz = 4;
  std::vector<double> data(static_cast<size_t>(nx) * ny * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        data[i + nx * (j + static_cast<size_t>(ny) * k)] = 2.0 * (0.5 * k - 0.75);
  const EsdfMap map(Eigen::Vector3i(nx, ny, nz), Vec3(-1.0, -1.0, 0.0), 0.5, std::move(data));

  const std::vector<Vec3> single{Vec3::Zero()};
  Isometry3 pose = Isometry3::Identity();
  pose.translation() = Vec3(0.0, 0.0, 1.25);
  SettlingParams params;
  SettlingTrace trace;
  CHECK(detail::fallingStage(map, single, pose, params, trace) == SettleStatus::Converged);
  const double final_d = map.distance(pose.translation());
  CHECK(final_d >= -kPenetrationSlack);
  CHECK(final_d < params.contact_eps);
  CHECK(trace.fall_iterations > 5);  // includes the rejected, decayed attempts
}

TEST_CASE("falling stage reports out-of-map starts") {
  const EsdfMap map = planeMap();
  const RobotState robot = boxRobot().shape();
  Isometry3 pose = Isometry3::Identity();
  pose.translation() = Vec3(10.0, 0.0, 1.0);
  SettlingParams params;
  SettlingTrace trace;
  CHECK(detail::fallingStage(map, robot.candidates, pose, params, trace) == SettleStatus::OutOfMap);
}

TEST_CASE("rotation stage accepts an already-settled subset untouched") {
  const EsdfMap map = planeMap();
  const RobotState robot = boxRobot().shape();
  Isometry3 pose = Isometry3::Identity();
  pose.translation() = Vec3(0.0, 0.0, 0.1);  // flat on the floor
  const Isometry3 entry = pose;
  const RotationAxis axis{Vec3(0.0, -0.15, 0.0), Vec3::UnitX()};
  SettlingParams params;
  SettlingTrace trace;
  CHECK(detail::rotationStage(map, robot.candidates, pose, axis, pose * robot.com, params,
                              trace) == SettleStatus::Converged);
  CHECK(trace.rotation_iterations == 0);
  CHECK((pose.matrix() == entry.matrix()));
}

TEST_CASE("a tilted box rotates flat about its resting edge") {
  const EsdfMap map = planeMap();
  const RobotState robot = boxRobot().shape();
  const double theta = degToRad(15.0);

  // Roll the box so its -y bottom edge touches the floor exactly.
  Isometry3 pose = Isometry3::Identity();
  pose.linear() = Eigen::AngleAxisd(theta, Vec3::UnitX()).toRotationMatrix();
  pose.translation() = Vec3(0.0, 0.0, 0.15 * std::sin(theta) + 0.1 * std::cos(theta));
  const RotationAxis axis{Vec3(0.0, -0.15 * std::cos(theta) + 0.1 * std::sin(theta), 0.0),
                          Vec3::UnitX()};

  // The body point resting on the axis at entry.
  int pivot = -1;
  for (size_t i = 0; i < robot.candidates.size(); ++i)
    if ((robot.candidates[i] - Vec3(0.0, -0.15, -0.1)).norm() < 1e-12) pivot = static_cast<int>(i);
  REQUIRE(pivot >= 0);
  const Vec3 pivot_before = pose * robot.candidates[pivot];

  SettlingParams params;
  SettlingTrace trace;
  const Vec3 com_world = pose * robot.com;
  CHECK(detail::rotationStage(map, robot.candidates, pose, axis, com_world, params, trace) ==
        SettleStatus::Converged);

  // All bottom candidates are coplanar with the axis, so the first accepted
  // step already lands the box flat.
  const Vec3 rpy = matrixToRpy(pose.linear());
  CHECK(std::abs(rpy.x()) < 1e-9);
  CHECK(std::abs(rpy.y()) < 1e-9);
  CHECK(trace.rotation_iterations >= 1);
  CHECK(trace.rotation_iterations <= 3);

  // The pivot stays put: the axis is a fixed line of the stage.
  const Vec3 pivot_after = pose * robot.candidates[pivot];
  CHECK((pivot_after - pivot_before).norm() < 1e-9);
}

TEST_CASE("a box over flat ground settles level and stable") {
  const EsdfMap map = planeMap();
  const RobotState robot = boxRobot().shape();
  const QueryPose query{0.3, -0.2, 0.7, 0.8};
  const PredictionResult result = predictPose(map, robot, query);

  REQUIRE(result.status == SettleStatus::Converged);
  const Vec3 rpy = matrixToRpy(result.pose.linear());
  CHECK(std::abs(rpy.x()) < 1e-9);
  CHECK(std::abs(rpy.y()) < 1e-9);
  CHECK(rpy.z() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(result.pose.translation().x() == 0.3);
  CHECK(result.pose.translation().y() == -0.2);
  CHECK(result.pose.translation().z() == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(result.min_margin > 0.0);
  CHECK(result.hull.size() == 4);
  CHECK(result.contacts.size() == 63);  // 5 cm sampling vs 1 cm merge radius
  CHECK(result.trace.rotation_stages == 0);
}

TEST_CASE("prediction is deterministic") {
  const EsdfMap map = planeMap();
  const RobotState robot = boxRobot().shape();
  const QueryPose query{0.1, 0.4, -1.2, 0.9};
  const PredictionResult a = predictPose(map, robot, query);
  const PredictionResult b = predictPose(map, robot, query);
  CHECK((a.pose.matrix() == b.pose.matrix()));
  CHECK(a.min_margin == b.min_margin);
}

TEST_CASE("a box on the ramp face takes the ramp pitch") {
  const TerrainScene scene = loadTerrainScene(kDataDir + "/terrains/ramp16.json");
  const EsdfMap map = EsdfMap::buildFromScene(scene, 0.05);
  const RobotState robot = boxRobot().shape();

  // The gradient-target mode may accept a decayed rotation step once the
  // nearest free candidate reaches the contact band, so its residual tilt is
  // a little larger than the straight-down default.
  for (const RotationCenterMode mode :
       {RotationCenterMode::StraightDown, RotationCenterMode::AlongGradient}) {
    SettlingParams params;
    params.rotation_center = mode;
    const PredictionResult result = predictPose(map, robot, {1.0, 0.0, 0.0, 1.2}, params);
    REQUIRE(result.status == SettleStatus::Converged);
    const double pitch_tol =
        mode == RotationCenterMode::StraightDown ? degToRad(1.0) : degToRad(2.5);
    const Vec3 rpy = matrixToRpy(result.pose.linear());
    CHECK(std::abs(rpy.x()) < degToRad(1.0));
    CHECK(std::abs(rpy.y() + degToRad(16.0)) < pitch_tol);  // nose up the slope
    CHECK(result.min_margin > 0.0);
  }
}

TEST_CASE("a single-point robot balances marginally") {
  const EsdfMap map = planeMap();
  const RobotModel robot = RobotModel::parse(R"({
    "links": [{"name": "dot", "mass": 1, "shapes": [{"type": "point", "p": [0, 0, -0.1]}]}]
  })");
  const PredictionResult result = predictPose(map, robot.shape(), {0.3, -0.2, 0.0, 1.0});
  CHECK(result.status == SettleStatus::Converged);
  CHECK(result.min_margin == 0.0);
  CHECK(result.pose.translation().z() == doctest::Approx(0.1).epsilon(1e-4));
}

TEST_CASE("queries beyond the map edge report out-of-map") {
  const EsdfMap map = planeMap();
  const RobotState robot = boxRobot().shape();
  const PredictionResult result = predictPose(map, robot, {10.0, 0.0, 0.0, 1.0});
  CHECK(result.status == SettleStatus::OutOfMap);
}

TEST_CASE("pose snapshots are recorded when requested") {
  const EsdfMap map = planeMap();
  const RobotState robot = boxRobot().shape();
  SettlingParams params;
  params.record_poses = true;
  const PredictionResult result = predictPose(map, robot, {0.0, 0.0, 0.0, 1.0}, params);
  CHECK(result.status == SettleStatus::Converged);
  CHECK(!result.trace.poses.empty());
}
