#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "settle/esdf_map.hpp"
#include "settle/heightmap.hpp"
#include "settle/oracle.hpp"
#include "settle/robot_model.hpp"
#include "settle/settling.hpp"

namespace settle {

/// Position error (Euclidean, meters) and rotation error (geodesic angle,
/// radians) between two poses.
struct PoseErrors {
  double position = 0.0;
  double rotation = 0.0;
};
PoseErrors poseErrors(const Isometry3& a, const Isometry3& b);

/// Collapses a full pose to the planar query that should reproduce it:
/// (x, y, ZYX-yaw) plus a drop height at the vertical middle of the map.
/// Throws GimbalAmbiguityError when |pitch| >= 89 degrees, where yaw stops
/// being well defined.
QueryPose reduceToQuery(const Isometry3& pose, const EsdfMap& map);

const char* statusName(SettleStatus status);

struct ScenarioQuery {
  double x = 0.0, y = 0.0, yaw = 0.0;
  std::optional<JointConfig> joints;  // overrides the scenario default
};

struct RandomQuerySpec {
  int count = 0;
  uint32_t seed = 1;
  double margin = 0.5;   // keep-out border inside the map, meters
  double z_offset = 0.0; // added to the automatic z hint
};

struct Scenario {
  std::string name;
  std::string robot_path;
  std::string terrain_path;  // empty when terrain_random is used
  std::optional<RandomTerrainParams> terrain_random;
  uint32_t terrain_seed = 1;
  JointConfig joints;
  double voxel_size = 0.05;
  std::vector<ScenarioQuery> queries;
  std::optional<RandomQuerySpec> random_queries;
};

/// Loads a scenario description; relative robot/terrain paths are resolved
/// against the scenario file's directory. If the BENCH_SEED environment
/// variable is set it overrides every seed in the file.
Scenario loadScenario(const std::string& path);

/// Terrain file dispatch: ESDF cache (by magic), JSON scene (by leading '{')
/// or plain-text heightmap. voxel_size applies when the field is built here.
EsdfMap loadTerrainAuto(const std::string& path, double voxel_size);

struct BenchOptions {
  bool run_oracle = false;
  unsigned parallel = 0;  // worker threads; 0 = hardware concurrency
  SettlingParams settling;
  OracleParams oracle;
};

struct QueryRecord {
  int index = 0;
  QueryPose query;
  SettleStatus status = SettleStatus::NoConvergence;
  Isometry3 pose = Isometry3::Identity();
  double min_margin = 0.0;
  std::optional<PoseErrors> errors;  // vs the oracle, when it was run and found a pose
  double time_us = 0.0;
  std::vector<Vec3> contacts;
  std::vector<Vec3> hull;
};

struct BenchStats {
  int total = 0;
  int converged = 0, no_convergence = 0, out_of_map = 0, degenerate = 0;
  double mean_time_us = 0.0, max_time_us = 0.0;
  int compared = 0;  // records with oracle errors
  double mean_pos_err = 0.0, median_pos_err = 0.0, max_pos_err = 0.0;
  double mean_rot_err = 0.0, median_rot_err = 0.0, max_rot_err = 0.0;
};

struct BenchResult {
  std::vector<QueryRecord> records;
  BenchStats stats;
};

/// Expands the scenario's random queries (if any), settles every query and
/// optionally runs the oracle for comparison. Results are in query order and
/// independent of the worker count.
BenchResult runBenchmark(const EsdfMap& map, const RobotModel& robot, const Scenario& scenario,
                         const BenchOptions& options);

/// CSV with one row per query:
/// query_index,x,y,yaw,z_hint,status,pred_x,pred_y,pred_z,pred_qw,pred_qx,
/// pred_qy,pred_qz,pos_err_m,rot_err_rad,time_us
/// Error cells are empty when no oracle comparison exists.
void writeCsv(const BenchResult& result, const std::string& path);

/// Per-query contact points and support polygons as JSON lines, for plotting.
void writePlotData(const BenchResult& result, const std::string& path);

BenchStats computeStats(const std::vector<QueryRecord>& records);

}  // namespace settle
