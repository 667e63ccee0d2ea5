#pragma once

#include "settle/esdf_map.hpp"
#include "settle/geometry.hpp"
#include "settle/robot_model.hpp"
#include "settle/settling.hpp"

namespace settle {

/// Exhaustive-search reference settler. For every (roll, pitch) pair on a
/// regular grid it finds the lowest height at the query's (x, y, yaw) where
/// the robot touches the terrain without penetrating and rests stably, then
/// returns the pose with the lowest center of mass over all pairs.
///
/// The height search is a binary search over a z lattice, which is exact for
/// terrain whose free space is monotone in z (no overhangs) - true for
/// heightmaps and the scene primitives used here when stacked terrain keeps
/// open space above solid.
struct OracleParams {
  double roll_range = degToRad(30.0);   // sweep is [-range, +range]
  double pitch_range = degToRad(30.0);
  double angle_step = degToRad(0.25);
  double z_step = 0.005;  // keep <= contact_eps/2 so touching poses register contact
  double contact_eps = 0.01;
  double contact_dedup_radius = 0.01;
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct OracleResult {
  bool found = false;
  Isometry3 pose = Isometry3::Identity();  // world-from-robot-frame-C
  double com_height = 0.0;
  double roll = 0.0, pitch = 0.0, z = 0.0;
  double min_margin = 0.0;
};

OracleResult settleBruteforce(const EsdfMap& map, const RobotState& robot, const QueryPose& query,
                              const OracleParams& params = {});

}  // namespace settle
