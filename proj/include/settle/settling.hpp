#pragma once

#include <optional>
#include <vector>

#include "settle/esdf_map.hpp"
#include "settle/geometry.hpp"
#include "settle/robot_model.hpp"
#include "settle/stability.hpp"

namespace settle {

/// Planar query: where on the map (and with what heading) to settle.
struct QueryPose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double z_hint = 0.0;  // starting height for the drop
};

enum class SettleStatus { Converged, NoConvergence, OutOfMap, Degenerate };

/// How the per-candidate target point for the rotation stage is chosen:
/// straight down in the rotation frame, or along the distance gradient.
enum class RotationCenterMode { StraightDown, AlongGradient };

struct SettlingParams {
  double contact_eps = 0.01;       // candidates closer than this support the robot
  double fall_decay = 0.9;         // step shrink factor after an overshoot
  int max_fall_iters = 100;
  int max_rot_iters_per_axis = 50;
  int max_rotation_stages = 25;
  double axis_exclusion_tol = 1e-4;    // candidates this close to the axis plane stay put
  double contact_dedup_radius = 0.01;  // merge radius for the contact set
  RotationCenterMode rotation_center = RotationCenterMode::StraightDown;
  bool record_poses = false;  // keep per-step pose snapshots in the trace
};

/// Penetration beyond this is treated as a constraint violation; values in
/// (-kPenetrationSlack, 0) count as numerically-clean surface contact.
constexpr double kPenetrationSlack = 1e-6;

struct SettlingTrace {
  int fall_iterations = 0;
  int rotation_stages = 0;
  int rotation_iterations = 0;  // summed over stages
  std::vector<Isometry3> poses;
};

struct PredictionResult {
  SettleStatus status = SettleStatus::NoConvergence;
  Isometry3 pose = Isometry3::Identity();  // world-from-robot-frame-C
  double min_margin = 0.0;
  std::vector<Vec3> contacts;  // world positions
  std::vector<Vec3> hull;      // support polygon of the final pose
  SettlingTrace trace;
};

/// A directed tip-over axis in world coordinates.
struct RotationAxis {
  Vec3 anchor = Vec3::Zero();
  Vec3 dir = Vec3::UnitX();  // unit
};

/// Settles the sampled robot at the query until it rests stably on the
/// terrain: a falling stage drops it into contact, then rotation stages tip
/// it about its least-stable support axis until every tip-over margin is
/// positive.
PredictionResult predictPose(const EsdfMap& map, const RobotState& robot, const QueryPose& query,
                             const SettlingParams& params = {});

/// Tip-over axis for the current contact set: one contact pivots about the
/// horizontal direction perpendicular to the CoM offset; two contacts (or a
/// collinear set) use their connecting line; three or more use the
/// least-stable support-polygon edge.
RotationAxis computeRotationAxis(const std::vector<Vec3>& contacts, const Vec3& com_world);

/// Rotation angle that carries a candidate at `p` (rotation-frame
/// coordinates, x along the axis) onto its target: the point reached by
/// moving the distance d against the outward gradient `g` (AlongGradient) or
/// straight down in the rotation frame (StraightDown, `g` ignored). Positive
/// angles tip the +y side of the frame downward; penetrating candidates
/// (d < 0) produce negative angles. Throws NumericalDomainError if the
/// triangle inequality is violated beyond 1e-6. Returns nullopt when the
/// start or target radius vanishes (the candidate sits on or directly above
/// the axis and cannot constrain the rotation).
std::optional<double> rotationAngle(const Vec3& p, double d, RotationCenterMode mode,
                                    const Vec3& g = Vec3::UnitZ());

namespace detail {

/// Falling stage: translates the pose along world z until some candidate is
/// within contact_eps of the surface and none penetrates. Returns the status
/// (Converged = contact achieved; OutOfMap / NoConvergence otherwise).
SettleStatus fallingStage(const EsdfMap& map, const std::vector<Vec3>& candidates_c,
                          Isometry3& pose, const SettlingParams& params, SettlingTrace& trace);

/// One rotation stage about `axis`; rotates until the non-excluded candidate
/// subset reaches contact without penetration.
SettleStatus rotationStage(const EsdfMap& map, const std::vector<Vec3>& candidates_c,
                           Isometry3& pose, const RotationAxis& axis, const Vec3& com_world,
                           const SettlingParams& params, SettlingTrace& trace);

}  // namespace detail

}  // namespace settle
