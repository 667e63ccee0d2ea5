#pragma once

#include <map>
#include <string>
#include <vector>

#include "settle/geometry.hpp"

namespace settle {

/// Joint values keyed by actuator name. Joints that share an actuator move
/// together (e.g. left/right flippers on a common drive). Missing entries
/// default to the joint's zero position.
using JointConfig = std::map<std::string, double>;

constexpr double kDefaultSampleSpacing = 0.03;  // m between candidate points

/// Contact-candidate geometry attached to a link, sampled in the link frame.
struct ContactShape {
  enum class Kind { BoxBottom, TrackOutline, CylinderBottom, Point };
  Kind kind = Kind::Point;
  double spacing = kDefaultSampleSpacing;

  // BoxBottom: rectangle in the link x-y plane at height center.z().
  Vec3 box_center = Vec3::Zero();
  double box_size_x = 0.0, box_size_y = 0.0;

  // TrackOutline: convex outline of two circles in the link x-z plane,
  // replicated at each y offset. Models tracks and tapered flippers.
  Vec2 wheel1 = Vec2::Zero(), wheel2 = Vec2::Zero();  // centers (x,z)
  double radius1 = 0.0, radius2 = 0.0;
  std::vector<double> y_offsets;

  // CylinderBottom: lowest generator line of a y-axis cylinder.
  Vec2 cyl_center = Vec2::Zero();  // (x,z)
  double cyl_radius = 0.0;
  double cyl_y_min = 0.0, cyl_y_max = 0.0;

  // Point: a single candidate.
  Vec3 point = Vec3::Zero();

  /// Appends candidate points in the link frame.
  void sample(std::vector<Vec3>& out) const;
};

struct Link {
  std::string name;
  double mass = 0.0;
  Vec3 com = Vec3::Zero();  // in the link frame
  std::vector<ContactShape> shapes;
  int parent_joint = -1;  // index into RobotModel joints, -1 for the root
};

struct Joint {
  enum class Type { Fixed, Revolute };
  std::string name;
  Type type = Type::Fixed;
  int parent_link = -1;
  int child_link = -1;
  Isometry3 origin = Isometry3::Identity();  // child frame at zero position
  Vec3 axis = Vec3::UnitY();                 // in the child frame, unit
  double limit_lower = 0.0, limit_upper = 0.0;
  bool has_limits = false;
  std::string actuator;  // defaults to the joint name
};

/// Sampled robot geometry for one joint configuration, expressed in the
/// robot frame C: axes of the chassis, origin at the reference-configuration
/// (all actuators zero) center of mass.
struct RobotState {
  std::vector<Vec3> candidates;
  std::vector<int> candidate_links;  // parallel to candidates
  Vec3 com = Vec3::Zero();
  double total_mass = 0.0;
};

class RobotModel {
 public:
  static RobotModel load(const std::string& path);
  static RobotModel parse(const std::string& json_text);

  /// Forward kinematics + candidate sampling for the given configuration.
  /// Throws JointOutOfLimitsError when a value violates declared limits.
  RobotState shape(const JointConfig& config = {}) const;

  /// Pose of a link relative to the robot frame C (for diagnostics/tests).
  Isometry3 linkPoseInC(const std::string& link_name, const JointConfig& config = {}) const;

  const std::string& name() const { return name_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<Joint>& joints() const { return joints_; }
  const Vec3& referenceComInRoot() const { return reference_com_; }

 private:
  void finalize();  // validates the tree, orders traversal, pins frame C
  std::vector<Isometry3> linkPosesInRoot(const JointConfig& config) const;
  double jointValue(const Joint& joint, const JointConfig& config) const;

  std::string name_;
  std::vector<Link> links_;
  std::vector<Joint> joints_;
  std::vector<int> traversal_;   // link indices, parents before children
  int root_link_ = -1;
  Vec3 reference_com_ = Vec3::Zero();  // in the root link frame
};

}  // namespace settle
