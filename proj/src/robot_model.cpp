#include "settle/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "settle/errors.hpp"

namespace settle {

using json = nlohmann::json;

namespace {

void sampleLine(const Vec3& a, const Vec3& b, double spacing, std::vector<Vec3>& out) {
  const double len = (b - a).norm();
  const int n = static_cast<int>(std::ceil(len / spacing)) + 1;
  for (int i = 0; i < n; ++i) {
    const double t = (n == 1) ? 0.0 : static_cast<double>(i) / (n - 1);
    out.push_back(a + (b - a) * t);
  }
}

void sampleArcXZ(const Vec2& center, double radius, double theta0, double sweep, double y,
                 double spacing, std::vector<Vec3>& out) {
  const double len = std::abs(sweep) * radius;
  const int n = static_cast<int>(std::ceil(len / spacing)) + 1;
  for (int i = 0; i < n; ++i) {
    const double t = (n == 1) ? 0.0 : static_cast<double>(i) / (n - 1);
    const double theta = theta0 + sweep * t;
    out.push_back(Vec3(center.x() + radius * std::cos(theta), y,
                       center.y() + radius * std::sin(theta)));
  }
}

}  // namespace

void ContactShape::sample(std::vector<Vec3>& out) const {
  switch (kind) {
    case Kind::BoxBottom: {
      const int nx = static_cast<int>(std::ceil(box_size_x / spacing)) + 1;
      const int ny = static_cast<int>(std::ceil(box_size_y / spacing)) + 1;
      for (int j = 0; j < ny; ++j) {
        const double v = (ny == 1) ? 0.5 : static_cast<double>(j) / (ny - 1);
        const double y = box_center.y() + box_size_y * (v - 0.5);
        for (int i = 0; i < nx; ++i) {
          const double u = (nx == 1) ? 0.5 : static_cast<double>(i) / (nx - 1);
          out.push_back(Vec3(box_center.x() + box_size_x * (u - 0.5), y, box_center.z()));
        }
      }
      break;
    }
    case Kind::TrackOutline: {
      const Vec2 delta = wheel2 - wheel1;
      const double d = delta.norm();
      for (const double y : y_offsets) {
        if (d <= std::abs(radius1 - radius2) + 1e-12) {
          // One circle swallows the other; the outline is the bigger circle.
          const Vec2& c = radius1 >= radius2 ? wheel1 : wheel2;
          const double r = std::max(radius1, radius2);
          sampleArcXZ(c, r, 0.0, 2.0 * kPi, y, spacing, out);
          continue;
        }
        const double phi = std::atan2(delta.y(), delta.x());
        const double alpha = std::acos(std::clamp((radius1 - radius2) / d, -1.0, 1.0));
        // Far arc around wheel 1, tangent line, near arc around wheel 2, back.
        sampleArcXZ(wheel1, radius1, phi + alpha, 2.0 * (kPi - alpha), y, spacing, out);
        const auto rim = [](const Vec2& c, double r, double theta, double y_off) {
          return Vec3(c.x() + r * std::cos(theta), y_off, c.y() + r * std::sin(theta));
        };
        sampleLine(rim(wheel1, radius1, phi - alpha, y), rim(wheel2, radius2, phi - alpha, y),
                   spacing, out);
        sampleArcXZ(wheel2, radius2, phi - alpha, 2.0 * alpha, y, spacing, out);
        sampleLine(rim(wheel2, radius2, phi + alpha, y), rim(wheel1, radius1, phi + alpha, y),
                   spacing, out);
      }
      break;
    }
    case Kind::CylinderBottom: {
      const double z = cyl_center.y() - cyl_radius;
      sampleLine(Vec3(cyl_center.x(), cyl_y_min, z), Vec3(cyl_center.x(), cyl_y_max, z), spacing,
                 out);
      break;
    }
    case Kind::Point:
      out.push_back(point);
      break;
  }
}

namespace {

Vec3 readVec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("robot: expected a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Vec2 readVec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("robot: expected a 2-element array");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

ContactShape parseShape(const json& j) {
  ContactShape shape;
  shape.spacing = j.value("spacing", kDefaultSampleSpacing);
  if (shape.spacing <= 0.0) throw ParseError("robot: shape spacing must be positive");
  const std::string type = j.at("type").get<std::string>();
  if (type == "box_bottom") {
    shape.kind = ContactShape::Kind::BoxBottom;
    shape.box_center = readVec3(j.at("center"));
    const Vec2 size = readVec2(j.at("size"));
    shape.box_size_x = size.x();
    shape.box_size_y = size.y();
    if (size.minCoeff() <= 0.0) throw ParseError("robot: box_bottom size must be positive");
  } else if (type == "track_outline") {
    shape.kind = ContactShape::Kind::TrackOutline;
    shape.wheel1 = readVec2(j.at("wheel1"));
    shape.wheel2 = readVec2(j.at("wheel2"));
    shape.radius1 = j.at("r1").get<double>();
    shape.radius2 = j.at("r2").get<double>();
    if (shape.radius1 < 0.0 || shape.radius2 < 0.0)
      throw ParseError("robot: track radii must be non-negative");
    shape.y_offsets = j.at("y").get<std::vector<double>>();
    if (shape.y_offsets.empty()) throw ParseError("robot: track_outline needs y offsets");
  } else if (type == "cylinder_bottom") {
    shape.kind = ContactShape::Kind::CylinderBottom;
    shape.cyl_center = readVec2(j.at("center"));
    shape.cyl_radius = j.at("radius").get<double>();
    const Vec2 range = readVec2(j.at("y_range"));
    shape.cyl_y_min = range.x();
    shape.cyl_y_max = range.y();
    if (shape.cyl_radius < 0.0 || shape.cyl_y_max < shape.cyl_y_min)
      throw ParseError("robot: bad cylinder_bottom parameters");
  } else if (type == "point") {
    shape.kind = ContactShape::Kind::Point;
    shape.point = readVec3(j.at("p"));
  } else {
    throw ParseError("robot: unknown shape type '" + type + "'");
  }
  return shape;
}

}  // namespace

RobotModel RobotModel::parse(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("robot: ") + e.what());
  }
  RobotModel model;
  try {
    model.name_ = j.value("name", "robot");
    if (!j.contains("links") || !j["links"].is_array() || j["links"].empty())
      throw ParseError("robot: missing non-empty 'links'");
    for (const json& lj : j["links"]) {
      Link link;
      link.name = lj.at("name").get<std::string>();
      link.mass = lj.at("mass").get<double>();
      if (link.mass < 0.0) throw ParseError("robot: link mass must be non-negative");
      if (lj.contains("com")) link.com = readVec3(lj["com"]);
      for (const json& sj : lj.value("shapes", json::array())) link.shapes.push_back(parseShape(sj));
      model.links_.push_back(std::move(link));
    }
    for (const json& jj : j.value("joints", json::array())) {
      Joint joint;
      joint.name = jj.at("name").get<std::string>();
      const std::string type = jj.at("type").get<std::string>();
      if (type == "revolute") {
        joint.type = Joint::Type::Revolute;
        joint.axis = readVec3(jj.at("axis"));
        if (joint.axis.norm() < 1e-12) throw ParseError("robot: revolute axis must be nonzero");
        joint.axis.normalize();
      } else if (type == "fixed") {
        joint.type = Joint::Type::Fixed;
      } else {
        throw ParseError("robot: unknown joint type '" + type + "'");
      }
      // Names are resolved to indices in finalize().
      joint.actuator = jj.value("actuator", joint.name);
      if (jj.contains("origin")) {
        const json& oj = jj["origin"];
        Isometry3 origin = Isometry3::Identity();
        if (oj.contains("xyz")) origin.translation() = readVec3(oj["xyz"]);
        if (oj.contains("rpy")) {
          const Vec3 rpy = readVec3(oj["rpy"]);
          origin.linear() = rpyToMatrix(rpy.x(), rpy.y(), rpy.z());
        }
        joint.origin = origin;
      }
      if (jj.contains("limits")) {
        const Vec2 limits = readVec2(jj["limits"]);
        joint.limit_lower = limits.x();
        joint.limit_upper = limits.y();
        joint.has_limits = true;
        if (joint.limit_upper < joint.limit_lower)
          throw ParseError("robot: joint limits out of order");
      }
      // Temporarily stash the names in parent_link/child_link via a side table.
      joint.parent_link = -1;
      joint.child_link = -1;
      model.joints_.push_back(joint);
    }
    // Resolve joint endpoint names.
    std::unordered_map<std::string, int> link_index;
    for (size_t i = 0; i < model.links_.size(); ++i) {
      if (!link_index.emplace(model.links_[i].name, static_cast<int>(i)).second)
        throw ParseError("robot: duplicate link name '" + model.links_[i].name + "'");
    }
    size_t joint_idx = 0;
    for (const json& jj : j.value("joints", json::array())) {
      Joint& joint = model.joints_[joint_idx++];
      const std::string parent = jj.at("parent").get<std::string>();
      const std::string child = jj.at("child").get<std::string>();
      auto pit = link_index.find(parent);
      if (pit == link_index.end())
        throw MissingParentError("robot: joint '" + joint.name + "' parent '" + parent +
                                 "' is not a link");
      auto cit = link_index.find(child);
      if (cit == link_index.end())
        throw MissingParentError("robot: joint '" + joint.name + "' child '" + child +
                                 "' is not a link");
      joint.parent_link = pit->second;
      joint.child_link = cit->second;
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("robot: ") + e.what());
  }
  model.finalize();
  return model;
}

RobotModel RobotModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open robot file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RobotModel::finalize() {
  for (size_t ji = 0; ji < joints_.size(); ++ji) {
    Link& child = links_[joints_[ji].child_link];
    if (child.parent_joint >= 0)
      throw ParseError("robot: link '" + child.name + "' has multiple parent joints");
    child.parent_joint = static_cast<int>(ji);
  }
  root_link_ = -1;
  for (size_t li = 0; li < links_.size(); ++li) {
    if (links_[li].parent_joint >= 0) continue;
    if (root_link_ >= 0)
      throw ParseError("robot: multiple root links ('" + links_[root_link_].name + "', '" +
                       links_[li].name + "')");
    root_link_ = static_cast<int>(li);
  }
  if (root_link_ < 0) throw CycleInKinematicTreeError("robot: no root link (joint cycle)");

  // Breadth-first order guarantees parents precede children.
  std::vector<std::vector<int>> children(links_.size());
  for (size_t ji = 0; ji < joints_.size(); ++ji)
    children[joints_[ji].parent_link].push_back(joints_[ji].child_link);
  traversal_.clear();
  std::deque<int> queue{root_link_};
  std::vector<bool> seen(links_.size(), false);
  seen[root_link_] = true;
  while (!queue.empty()) {
    const int li = queue.front();
    queue.pop_front();
    traversal_.push_back(li);
    for (int c : children[li]) {
      if (seen[c]) throw CycleInKinematicTreeError("robot: link '" + links_[c].name +
                                                   "' is reachable twice");
      seen[c] = true;
      queue.push_back(c);
    }
  }
  if (traversal_.size() != links_.size())
    throw CycleInKinematicTreeError("robot: kinematic graph contains a cycle");

  double total_mass = 0.0;
  for (const Link& link : links_) total_mass += link.mass;
  if (total_mass <= 0.0) throw ParseError("robot: total mass must be positive");

  bool any_candidates = false;
  for (const Link& link : links_) any_candidates |= !link.shapes.empty();
  if (!any_candidates) throw ParseError("robot: no contact shapes defined");

  reference_com_ = Vec3::Zero();
  const std::vector<Isometry3> poses = linkPosesInRoot({});
  for (size_t li = 0; li < links_.size(); ++li)
    reference_com_ += links_[li].mass * (poses[li] * links_[li].com);
  reference_com_ /= total_mass;
}

double RobotModel::jointValue(const Joint& joint, const JointConfig& config) const {
  if (joint.type == Joint::Type::Fixed) return 0.0;
  const auto it = config.find(joint.actuator);
  const double value = (it == config.end()) ? 0.0 : it->second;
  if (joint.has_limits &&
      (value < joint.limit_lower - 1e-9 || value > joint.limit_upper + 1e-9)) {
    throw JointOutOfLimitsError("joint '" + joint.name + "' value " + std::to_string(value) +
                                " outside [" + std::to_string(joint.limit_lower) + ", " +
                                std::to_string(joint.limit_upper) + "]");
  }
  return value;
}

std::vector<Isometry3> RobotModel::linkPosesInRoot(const JointConfig& config) const {
  std::vector<Isometry3> poses(links_.size(), Isometry3::Identity());
  for (const int li : traversal_) {
    if (li == root_link_) continue;
    const Joint& joint = joints_[links_[li].parent_joint];
    Isometry3 motion = Isometry3::Identity();
    if (joint.type == Joint::Type::Revolute)
      motion.linear() = Eigen::AngleAxisd(jointValue(joint, config), joint.axis).toRotationMatrix();
    poses[li] = poses[joint.parent_link] * joint.origin * motion;
  }
  return poses;
}

RobotState RobotModel::shape(const JointConfig& config) const {
  const std::vector<Isometry3> poses = linkPosesInRoot(config);
  RobotState state;
  Vec3 com_root = Vec3::Zero();
  for (size_t li = 0; li < links_.size(); ++li) {
    const Link& link = links_[li];
    state.total_mass += link.mass;
    com_root += link.mass * (poses[li] * link.com);
    std::vector<Vec3> local;
    for (const ContactShape& shape : link.shapes) shape.sample(local);
    for (const Vec3& p : local) {
      state.candidates.push_back(poses[li] * p - reference_com_);
      state.candidate_links.push_back(static_cast<int>(li));
    }
  }
  com_root /= state.total_mass;
  state.com = com_root - reference_com_;
  return state;
}

Isometry3 RobotModel::linkPoseInC(const std::string& link_name, const JointConfig& config) const {
  for (size_t li = 0; li < links_.size(); ++li) {
    if (links_[li].name != link_name) continue;
    Isometry3 pose = linkPosesInRoot(config)[li];
    pose.translation() -= reference_com_;
    return pose;
  }
  throw ParseError("robot: unknown link '" + link_name + "'");
}

}  // namespace settle
