#include "settle/settling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "settle/errors.hpp"

namespace settle {

namespace {

struct Evaluation {
  std::vector<Vec3> world;
  std::vector<double> dist;  // valid only where in_map
  std::vector<bool> in_map;
  bool any_oob = false;
  double min_dist = std::numeric_limits<double>::infinity();
};

Evaluation evaluate(const EsdfMap& map, const std::vector<Vec3>& candidates_c,
                    const Isometry3& pose) {
  Evaluation out;
  out.world.resize(candidates_c.size());
  out.dist.resize(candidates_c.size(), 0.0);
  out.in_map.resize(candidates_c.size(), false);
  for (size_t i = 0; i < candidates_c.size(); ++i) {
    out.world[i] = pose * candidates_c[i];
    const auto d = map.tryDistance(out.world[i]);
    if (!d) {
      out.any_oob = true;
      continue;
    }
    out.in_map[i] = true;
    out.dist[i] = *d;
    out.min_dist = std::min(out.min_dist, *d);
  }
  return out;
}

Isometry3 rotateAbout(const Isometry3& pose, const Vec3& anchor, const Vec3& axis_unit,
                      double angle) {
  Isometry3 rot = Isometry3::Identity();
  rot.linear() = Eigen::AngleAxisd(angle, axis_unit).toRotationMatrix();
  return Eigen::Translation3d(anchor) * rot * Eigen::Translation3d(-anchor) * pose;
}

}  // namespace

std::optional<double> rotationAngle(const Vec3& p, double d, RotationCenterMode mode,
                                    const Vec3& g) {
  Vec3 target;
  if (mode == RotationCenterMode::StraightDown) {
    target = p - Vec3(0.0, 0.0, d);
  } else {
    const double g_norm = g.norm();
    const Vec3 dir = g_norm > 1e-9 ? Vec3(g / g_norm) : Vec3(0.0, 0.0, 1.0);
    target = p - d * dir;
  }
  const double rho_p = std::hypot(p.y(), p.z());
  const double rho_c = std::hypot(target.y(), target.z());
  if (rho_p < 1e-9 || rho_c < 1e-9) return std::nullopt;
  const double chord_sq =
      (Vec2(p.y(), p.z()) - Vec2(target.y(), target.z())).squaredNorm();
  double arg = (rho_p * rho_p + rho_c * rho_c - chord_sq) / (2.0 * rho_p * rho_c);
  if (arg > 1.0 + 1e-6 || arg < -1.0 - 1e-6)
    throw NumericalDomainError("rotation angle outside the valid cosine range");
  arg = std::clamp(arg, -1.0, 1.0);
  const double alpha = std::acos(arg);
  return d >= 0.0 ? alpha : -alpha;
}

RotationAxis computeRotationAxis(const std::vector<Vec3>& contacts, const Vec3& com_world) {
  if (contacts.empty()) throw DegenerateAxisError("no contacts to derive a tip-over axis from");
  const StabilityResult stab = minStability(contacts, com_world);
  if (stab.hull.size() >= 2) {
    const Vec3 dir = stab.axis_end - stab.axis_start;
    if (dir.norm() < 1e-9) throw DegenerateAxisError("degenerate least-stable edge");
    return {stab.axis_start, dir.normalized()};
  }
  // A single support point (possibly a coincident cluster): pivot about the
  // horizontal direction perpendicular to the CoM offset.
  const Vec3 offset = com_world - stab.hull[0];
  const Vec3 dir = offset.cross(Vec3(0.0, 0.0, -1.0));
  if (dir.norm() < 1e-9)
    throw DegenerateAxisError("center of mass directly above the single support point");
  return {stab.hull[0], dir.normalized()};
}

namespace detail {

SettleStatus fallingStage(const EsdfMap& map, const std::vector<Vec3>& candidates_c,
                          Isometry3& pose, const SettlingParams& params, SettlingTrace& trace) {
  double scale = 1.0;
  for (int iter = 0; iter < params.max_fall_iters; ++iter) {
    const Evaluation eval = evaluate(map, candidates_c, pose);
    if (eval.any_oob) return SettleStatus::OutOfMap;
    if (eval.min_dist < params.contact_eps && eval.min_dist >= -kPenetrationSlack)
      return SettleStatus::Converged;
    const double step = scale * eval.min_dist;  // down when positive, up out of penetration
    Isometry3 trial = pose;
    trial.translation().z() -= step;
    const Evaluation trial_eval = evaluate(map, candidates_c, trial);
    if (trial_eval.any_oob) return SettleStatus::OutOfMap;
    if (step > 0.0 && trial_eval.min_dist < -kPenetrationSlack) {
      scale *= params.fall_decay;  // overshot into the surface: shrink and retry
      ++trace.fall_iterations;
      continue;
    }
    pose = trial;
    ++trace.fall_iterations;
    if (params.record_poses) trace.poses.push_back(pose);
  }
  const Evaluation eval = evaluate(map, candidates_c, pose);
  if (eval.any_oob) return SettleStatus::OutOfMap;
  if (eval.min_dist < params.contact_eps && eval.min_dist >= -kPenetrationSlack)
    return SettleStatus::Converged;
  return SettleStatus::NoConvergence;
}

SettleStatus rotationStage(const EsdfMap& map, const std::vector<Vec3>& candidates_c,
                           Isometry3& pose, const RotationAxis& axis, const Vec3& com_world,
                           const SettlingParams& params, SettlingTrace& trace) {
  Vec3 x = axis.dir.normalized();
  Vec3 z_r = Vec3::UnitZ() - Vec3::UnitZ().dot(x) * x;
  if (z_r.norm() < 1e-9) return SettleStatus::Degenerate;  // vertical tip-over axis
  z_r.normalize();
  Vec3 y = z_r.cross(x);
  if (y.dot(com_world - axis.anchor) < 0.0) {  // make +y point toward the CoM
    x = -x;
    y = z_r.cross(x);
  }
  Mat3 r_wr;
  r_wr.col(0) = x;
  r_wr.col(1) = y;
  r_wr.col(2) = z_r;
  const Mat3 r_rw = r_wr.transpose();

  // Exclusions are fixed at stage entry: candidates in the axis plane pivot
  // in place (zero first-order vertical motion), and candidates behind it
  // (-y, the side the support is on) rise as the robot tips, so neither
  // constrains the stage. Axis membership is measured in y only so that
  // contacts along the support edge but below the anchor-to-anchor chord
  // still count as pivots.
  std::vector<bool> excluded(candidates_c.size(), false);
  {
    const Evaluation entry = evaluate(map, candidates_c, pose);
    for (size_t i = 0; i < candidates_c.size(); ++i) {
      const Vec3 p_r = r_rw * (entry.world[i] - axis.anchor);
      excluded[i] = p_r.y() < params.axis_exclusion_tol;
    }
  }

  double scale = 1.0;
  auto subsetValid = [&](const Evaluation& eval, double& min_dist) {
    min_dist = std::numeric_limits<double>::infinity();
    bool any = false;
    for (size_t i = 0; i < candidates_c.size(); ++i) {
      if (excluded[i] || !eval.in_map[i]) continue;
      any = true;
      min_dist = std::min(min_dist, eval.dist[i]);
    }
    return any;
  };

  for (int iter = 0; iter < params.max_rot_iters_per_axis; ++iter) {
    const Evaluation eval = evaluate(map, candidates_c, pose);
    double subset_min;
    if (!subsetValid(eval, subset_min)) return SettleStatus::Degenerate;
    if (subset_min < params.contact_eps && subset_min >= -kPenetrationSlack)
      return SettleStatus::Converged;
    double alpha = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < candidates_c.size(); ++i) {
      if (excluded[i] || !eval.in_map[i]) continue;
      const Vec3 p_r = r_rw * (eval.world[i] - axis.anchor);
      Vec3 g_r = Vec3::UnitZ();  // fallback: surface straight below the point
      if (params.rotation_center == RotationCenterMode::AlongGradient) {
        const SdfGradient grad = map.gradient(eval.world[i]);
        if (!grad.degenerate) g_r = r_rw * grad.vector;
      }
      if (const auto a = rotationAngle(p_r, eval.dist[i], params.rotation_center, g_r))
        alpha = std::min(alpha, *a);
    }
    if (!std::isfinite(alpha)) return SettleStatus::Degenerate;
    // Positive right-handed rotation about +x raises the +y side, so tip by
    // the negative angle to lower the CoM side.
    const Isometry3 trial = rotateAbout(pose, axis.anchor, x, -scale * alpha);
    const Evaluation trial_eval = evaluate(map, candidates_c, trial);
    double trial_min;
    if (!subsetValid(trial_eval, trial_min)) return SettleStatus::Degenerate;
    if (alpha > 0.0 && trial_min < -kPenetrationSlack) {
      scale *= params.fall_decay;  // rotated past the surface: shrink and retry
      ++trace.rotation_iterations;
      continue;
    }
    pose = trial;
    ++trace.rotation_iterations;
    if (params.record_poses) trace.poses.push_back(pose);
  }
  const Evaluation eval = evaluate(map, candidates_c, pose);
  double subset_min;
  if (!subsetValid(eval, subset_min)) return SettleStatus::Degenerate;
  if (subset_min < params.contact_eps && subset_min >= -kPenetrationSlack)
    return SettleStatus::Converged;
  return SettleStatus::NoConvergence;
}

}  // namespace detail

PredictionResult predictPose(const EsdfMap& map, const RobotState& robot, const QueryPose& query,
                             const SettlingParams& params) {
  PredictionResult out;
  Isometry3 pose = Isometry3::Identity();
  pose.linear() = Eigen::AngleAxisd(query.yaw, Vec3::UnitZ()).toRotationMatrix();
  pose.translation() = Vec3(query.x, query.y, query.z_hint);

  for (int stage = 0; stage <= params.max_rotation_stages; ++stage) {
    const SettleStatus fall = detail::fallingStage(map, robot.candidates, pose, params, out.trace);
    if (fall != SettleStatus::Converged) {
      out.status = fall;
      out.pose = pose;
      return out;
    }
    const Evaluation eval = evaluate(map, robot.candidates, pose);
    // Stability and the tip-over axis use every touching candidate so the
    // support polygon is not shrunk by contact deduplication; the deduced
    // contact list is what gets reported.
    std::vector<Vec3> touching;
    for (size_t i = 0; i < robot.candidates.size(); ++i)
      if (eval.dist[i] < params.contact_eps) touching.push_back(eval.world[i]);
    out.contacts =
        extractContacts(eval.world, eval.dist, params.contact_eps, params.contact_dedup_radius);
    const Vec3 com_world = pose * robot.com;
    const StabilityResult stab = minStability(touching, com_world);
    out.hull = stab.hull;
    out.min_margin = stab.min_margin;
    out.pose = pose;
    if (stab.stable) {
      out.status = SettleStatus::Converged;
      return out;
    }
    if (stab.hull.size() == 1 &&
        (com_world.head<2>() - stab.hull[0].head<2>()).norm() <= 1e-9) {
      // Balanced exactly on one support point: marginally settled.
      out.status = SettleStatus::Converged;
      out.min_margin = 0.0;
      return out;
    }
    if (stage == params.max_rotation_stages) break;
    const RotationAxis axis = computeRotationAxis(touching, com_world);
    const Isometry3 before = pose;
    const SettleStatus rot =
        detail::rotationStage(map, robot.candidates, pose, axis, com_world, params, out.trace);
    ++out.trace.rotation_stages;
    if (rot != SettleStatus::Converged) {
      out.status = rot;
      out.pose = pose;
      return out;
    }
    if ((pose.matrix() - before.matrix()).cwiseAbs().maxCoeff() < 1e-14)
      break;  // the stage could not move the robot; further stages would repeat it
    renormalizeRotation(pose);
  }
  out.status = SettleStatus::NoConvergence;
  out.pose = pose;
  return out;
}

}  // namespace settle
