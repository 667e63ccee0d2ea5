#include "settle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "settle/parallel.hpp"
#include "settle/stability.hpp"

namespace settle {

namespace {

struct PairResult {
  bool found = false;
  double com_height = std::numeric_limits<double>::infinity();
  double z = 0.0;
  double roll = 0.0, pitch = 0.0;
  double min_margin = 0.0;
};

/// Orders candidates by (CoM height, z, |roll|, |pitch|, roll, pitch) so the
/// merge over the sweep is deterministic regardless of thread scheduling.
bool better(const PairResult& a, const PairResult& b) {
  if (a.found != b.found) return a.found;
  if (!a.found) return false;
  const auto key = [](const PairResult& r) {
    return std::make_tuple(r.com_height, r.z, std::abs(r.roll), std::abs(r.pitch), r.roll, r.pitch);
  };
  return key(a) < key(b);
}

}  // namespace

OracleResult settleBruteforce(const EsdfMap& map, const RobotState& robot, const QueryPose& query,
                              const OracleParams& params) {
  const int n_roll = static_cast<int>(std::round(params.roll_range / params.angle_step));
  const int n_pitch = static_cast<int>(std::round(params.pitch_range / params.angle_step));
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(static_cast<size_t>(2 * n_roll + 1) * (2 * n_pitch + 1));
  for (int ir = -n_roll; ir <= n_roll; ++ir)
    for (int ip = -n_pitch; ip <= n_pitch; ++ip)
      pairs.emplace_back(ir * params.angle_step, ip * params.angle_step);

  std::vector<PairResult> results(pairs.size());
  const Mat3 yaw_rot = Eigen::AngleAxisd(query.yaw, Vec3::UnitZ()).toRotationMatrix();
  const Vec3 map_lo = map.minBound();
  const Vec3 map_hi = map.maxBound();

  parallelFor(
      pairs.size(),
      [&](size_t pi) {
        const double roll = pairs[pi].first;
        const double pitch = pairs[pi].second;
        const Mat3 rot = yaw_rot * (Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                                    Eigen::AngleAxisd(roll, Vec3::UnitX()))
                                       .toRotationMatrix();
        // Candidate offsets for this orientation; translation adds later.
        std::vector<Vec3> rotated(robot.candidates.size());
        double cz_min = std::numeric_limits<double>::infinity();
        double cz_max = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < robot.candidates.size(); ++i) {
          rotated[i] = rot * robot.candidates[i];
          const Vec3 w_xy = rotated[i] + Vec3(query.x, query.y, 0.0);
          if (w_xy.x() < map_lo.x() || w_xy.x() > map_hi.x() || w_xy.y() < map_lo.y() ||
              w_xy.y() > map_hi.y())
            return;  // robot footprint leaves the map at this orientation
          cz_min = std::min(cz_min, rotated[i].z());
          cz_max = std::max(cz_max, rotated[i].z());
        }
        // Heights where every candidate stays inside the map's z range.
        const double z_lo = map_lo.z() - cz_min;
        const double z_hi = map_hi.z() - cz_max;
        if (z_hi < z_lo) return;
        const int levels = static_cast<int>(std::floor((z_hi - z_lo) / params.z_step)) + 1;

        const auto feasible = [&](int level) {
          const Vec3 t(query.x, query.y, z_lo + params.z_step * level);
          for (const Vec3& c : rotated) {
            const auto d = map.tryDistance(t + c);
            if (!d || *d < -kPenetrationSlack) return false;
          }
          return true;
        };
        // Lowest non-penetrating level; free space is monotone in z.
        if (!feasible(levels - 1)) return;
        int lo = 0, hi = levels - 1;
        if (feasible(0)) {
          hi = 0;
        } else {
          while (hi - lo > 1) {
            const int mid = lo + (hi - lo) / 2;
            if (feasible(mid)) hi = mid;
            else lo = mid;
          }
        }
        const double z = z_lo + params.z_step * hi;
        const Vec3 t(query.x, query.y, z);
        std::vector<Vec3> touching;
        for (const Vec3& c : rotated) {
          const Vec3 w = t + c;
          if (map.distance(w) < params.contact_eps) touching.push_back(w);
        }
        if (touching.empty()) return;  // resting feasibly but out of reach of the surface
        const Vec3 com_world = t + rot * robot.com;
        const StabilityResult stab = minStability(touching, com_world);
        const bool balanced =
            stab.hull.size() == 1 && (com_world.head<2>() - stab.hull[0].head<2>()).norm() <= 1e-9;
        if (!stab.stable && !balanced) return;
        PairResult& r = results[pi];
        r.found = true;
        r.com_height = com_world.z();
        r.z = z;
        r.roll = roll;
        r.pitch = pitch;
        r.min_margin = stab.min_margin;
      },
      params.threads);

  PairResult best;
  for (const PairResult& r : results)
    if (better(r, best)) best = r;

  OracleResult out;
  if (!best.found) return out;
  out.found = true;
  out.roll = best.roll;
  out.pitch = best.pitch;
  out.z = best.z;
  out.com_height = best.com_height;
  out.min_margin = best.min_margin;
  out.pose = Isometry3::Identity();
  out.pose.linear() = yaw_rot * (Eigen::AngleAxisd(best.pitch, Vec3::UnitY()) *
                                 Eigen::AngleAxisd(best.roll, Vec3::UnitX()))
                                    .toRotationMatrix();
  out.pose.translation() = Vec3(query.x, query.y, best.z);
  return out;
}

}  // namespace settle
