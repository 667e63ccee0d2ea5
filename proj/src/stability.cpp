#include "settle/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace settle {

namespace {
constexpr double kXyMergeTol = 1e-6;
constexpr double kCrossTol = 1e-12;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }
}  // namespace

std::vector<Vec3> extractContacts(const std::vector<Vec3>& world_points,
                                  const std::vector<double>& distances, double eps,
                                  double dedup_radius) {
  std::vector<Vec3> contacts;
  for (size_t i = 0; i < world_points.size(); ++i) {
    if (distances[i] >= eps) continue;
    bool duplicate = false;
    for (const Vec3& kept : contacts) {
      if ((world_points[i] - kept).norm() < dedup_radius) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) contacts.push_back(world_points[i]);
  }
  return contacts;
}

std::vector<Vec3> supportPolygon(const std::vector<Vec3>& contacts) {
  // Merge xy-coincident contacts (keep the first of each cluster).
  std::vector<Vec3> pts;
  for (const Vec3& c : contacts) {
    bool duplicate = false;
    for (const Vec3& kept : pts) {
      if ((c.head<2>() - kept.head<2>()).norm() < kXyMergeTol) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) pts.push_back(c);
  }
  if (pts.size() <= 2) return pts;

  std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  const auto turn = [](const Vec3& o, const Vec3& a, const Vec3& b) {
    return cross2((a - o).head<2>(), (b - o).head<2>());
  };
  std::vector<Vec3> hull(2 * pts.size());
  size_t k = 0;
  for (const Vec3& p : pts) {  // lower chain
    while (k >= 2 && turn(hull[k - 2], hull[k - 1], p) <= kCrossTol) --k;
    hull[k++] = p;
  }
  const size_t lower_end = k + 1;
  for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {  // upper chain
    while (k >= lower_end && turn(hull[k - 2], hull[k - 1], *it) <= kCrossTol) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);  // last point repeats the first
  return hull;
}

double fasmMargin(const Vec3& c0, const Vec3& c1, const Vec3& com) {
  const Vec3 axis = c1 - c0;
  const double axis_norm = axis.norm();
  if (axis_norm < 1e-12) {
    const double offset = (com.head<2>() - c0.head<2>()).norm();
    return offset <= 1e-9 ? 0.0 : -offset;
  }
  const Vec3 a = axis / axis_norm;
  const Vec3 v = com - c0;
  const Vec3 l = v - v.dot(a) * a;  // axis line -> CoM, perpendicular
  const double l_norm = l.norm();
  if (l_norm < 1e-12) return 0.0;
  const Vec3 f(0.0, 0.0, -1.0);  // unit gravity
  Vec3 f_perp = f - f.dot(a) * a;
  const double f_norm = f_perp.norm();
  if (f_norm < 1e-12) return 0.0;  // axis parallel to gravity: no tipping moment
  const double cos_theta = std::clamp((-l / l_norm).dot(f_perp / f_norm), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const double side = cross2(axis.head<2>(), (com - c0).head<2>());
  return (side > 0.0 ? 1.0 : -1.0) * theta * l_norm;
}

StabilityResult minStability(const std::vector<Vec3>& contacts, const Vec3& com) {
  StabilityResult out;
  out.hull = supportPolygon(contacts);
  if (out.hull.empty()) {
    out.min_margin = -std::numeric_limits<double>::infinity();
    out.stable = false;
    return out;
  }
  if (out.hull.size() == 1) {
    const Vec3& c = out.hull[0];
    const double offset = (com.head<2>() - c.head<2>()).norm();
    out.min_margin = offset <= 1e-9 ? 0.0 : -offset;
    out.axis_start = out.axis_end = c;
    out.edge_margins = {out.min_margin};
  } else if (out.hull.size() == 2) {
    const double forward = fasmMargin(out.hull[0], out.hull[1], com);
    const double backward = fasmMargin(out.hull[1], out.hull[0], com);
    if (forward <= backward) {
      out.min_margin = forward;
      out.axis_start = out.hull[0];
      out.axis_end = out.hull[1];
    } else {
      out.min_margin = backward;
      out.axis_start = out.hull[1];
      out.axis_end = out.hull[0];
    }
    out.edge_margins = {forward, backward};
  } else {
    out.min_margin = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < out.hull.size(); ++i) {
      const Vec3& c0 = out.hull[i];
      const Vec3& c1 = out.hull[(i + 1) % out.hull.size()];
      const double margin = fasmMargin(c0, c1, com);
      out.edge_margins.push_back(margin);
      if (margin < out.min_margin) {
        out.min_margin = margin;
        out.axis_start = c0;
        out.axis_end = c1;
      }
    }
  }
  out.stable = out.min_margin > 0.0;
  return out;
}

std::pair<int, int> farthestPair(const std::vector<Vec3>& points) {
  std::pair<int, int> best{0, 1};
  double best_sq = -1.0;
  for (size_t i = 0; i < points.size(); ++i) {
    for (size_t j = i + 1; j < points.size(); ++j) {
      const double sq = (points[j] - points[i]).squaredNorm();
      if (sq > best_sq) {
        best_sq = sq;
        best = {static_cast<int>(i), static_cast<int>(j)};
      }
    }
  }
  return best;
}

}  // namespace settle
