#pragma once

#include <vector>

#include "settle/geometry.hpp"

namespace settle {

/// Greedy deduplication of near-coincident contact points: candidates are
/// visited in index order and kept only when farther than dedup_radius from
/// every point already kept. Inputs are world-frame candidate positions with
/// their signed distances; a candidate is a contact when distance < eps.
std::vector<Vec3> extractContacts(const std::vector<Vec3>& world_points,
                                  const std::vector<double>& distances, double eps,
                                  double dedup_radius);

/// Convex hull of the points projected to the xy plane (Andrew's monotone
/// chain), counter-clockwise, strictly convex; the original 3D points are
/// returned. Near-duplicate xy positions (within 1e-6) are merged first.
/// Collinear input collapses to its two extreme points, a single cluster to
/// one point.
std::vector<Vec3> supportPolygon(const std::vector<Vec3>& contacts);

/// Static force-angle stability margin for tipping about the directed axis
/// c0 -> c1 under gravity. Positive when the center of mass lies on the
/// interior (left, for counter-clockwise hulls) side of the axis in the xy
/// plane; zero when the CoM sits on the axis line.
double fasmMargin(const Vec3& c0, const Vec3& c1, const Vec3& com);

struct StabilityResult {
  double min_margin = 0.0;
  bool stable = false;        // min_margin > 0
  std::vector<Vec3> hull;     // support polygon actually evaluated
  Vec3 axis_start = Vec3::Zero();  // least-stable tip-over axis (directed)
  Vec3 axis_end = Vec3::Zero();
  std::vector<double> edge_margins;  // per hull edge, edge i = hull[i]->hull[i+1]
};

/// Evaluates the minimum stability margin over all tip-over axes of the
/// support polygon of `contacts`. Degenerate contact sets are handled:
/// one support point gives margin -|com_xy - c_xy| (0 when the CoM is
/// directly above it); two (or collinear) supports give the worse of the two
/// margins about the single axis line.
StabilityResult minStability(const std::vector<Vec3>& contacts, const Vec3& com);

/// Indices of the two points with maximal pairwise distance (ties resolved
/// toward lower indices). Requires at least two points.
std::pair<int, int> farthestPair(const std::vector<Vec3>& points);

}  // namespace settle
