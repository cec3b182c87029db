#ifndef PARTKIT_CONVEX_HULL_HPP
#define PARTKIT_CONVEX_HULL_HPP

#include "partkit/types.hpp"

namespace partkit {

/// Triangulated convex hull. Faces index into `vertices` (a compacted
/// subset of the input points, original indices in `source_indices`).
struct ConvexHull {
    std::vector<Vec3> vertices;
    std::vector<int> source_indices;
    std::vector<std::array<int, 3>> faces;  // outward-wound triangles

    std::vector<std::array<int, 2>> unique_edges() const;
};

/// Quickhull. Throws degenerate_shape when the input has no 3D extent
/// (fewer than 4 points, or collinear/coplanar within tolerance).
ConvexHull convex_hull_3d(const std::vector<Vec3>& points);

/// Monotone-chain 2D hull; returns indices into `points` in CCW order
/// without the closing duplicate.
std::vector<int> convex_hull_2d(const std::vector<Eigen::Vector2d>& points);

/// Minimum-area enclosing rectangle of a 2D point set. One side of the
/// optimum is flush with a hull edge, so enumerating hull edges is exact.
struct MinRect {
    Eigen::Vector2d axis_u, axis_v;  // orthonormal
    double min_u, max_u, min_v, max_v;
    double area;
};
MinRect min_area_rect(const std::vector<Eigen::Vector2d>& points);

}  // namespace partkit

#endif
