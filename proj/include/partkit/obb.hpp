#ifndef PARTKIT_OBB_HPP
#define PARTKIT_OBB_HPP

#include "partkit/types.hpp"

namespace partkit {

/// Half-extent assigned to collapsed axes of degenerate (planar, linear
/// or point) inputs.
inline constexpr double kThinHalfExtent = 1e-6;

/// Oriented bounding box. `rotation` maps box-frame coordinates to world
/// coordinates. Boxes are canonical: half extents sorted descending,
/// right-handed frame, quaternion sign fixed.
struct Obb {
    Vec3 center{Vec3::Zero()};
    Vec3 half_extents{Vec3::Ones()};
    Quat rotation{Quat::Identity()};

    double volume() const { return 8.0 * half_extents.prod(); }
    Vec3 to_local(const Vec3& p) const { return rotation.conjugate() * (p - center); }
    Vec3 to_world(const Vec3& local) const { return rotation * local + center; }
    bool contains(const Vec3& p, double tol = 0.0) const {
        const Vec3 local = to_local(p).cwiseAbs();
        return (local.array() <= half_extents.array() + tol).all();
    }

    /// Canonicalizing constructor from an orthonormal frame (columns =
    /// box axes) and per-axis half extents.
    static Obb from_frame(const Vec3& center, const Mat3& axes, const Vec3& half_extents);

    /// Watertight 12-triangle box mesh, outward-wound.
    TriMesh to_mesh() const;
};

struct MinObbResult {
    Obb box;
    bool degenerate = false;  // some axis was clamped to kThinHalfExtent
};

/// Minimum-volume oriented bounding box. Candidate orientations come
/// from convex-hull face normals and edge-direction cross products, each
/// completed by the exact minimum-area rectangle in the perpendicular
/// plane, followed by a local rotation refinement of the best
/// candidates. Planar/collinear inputs take a reduced-dimension path and
/// come back flagged with thin axes clamped to kThinHalfExtent.
MinObbResult min_obb(const std::vector<Vec3>& points);

/// Covariance-eigenvector box; fast, never smaller than min_obb.
Obb pca_obb(const std::vector<Vec3>& points);

/// Minimum OBB of the 8n corner points of all boxes.
Obb enclosing_obb(const std::vector<Obb>& boxes);

/// The 8 corners in fixed bit-pattern order: bit 0 -> +x, bit 1 -> +y,
/// bit 2 -> +z of the local frame (bit clear means the negative side).
std::array<Vec3, 8> obb_corners(const Obb& box);

}  // namespace partkit

#endif
