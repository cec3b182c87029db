#include "partkit/obb.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "partkit/convex_hull.hpp"

namespace partkit {

namespace {

// Volume of the axis-aligned box of `points` expressed in the frame
// whose axes are the columns of `axes`; optionally reports the bounds.
double frame_volume(const Mat3& axes, const std::vector<Vec3>& points, Vec3* lo_out = nullptr,
                    Vec3* hi_out = nullptr) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
    for (const auto& p : points) {
        const Vec3 local = axes.transpose() * p;
        lo = lo.cwiseMin(local);
        hi = hi.cwiseMax(local);
    }
    if (lo_out) *lo_out = lo;
    if (hi_out) *hi_out = hi;
    return (hi - lo).prod();
}

// Any orthonormal basis completing w.
void plane_basis(const Vec3& w, Vec3& u, Vec3& v) {
    const Vec3 pick = std::abs(w.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    u = w.cross(pick).normalized();
    v = w.cross(u);
}

// Best box constrained to have one axis along w: extent along w is the
// projection range, the cross-section is the exact minimum-area
// rectangle of the perpendicular projection.
Mat3 orientation_for_axis(const Vec3& w, const std::vector<Vec3>& points) {
    Vec3 u0, v0;
    plane_basis(w, u0, v0);
    std::vector<Eigen::Vector2d> flat(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        flat[i] = Eigen::Vector2d(u0.dot(points[i]), v0.dot(points[i]));
    const MinRect rect = min_area_rect(flat);
    Mat3 axes;
    axes.col(0) = rect.axis_u.x() * u0 + rect.axis_u.y() * v0;
    axes.col(1) = rect.axis_v.x() * u0 + rect.axis_v.y() * v0;
    axes.col(2) = w;
    return axes;
}

struct DirectionKey {
    std::int64_t x, y, z;
    bool operator==(const DirectionKey& o) const { return x == o.x && y == o.y && z == o.z; }
};
struct DirectionKeyHash {
    std::size_t operator()(const DirectionKey& k) const {
        std::uint64_t h = 1469598103934665603ull;
        for (std::int64_t v : {k.x, k.y, k.z}) {
            h ^= static_cast<std::uint64_t>(v);
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

// Deduplicate unit directions up to sign at ~1e-6 resolution.
class DirectionSet {
public:
    bool insert(Vec3 d) {
        const double len = d.norm();
        if (len < 1e-12) return false;
        d /= len;
        if (d.x() < 0 || (d.x() == 0 && d.y() < 0) || (d.x() == 0 && d.y() == 0 && d.z() < 0))
            d = -d;
        const DirectionKey key{static_cast<std::int64_t>(std::llround(d.x() * 1e6)),
                               static_cast<std::int64_t>(std::llround(d.y() * 1e6)),
                               static_cast<std::int64_t>(std::llround(d.z() * 1e6))};
        if (!seen_.insert(key).second) return false;
        directions.push_back(d);
        return true;
    }
    std::vector<Vec3> directions;

private:
    std::unordered_set<DirectionKey, DirectionKeyHash> seen_;
};

// Coordinate descent over small rotations about the current box axes,
// with a halving step schedule.
Mat3 refine_orientation(Mat3 axes, const std::vector<Vec3>& points) {
    double best = frame_volume(axes, points);
    double step = 0.02;  // radians
    while (step > 1e-10) {
        bool improved = false;
        for (int axis = 0; axis < 3; ++axis) {
            for (double sign : {1.0, -1.0}) {
                const Mat3 candidate =
                    axes * Eigen::AngleAxisd(sign * step, Vec3::Unit(axis)).toRotationMatrix();
                const double vol = frame_volume(candidate, points);
                if (vol < best) {
                    best = vol;
                    axes = candidate;
                    improved = true;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    return axes;
}

MinObbResult box_from_orientation(const Mat3& axes, const std::vector<Vec3>& points) {
    Vec3 lo, hi;
    frame_volume(axes, points, &lo, &hi);
    const Vec3 mid_local = 0.5 * (lo + hi);
    Vec3 half = 0.5 * (hi - lo);
    bool clamped = false;
    for (int k = 0; k < 3; ++k)
        if (half[k] < kThinHalfExtent) {
            half[k] = kThinHalfExtent;
            clamped = true;
        }
    MinObbResult result;
    result.box = Obb::from_frame(axes * mid_local, axes, half);
    result.degenerate = clamped;
    return result;
}

Mat3 pca_frame(const std::vector<Vec3>& points) {
    Vec3 mean = Vec3::Zero();
    for (const auto& p : points) mean += p;
    mean /= static_cast<double>(points.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) {
        const Vec3 d = p - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(points.size());
    Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
    Mat3 axes = solver.eigenvectors();
    if (axes.determinant() < 0) axes.col(2) = -axes.col(2);
    return axes;
}

// Reduced-dimension fallback for inputs without 3D extent.
MinObbResult degenerate_min_obb(const std::vector<Vec3>& points) {
    const Mat3 axes = pca_frame(points);  // eigenvalues ascending: col 2 = widest spread
    Vec3 mean = Vec3::Zero();
    for (const auto& p : points) mean += p;
    mean /= static_cast<double>(points.size());

    Vec3 spread = Vec3::Zero();
    for (const auto& p : points)
        spread = spread.cwiseMax((axes.transpose() * (p - mean)).cwiseAbs());

    if (spread.maxCoeff() <= 0.0) {  // single point (possibly repeated)
        MinObbResult r;
        r.box = Obb::from_frame(points.front(), Mat3::Identity(), Vec3::Constant(kThinHalfExtent));
        r.degenerate = true;
        return r;
    }
    if (spread[1] <= kThinHalfExtent) {  // collinear: only the widest axis matters
        Mat3 frame;
        frame.col(2) = axes.col(2);
        Vec3 u, v;
        plane_basis(axes.col(2), u, v);
        frame.col(0) = u;
        frame.col(1) = v;
        return box_from_orientation(frame, points);
    }
    // Coplanar: exact minimum rectangle in the plane, thin axis clamped.
    const Vec3 normal = axes.col(0);
    Mat3 frame = orientation_for_axis(normal, points);
    // orientation_for_axis puts the constrained axis in column 2; that is
    // the thin normal here.
    return box_from_orientation(frame, points);
}

}  // namespace

Obb Obb::from_frame(const Vec3& center, const Mat3& axes, const Vec3& half_extents) {
    // Canonical form: half extents descending, right-handed, positive
    // quaternion sign, so equality across axis permutations behaves.
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return half_extents[a] > half_extents[b]; });
    Mat3 sorted_axes;
    Vec3 sorted_extents;
    for (int k = 0; k < 3; ++k) {
        sorted_axes.col(k) = axes.col(order[k]);
        sorted_extents[k] = half_extents[order[k]];
    }
    if (sorted_axes.determinant() < 0) sorted_axes.col(2) = -sorted_axes.col(2);

    Obb box;
    box.center = center;
    box.half_extents = sorted_extents;
    box.rotation = Quat(sorted_axes).normalized();
    if (box.rotation.w() < 0 ||
        (box.rotation.w() == 0 &&
         (box.rotation.x() < 0 ||
          (box.rotation.x() == 0 &&
           (box.rotation.y() < 0 || (box.rotation.y() == 0 && box.rotation.z() < 0))))))
        box.rotation.coeffs() = -box.rotation.coeffs();
    return box;
}

std::array<Vec3, 8> obb_corners(const Obb& box) {
    std::array<Vec3, 8> corners;
    for (int i = 0; i < 8; ++i) {
        const Vec3 local((i & 1) ? box.half_extents.x() : -box.half_extents.x(),
                         (i & 2) ? box.half_extents.y() : -box.half_extents.y(),
                         (i & 4) ? box.half_extents.z() : -box.half_extents.z());
        corners[i] = box.to_world(local);
    }
    return corners;
}

TriMesh Obb::to_mesh() const {
    const auto c = obb_corners(*this);
    TriMesh mesh;
    mesh.vertices.assign(c.begin(), c.end());
    // Quads per face in the bit-pattern corner order, split into
    // outward-wound triangles.
    static constexpr int quads[6][4] = {
        {0, 4, 6, 2},  // -x
        {1, 3, 7, 5},  // +x
        {0, 1, 5, 4},  // -y
        {2, 6, 7, 3},  // +y
        {0, 2, 3, 1},  // -z
        {4, 5, 7, 6},  // +z
    };
    for (const auto& q : quads) {
        mesh.faces.push_back({q[0], q[1], q[2]});
        mesh.faces.push_back({q[0], q[2], q[3]});
    }
    return mesh;
}

MinObbResult min_obb(const std::vector<Vec3>& points) {
    if (points.empty()) throw Error(ErrorCode::empty_input, "min_obb: no points");

    ConvexHull hull;
    try {
        hull = convex_hull_3d(points);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::degenerate_shape) throw;
        return degenerate_min_obb(points);
    }

    DirectionSet axis_candidates;
    for (int k = 0; k < 3; ++k) axis_candidates.insert(Vec3::Unit(k));
    const Mat3 pca = pca_frame(hull.vertices);
    for (int k = 0; k < 3; ++k) axis_candidates.insert(pca.col(k));
    for (const auto& f : hull.faces)
        axis_candidates.insert((hull.vertices[f[1]] - hull.vertices[f[0]])
                                   .cross(hull.vertices[f[2]] - hull.vertices[f[0]]));

    // Edge-direction cross products, capped to keep the pair count sane
    // on dense hulls; refinement recovers whatever the cap loses.
    DirectionSet edge_dirs;
    const auto edges = hull.unique_edges();
    for (const auto& e : edges) edge_dirs.insert(hull.vertices[e[1]] - hull.vertices[e[0]]);
    std::vector<Vec3> dirs = edge_dirs.directions;
    constexpr std::size_t kMaxEdgeDirs = 64;
    if (dirs.size() > kMaxEdgeDirs) {
        std::vector<Vec3> sampled;
        const double stride = static_cast<double>(dirs.size()) / kMaxEdgeDirs;
        for (std::size_t i = 0; i < kMaxEdgeDirs; ++i)
            sampled.push_back(dirs[static_cast<std::size_t>(i * stride)]);
        dirs = std::move(sampled);
    }
    for (std::size_t i = 0; i < dirs.size(); ++i)
        for (std::size_t j = i + 1; j < dirs.size(); ++j)
            axis_candidates.insert(dirs[i].cross(dirs[j]));

    struct Candidate {
        double volume;
        Mat3 axes;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(axis_candidates.directions.size());
    for (const auto& w : axis_candidates.directions) {
        const Mat3 axes = orientation_for_axis(w, hull.vertices);
        candidates.push_back({frame_volume(axes, hull.vertices), axes});
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.volume < b.volume; });

    constexpr std::size_t kRefineCount = 4;
    Mat3 best_axes = candidates.front().axes;
    double best_volume = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < std::min(kRefineCount, candidates.size()); ++i) {
        const Mat3 refined = refine_orientation(candidates[i].axes, hull.vertices);
        const double vol = frame_volume(refined, hull.vertices);
        if (vol < best_volume) {
            best_volume = vol;
            best_axes = refined;
        }
    }

    // Final extents over all input points, not just the hull, so
    // containment is exact.
    return box_from_orientation(best_axes, points);
}

Obb pca_obb(const std::vector<Vec3>& points) {
    if (points.size() < 2) throw Error(ErrorCode::empty_input, "pca_obb: need at least 2 points");
    const Mat3 axes = pca_frame(points);
    Vec3 lo, hi;
    frame_volume(axes, points, &lo, &hi);
    if ((hi - lo).maxCoeff() <= 0.0)
        throw Error(ErrorCode::degenerate_shape, "pca_obb: all points identical");
    Vec3 half = 0.5 * (hi - lo);
    for (int k = 0; k < 3; ++k) half[k] = std::max(half[k], kThinHalfExtent);
    return Obb::from_frame(axes * (0.5 * (lo + hi)), axes, half);
}

Obb enclosing_obb(const std::vector<Obb>& boxes) {
    if (boxes.empty()) throw Error(ErrorCode::empty_input, "enclosing_obb: no boxes");
    std::vector<Vec3> corners;
    corners.reserve(boxes.size() * 8);
    for (const auto& box : boxes)
        for (const auto& c : obb_corners(box)) corners.push_back(c);
    return min_obb(corners).box;
}

}  // namespace partkit
