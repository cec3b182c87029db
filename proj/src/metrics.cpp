#include "partkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "partkit/mesh_ops.hpp"
#include "partkit/rng.hpp"

namespace partkit {

namespace {

using Polygon = std::vector<Vec3>;

// Convex polytope as a set of outward-wound face polygons.
std::vector<Polygon> box_polytope(const Obb& box) {
    const TriMesh mesh = box.to_mesh();
    std::vector<Polygon> faces;
    faces.reserve(6);
    // to_mesh emits two triangles per box face; rebuild the quads so
    // clipping deals with 6 polygons instead of 12.
    for (std::size_t i = 0; i + 1 < mesh.faces.size(); i += 2) {
        const auto& t0 = mesh.faces[i];
        const auto& t1 = mesh.faces[i + 1];
        faces.push_back({mesh.vertices[t0[0]], mesh.vertices[t0[1]], mesh.vertices[t0[2]],
                         mesh.vertices[t1[2]]});
    }
    return faces;
}

// Clip a convex polytope by the half-space n.x <= d. Vertices within
// plane_eps of the plane count as on-plane so that coincident faces
// (same box twice, shared face planes) survive exactly. The cap face is
// added only when the plane actually removed something; convexity
// guarantees that an on-plane face and a cap can never coexist.
std::vector<Polygon> clip_polytope(const std::vector<Polygon>& faces, const Vec3& n, double d,
                                   double weld_eps, double plane_eps) {
    std::vector<Polygon> out;
    std::vector<Vec3> cap_points;
    bool any_outside = false;

    for (const auto& poly : faces) {
        Polygon kept;
        const std::size_t m = poly.size();
        for (std::size_t i = 0; i < m; ++i) {
            const Vec3& cur = poly[i];
            const Vec3& nxt = poly[(i + 1) % m];
            const double dc = n.dot(cur) - d;
            const double dn = n.dot(nxt) - d;
            const int sc = dc > plane_eps ? 1 : (dc < -plane_eps ? -1 : 0);
            const int sn = dn > plane_eps ? 1 : (dn < -plane_eps ? -1 : 0);
            if (sc > 0) any_outside = true;
            if (sc <= 0) {
                kept.push_back(cur);
                if (sc == 0) cap_points.push_back(cur);
            }
            if ((sc < 0 && sn > 0) || (sc > 0 && sn < 0)) {
                const double t = dc / (dc - dn);
                const Vec3 hit = cur + t * (nxt - cur);
                kept.push_back(hit);
                cap_points.push_back(hit);
            }
        }
        if (kept.size() >= 3) out.push_back(std::move(kept));
    }
    if (!any_outside) return out;

    // Deduplicate cap vertices and order them around their centroid to
    // form the closing face (convexity makes the angular sort valid).
    std::vector<Vec3> cap;
    for (const auto& p : cap_points) {
        bool dup = false;
        for (const auto& q : cap)
            if ((p - q).squaredNorm() <= weld_eps * weld_eps) {
                dup = true;
                break;
            }
        if (!dup) cap.push_back(p);
    }
    if (cap.size() >= 3) {
        Vec3 centroid = Vec3::Zero();
        for (const auto& p : cap) centroid += p;
        centroid /= static_cast<double>(cap.size());
        Vec3 u, v;
        const Vec3 w = n.normalized();
        const Vec3 pick = std::abs(w.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        u = w.cross(pick).normalized();
        v = w.cross(u);
        std::sort(cap.begin(), cap.end(), [&](const Vec3& a, const Vec3& b) {
            return std::atan2(v.dot(a - centroid), u.dot(a - centroid)) <
                   std::atan2(v.dot(b - centroid), u.dot(b - centroid));
        });
        // Wound so the polygon normal matches +n (outward of the kept
        // half-space boundary).
        out.push_back(std::move(cap));
    }
    return out;
}

double polytope_volume(const std::vector<Polygon>& faces) {
    double six_vol = 0.0;
    for (const auto& poly : faces)
        for (std::size_t k = 1; k + 1 < poly.size(); ++k)
            six_vol += poly[0].dot(poly[k].cross(poly[k + 1]));
    return std::abs(six_vol) / 6.0;
}

double intersection_volume_ordered(const Obb& a, const Obb& b) {
    // Quick reject on world AABBs.
    Aabb box_a, box_b;
    for (const auto& c : obb_corners(a)) box_a.expand(c);
    for (const auto& c : obb_corners(b)) box_b.expand(c);
    if (!box_a.intersects(box_b)) return 0.0;

    const double scale = std::max(box_a.diagonal(), box_b.diagonal());
    const double weld_eps = 1e-12 * std::max(scale, 1.0);
    const double plane_eps = 1e-12 * std::max(scale, 1.0);

    std::vector<Polygon> poly = box_polytope(b);
    const Mat3 axes = a.rotation.toRotationMatrix();
    for (int k = 0; k < 3; ++k) {
        const Vec3 n = axes.col(k);
        const double c = n.dot(a.center);
        poly = clip_polytope(poly, n, c + a.half_extents[k], weld_eps, plane_eps);
        if (poly.empty()) return 0.0;
        poly = clip_polytope(poly, -n, -(c - a.half_extents[k]), weld_eps, plane_eps);
        if (poly.empty()) return 0.0;
    }
    return polytope_volume(poly);
}

bool obb_less(const Obb& a, const Obb& b) {
    const auto key = [](const Obb& o) {
        return std::array<double, 10>{o.center.x(),       o.center.y(),       o.center.z(),
                                      o.half_extents.x(), o.half_extents.y(), o.half_extents.z(),
                                      o.rotation.x(),     o.rotation.y(),     o.rotation.z(),
                                      o.rotation.w()};
    };
    return key(a) < key(b);
}

}  // namespace

double obb_intersection_volume(const Obb& a, const Obb& b) {
    // Canonical argument order keeps the computation bitwise symmetric.
    return obb_less(b, a) ? intersection_volume_ordered(b, a) : intersection_volume_ordered(a, b);
}

double obb_iou(const Obb& a, const Obb& b) {
    const double inter = obb_intersection_volume(a, b);
    const double uni = a.volume() + b.volume() - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

PartIou part_iou(const std::vector<TriMesh>& parts, const Layout& layout) {
    if (parts.size() != layout.boxes.size())
        throw Error(ErrorCode::mismatch, "part_iou: " + std::to_string(parts.size()) +
                                             " parts vs " + std::to_string(layout.boxes.size()) +
                                             " boxes");
    PartIou result;
    result.per_part.reserve(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].vertices.empty()) {
            result.per_part.push_back(0.0);
            continue;
        }
        const Obb part_box = min_obb(parts[i].vertices).box;
        result.per_part.push_back(obb_iou(part_box, layout.boxes[i]));
    }
    if (!result.per_part.empty()) {
        double sum = 0.0;
        for (double v : result.per_part) sum += v;
        result.mean = sum / static_cast<double>(result.per_part.size());
    }
    return result;
}

ObjectIouResult object_iou(const std::vector<TriMesh>& parts, const Layout& layout,
                           std::size_t mc_samples, std::uint64_t seed, ObjectBoxMode mode) {
    if (parts.empty()) throw Error(ErrorCode::empty_input, "object_iou: no parts");

    Obb object_box;
    if (mode == ObjectBoxMode::min_obb) {
        std::vector<Vec3> all;
        for (const auto& p : parts) all.insert(all.end(), p.vertices.begin(), p.vertices.end());
        if (all.empty()) throw Error(ErrorCode::empty_input, "object_iou: parts have no vertices");
        object_box = min_obb(all).box;
    } else {
        const Aabb aabb = meshes_aabb(parts);
        if (!aabb.valid())
            throw Error(ErrorCode::empty_input, "object_iou: parts have no vertices");
        Vec3 half = 0.5 * aabb.extents();
        for (int k = 0; k < 3; ++k) half[k] = std::max(half[k], kThinHalfExtent);
        object_box = Obb::from_frame(aabb.center(), Mat3::Identity(), half);
    }

    Aabb domain;
    for (const auto& c : obb_corners(object_box)) domain.expand(c);
    for (const auto& box : layout.boxes)
        for (const auto& c : obb_corners(box)) domain.expand(c);

    const std::size_t grid = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(std::cbrt(static_cast<double>(mc_samples)))));
    const Vec3 cell = domain.extents() / static_cast<double>(grid);

    std::mt19937_64 rng(seed);
    std::size_t hits_intersection = 0;
    std::size_t hits_union = 0;
    for (std::size_t ix = 0; ix < grid; ++ix)
        for (std::size_t iy = 0; iy < grid; ++iy)
            for (std::size_t iz = 0; iz < grid; ++iz) {
                const Vec3 p = domain.min + Vec3((ix + uniform_double(rng)) * cell.x(),
                                                 (iy + uniform_double(rng)) * cell.y(),
                                                 (iz + uniform_double(rng)) * cell.z());
                const bool in_object = object_box.contains(p);
                bool in_layout = false;
                for (const auto& box : layout.boxes)
                    if (box.contains(p)) {
                        in_layout = true;
                        break;
                    }
                if (in_object && in_layout) ++hits_intersection;
                if (in_object || in_layout) ++hits_union;
            }

    ObjectIouResult result;
    if (hits_union == 0) return result;  // disjoint from the sampled domain only if both empty
    const double n_union = static_cast<double>(hits_union);
    result.value = static_cast<double>(hits_intersection) / n_union;
    result.standard_error = std::sqrt(std::max(result.value * (1.0 - result.value), 0.0) / n_union);
    return result;
}

namespace {

Histogram make_histogram(const std::vector<double>& values, double lo, double hi,
                         std::size_t bins, double threshold) {
    Histogram h;
    h.threshold = threshold;
    h.bin_edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        h.bin_edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    h.counts.assign(bins, 0);
    std::size_t above = 0;
    for (double v : values) {
        if (v > threshold) ++above;
        if (v > hi) {
            ++h.overflow;
            continue;
        }
        const double t = (v - lo) / (hi - lo);
        std::size_t bin = static_cast<std::size_t>(t * static_cast<double>(bins));
        if (bin >= bins) bin = bins - 1;  // v == hi lands in the last bin
        ++h.counts[bin];
    }
    h.above_threshold_fraction =
        values.empty() ? 0.0 : static_cast<double>(above) / static_cast<double>(values.size());
    return h;
}

}  // namespace

StatsReport dataset_stats(const std::vector<RecordStatsView>& records, std::size_t bins) {
    if (records.empty()) throw Error(ErrorCode::empty_input, "dataset_stats: no records");
    if (bins == 0) throw Error(ErrorCode::invalid_argument, "dataset_stats: bins must be > 0");

    std::vector<double> ious, ratios;
    ious.reserve(records.size());
    ratios.reserve(records.size());
    StatsReport report;
    report.part_count_counts.assign(16, 0);
    for (const auto& r : records) {
        ious.push_back(r.mean_part_iou);
        ratios.push_back(r.largest_rest_ratio);
        const int idx = std::clamp(r.part_count, 1, 16) - 1;
        ++report.part_count_counts[idx];
    }
    report.mean_part_iou = make_histogram(ious, 0.0, 1.0, bins, 0.10);
    report.largest_rest_ratio = make_histogram(ratios, 0.0, 10.0, bins, 3.0);
    report.sample_count = records.size();
    return report;
}

}  // namespace partkit
