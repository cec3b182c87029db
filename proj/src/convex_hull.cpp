#include "partkit/convex_hull.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <unordered_map>

namespace partkit {

std::vector<std::array<int, 2>> ConvexHull::unique_edges() const {
    std::set<std::array<int, 2>> edges;
    for (const auto& f : faces)
        for (int k = 0; k < 3; ++k) {
            int a = f[k], b = f[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            edges.insert({a, b});
        }
    return {edges.begin(), edges.end()};
}

namespace {

struct HullFace {
    std::array<int, 3> v;  // indices into the input point array
    Vec3 normal;           // unit outward normal
    double offset;         // plane offset: dot(normal, x) = offset
    std::vector<int> outside;
    bool alive = true;
};

double signed_distance(const HullFace& f, const Vec3& p) {
    return f.normal.dot(p) - f.offset;
}

HullFace make_face(const std::vector<Vec3>& pts, int a, int b, int c, const Vec3& interior) {
    HullFace f;
    f.v = {a, b, c};
    Vec3 n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    const double len = n.norm();
    if (len > 0.0) n /= len;
    // Wind outward relative to a point known to be inside.
    if (n.dot(interior - pts[a]) > 0.0) {
        std::swap(f.v[1], f.v[2]);
        n = -n;
    }
    f.normal = n;
    f.offset = n.dot(pts[f.v[0]]);
    return f;
}

}  // namespace

ConvexHull convex_hull_3d(const std::vector<Vec3>& points) {
    const std::size_t n = points.size();
    if (n < 4) throw Error(ErrorCode::degenerate_shape, "convex_hull_3d: fewer than 4 points");

    Aabb box;
    for (const auto& p : points) box.expand(p);
    const double scale = std::max(box.diagonal(), 1e-300);
    const double eps = 1e-10 * scale;

    // Initial simplex from spread-maximizing extremes.
    int i0 = 0, i1 = 0;
    {
        int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
        for (int i = 1; i < static_cast<int>(n); ++i)
            for (int k = 0; k < 3; ++k) {
                if (points[i][k] < points[lo[k]][k]) lo[k] = i;
                if (points[i][k] > points[hi[k]][k]) hi[k] = i;
            }
        double best = -1.0;
        for (int k = 0; k < 3; ++k) {
            const double d = (points[hi[k]] - points[lo[k]]).squaredNorm();
            if (d > best) {
                best = d;
                i0 = lo[k];
                i1 = hi[k];
            }
        }
        if (std::sqrt(best) <= eps)
            throw Error(ErrorCode::degenerate_shape, "convex_hull_3d: all points coincident");
    }
    int i2 = -1;
    {
        const Vec3 dir = (points[i1] - points[i0]).normalized();
        double best = eps;
        for (int i = 0; i < static_cast<int>(n); ++i) {
            const Vec3 rel = points[i] - points[i0];
            const double d = (rel - rel.dot(dir) * dir).norm();
            if (d > best) {
                best = d;
                i2 = i;
            }
        }
        if (i2 < 0) throw Error(ErrorCode::degenerate_shape, "convex_hull_3d: points collinear");
    }
    int i3 = -1;
    {
        const Vec3 normal =
            (points[i1] - points[i0]).cross(points[i2] - points[i0]).normalized();
        double best = eps;
        for (int i = 0; i < static_cast<int>(n); ++i) {
            const double d = std::abs(normal.dot(points[i] - points[i0]));
            if (d > best) {
                best = d;
                i3 = i;
            }
        }
        if (i3 < 0) throw Error(ErrorCode::degenerate_shape, "convex_hull_3d: points coplanar");
    }

    const Vec3 interior = 0.25 * (points[i0] + points[i1] + points[i2] + points[i3]);
    std::vector<HullFace> faces;
    faces.push_back(make_face(points, i0, i1, i2, interior));
    faces.push_back(make_face(points, i0, i1, i3, interior));
    faces.push_back(make_face(points, i0, i2, i3, interior));
    faces.push_back(make_face(points, i1, i2, i3, interior));

    auto assign_outside = [&](int point_index, const std::vector<int>& candidates) {
        double best = eps;
        int best_face = -1;
        for (int fi : candidates) {
            if (!faces[fi].alive) continue;
            const double d = signed_distance(faces[fi], points[point_index]);
            if (d > best) {
                best = d;
                best_face = fi;
            }
        }
        if (best_face >= 0) faces[best_face].outside.push_back(point_index);
    };
    {
        std::vector<int> all{0, 1, 2, 3};
        for (int i = 0; i < static_cast<int>(n); ++i) {
            if (i == i0 || i == i1 || i == i2 || i == i3) continue;
            assign_outside(i, all);
        }
    }

    std::deque<int> pending{0, 1, 2, 3};
    while (!pending.empty()) {
        const int fi = pending.front();
        pending.pop_front();
        if (!faces[fi].alive || faces[fi].outside.empty()) continue;

        // Farthest outside point drives the expansion.
        int apex = -1;
        double best = -1.0;
        for (int pi : faces[fi].outside) {
            const double d = signed_distance(faces[fi], points[pi]);
            if (d > best) {
                best = d;
                apex = pi;
            }
        }

        // Visible set: faces the apex sees, discovered by flood fill over
        // edge adjacency.
        std::unordered_map<std::uint64_t, int> edge_face;
        auto ekey = [](int a, int b) {
            return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
                   static_cast<std::uint32_t>(b);
        };
        for (int i = 0; i < static_cast<int>(faces.size()); ++i) {
            if (!faces[i].alive) continue;
            const auto& fv = faces[i].v;
            for (int k = 0; k < 3; ++k) edge_face[ekey(fv[k], fv[(k + 1) % 3])] = i;
        }

        std::vector<int> visible;
        std::vector<bool> seen(faces.size(), false);
        std::deque<int> queue{fi};
        seen[fi] = true;
        while (!queue.empty()) {
            const int cur = queue.front();
            queue.pop_front();
            if (signed_distance(faces[cur], points[apex]) > eps) {
                visible.push_back(cur);
                const auto& fv = faces[cur].v;
                for (int k = 0; k < 3; ++k) {
                    auto it = edge_face.find(ekey(fv[(k + 1) % 3], fv[k]));
                    if (it != edge_face.end() && !seen[it->second]) {
                        seen[it->second] = true;
                        queue.push_back(it->second);
                    }
                }
            }
        }

        std::vector<bool> is_visible(faces.size(), false);
        for (int vi : visible) is_visible[vi] = true;

        // Horizon: directed edges of visible faces whose neighbor is not
        // visible.
        std::vector<std::array<int, 2>> horizon;
        for (int vi : visible) {
            const auto& fv = faces[vi].v;
            for (int k = 0; k < 3; ++k) {
                const int a = fv[k], b = fv[(k + 1) % 3];
                auto it = edge_face.find(ekey(b, a));
                if (it == edge_face.end() || !is_visible[it->second])
                    horizon.push_back({a, b});
            }
        }

        std::vector<int> orphaned;
        for (int vi : visible) {
            faces[vi].alive = false;
            orphaned.insert(orphaned.end(), faces[vi].outside.begin(), faces[vi].outside.end());
            faces[vi].outside.clear();
        }

        std::vector<int> fresh;
        for (const auto& edge : horizon) {
            faces.push_back(make_face(points, edge[0], edge[1], apex, interior));
            fresh.push_back(static_cast<int>(faces.size()) - 1);
        }
        for (int pi : orphaned) {
            if (pi == apex) continue;
            assign_outside(pi, fresh);
        }
        for (int nf : fresh)
            if (!faces[nf].outside.empty()) pending.push_back(nf);
    }

    ConvexHull hull;
    std::unordered_map<int, int> remap;
    for (const auto& f : faces) {
        if (!f.alive) continue;
        std::array<int, 3> g;
        for (int k = 0; k < 3; ++k) {
            auto [it, inserted] = remap.emplace(f.v[k], static_cast<int>(hull.vertices.size()));
            if (inserted) {
                hull.vertices.push_back(points[f.v[k]]);
                hull.source_indices.push_back(f.v[k]);
            }
            g[k] = it->second;
        }
        hull.faces.push_back(g);
    }
    return hull;
}

std::vector<int> convex_hull_2d(const std::vector<Eigen::Vector2d>& points) {
    const int n = static_cast<int>(points.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (points[a].x() != points[b].x()) return points[a].x() < points[b].x();
        return points[a].y() < points[b].y();
    });
    auto cross = [&](int o, int a, int b) {
        const Eigen::Vector2d oa = points[a] - points[o];
        const Eigen::Vector2d ob = points[b] - points[o];
        return oa.x() * ob.y() - oa.y() * ob.x();
    };
    std::vector<int> hull(2 * n);
    int k = 0;
    for (int idx = 0; idx < n; ++idx) {  // lower
        const int i = order[idx];
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], i) <= 0.0) --k;
        hull[k++] = i;
    }
    for (int idx = n - 2, lower = k + 1; idx >= 0; --idx) {  // upper
        const int i = order[idx];
        while (k >= lower && cross(hull[k - 2], hull[k - 1], i) <= 0.0) --k;
        hull[k++] = i;
    }
    hull.resize(std::max(k - 1, 1));
    return hull;
}

MinRect min_area_rect(const std::vector<Eigen::Vector2d>& points) {
    if (points.empty())
        throw Error(ErrorCode::empty_input, "min_area_rect: no points");
    const std::vector<int> hull = convex_hull_2d(points);

    auto extents_for = [&](const Eigen::Vector2d& u, const Eigen::Vector2d& v, MinRect& r) {
        r.min_u = r.min_v = std::numeric_limits<double>::max();
        r.max_u = r.max_v = std::numeric_limits<double>::lowest();
        for (int hi : hull) {
            const double pu = u.dot(points[hi]);
            const double pv = v.dot(points[hi]);
            r.min_u = std::min(r.min_u, pu);
            r.max_u = std::max(r.max_u, pu);
            r.min_v = std::min(r.min_v, pv);
            r.max_v = std::max(r.max_v, pv);
        }
        r.axis_u = u;
        r.axis_v = v;
        r.area = (r.max_u - r.min_u) * (r.max_v - r.min_v);
    };

    MinRect best;
    extents_for(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), best);
    if (hull.size() < 2) return best;

    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Eigen::Vector2d a = points[hull[i]];
        const Eigen::Vector2d b = points[hull[(i + 1) % hull.size()]];
        Eigen::Vector2d u = b - a;
        const double len = u.norm();
        if (len <= 0.0) continue;
        u /= len;
        const Eigen::Vector2d v(-u.y(), u.x());
        MinRect cand;
        extents_for(u, v, cand);
        if (cand.area < best.area) best = cand;
    }
    return best;
}

}  // namespace partkit
