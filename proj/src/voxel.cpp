#include "partkit/voxel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "partkit/mesh_ops.hpp"

namespace partkit {

namespace {

constexpr double kDomainHalf = 0.525;  // unit cube inflated by 5%

struct RowBuckets {
    // Triangle indices whose (y,z) bounds touch each grid row.
    std::vector<std::vector<int>> rows;
    int resolution;

    std::vector<int>& at(int y, int z) { return rows[static_cast<std::size_t>(z) * resolution + y]; }
};

// Parity crossings of the +x ray through (y, z) against one triangle.
// Returns false when the configuration is degenerate (ray grazes an
// edge or the triangle is parallel) and the caller should jitter.
bool ray_crossing(const Vec3& a, const Vec3& b, const Vec3& c, double y, double z, double* x_hit) {
    const double e_ab = (b.y() - a.y()) * (z - a.z()) - (b.z() - a.z()) * (y - a.y());
    const double e_bc = (c.y() - b.y()) * (z - b.z()) - (c.z() - b.z()) * (y - b.y());
    const double e_ca = (a.y() - c.y()) * (z - c.z()) - (a.z() - c.z()) * (y - c.y());

    const double area2 = (b.y() - a.y()) * (c.z() - a.z()) - (b.z() - a.z()) * (c.y() - a.y());
    const double scale = std::abs(area2);
    const double eps = 1e-12 * std::max(scale, 1e-30);

    if (scale < 1e-14) return true;  // parallel to the ray: no transversal crossing

    const bool all_pos = e_ab > eps && e_bc > eps && e_ca > eps;
    const bool all_neg = e_ab < -eps && e_bc < -eps && e_ca < -eps;
    if (!all_pos && !all_neg) {
        // On or near an edge: degenerate hit.
        const bool near_edge = std::abs(e_ab) <= eps || std::abs(e_bc) <= eps || std::abs(e_ca) <= eps;
        if (near_edge) return false;
        return true;  // cleanly outside
    }
    // Barycentric interpolation of x at (y, z).
    const double w_a = e_bc / area2;
    const double w_b = e_ca / area2;
    const double w_c = e_ab / area2;
    *x_hit = w_a * a.x() + w_b * b.x() + w_c * c.x();
    return true;
}

void fill_parity(const TriMesh& mesh, VoxelGrid& grid) {
    const int res = grid.resolution;
    RowBuckets buckets;
    buckets.resolution = res;
    buckets.rows.resize(static_cast<std::size_t>(res) * res);

    auto to_cell = [&](double v) {
        return std::clamp(static_cast<int>(std::floor((v - grid.origin.x()) / grid.cell_size)), 0,
                          res - 1);
    };
    for (int fi = 0; fi < static_cast<int>(mesh.faces.size()); ++fi) {
        const auto& f = mesh.faces[fi];
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        const int y0 = to_cell(std::min({a.y(), b.y(), c.y()}));
        const int y1 = to_cell(std::max({a.y(), b.y(), c.y()}));
        const int z0 = to_cell(std::min({a.z(), b.z(), c.z()}));
        const int z1 = to_cell(std::max({a.z(), b.z(), c.z()}));
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y) buckets.at(y, z).push_back(fi);
    }

    std::vector<double> crossings;
    for (int z = 0; z < res; ++z) {
        for (int y = 0; y < res; ++y) {
            const auto& tris = buckets.at(y, z);
            if (tris.empty()) continue;
            const Vec3 base = grid.center_of(0, y, z);

            // Jitter fallback: retry the row with a nudged (y,z) until no
            // triangle reports a degenerate hit.
            double jy = base.y(), jz = base.z();
            bool clean = false;
            for (int attempt = 0; attempt < 16 && !clean; ++attempt) {
                crossings.clear();
                clean = true;
                for (int fi : tris) {
                    const auto& f = mesh.faces[fi];
                    double x_hit = std::numeric_limits<double>::quiet_NaN();
                    if (!ray_crossing(mesh.vertices[f[0]], mesh.vertices[f[1]],
                                      mesh.vertices[f[2]], jy, jz, &x_hit)) {
                        clean = false;
                        break;
                    }
                    if (!std::isnan(x_hit)) crossings.push_back(x_hit);
                }
                if (!clean) {
                    const double nudge = grid.cell_size * 1e-6 * static_cast<double>(attempt + 1);
                    jy = base.y() + nudge;
                    jz = base.z() + nudge * 0.618;
                }
            }
            if (!clean) continue;  // pathological row; leave it empty rather than guess
            if (crossings.empty()) continue;
            std::sort(crossings.begin(), crossings.end());

            // Walk centers; parity = crossings strictly left of the center.
            std::size_t k = 0;
            for (int x = 0; x < res; ++x) {
                const double cx = grid.center_of(x, y, z).x();
                while (k < crossings.size() && crossings[k] < cx) ++k;
                if (k & 1) grid.set(x, y, z);
            }
        }
    }
}

// Triangle/axis-aligned-cube overlap via separating axes.
bool triangle_intersects_cube(const Vec3& center, double half, Vec3 a, Vec3 b, Vec3 c) {
    a -= center;
    b -= center;
    c -= center;
    const Vec3 ab = b - a, bc = c - b, ca = a - c;

    // Cube face normals.
    for (int k = 0; k < 3; ++k) {
        const double lo = std::min({a[k], b[k], c[k]});
        const double hi = std::max({a[k], b[k], c[k]});
        if (lo > half || hi < -half) return false;
    }
    // Triangle normal.
    const Vec3 n = ab.cross(ca);
    {
        const double d = n.dot(a);
        const double r = half * (std::abs(n.x()) + std::abs(n.y()) + std::abs(n.z()));
        if (std::abs(d) > r) return false;
    }
    // Nine edge cross-products.
    const Vec3 edges[3] = {ab, bc, ca};
    for (const auto& e : edges)
        for (int k = 0; k < 3; ++k) {
            Vec3 axis = Vec3::Unit(k).cross(e);
            if (axis.squaredNorm() < 1e-30) continue;
            const double pa = axis.dot(a), pb = axis.dot(b), pc = axis.dot(c);
            const double lo = std::min({pa, pb, pc});
            const double hi = std::max({pa, pb, pc});
            const double r = half * (std::abs(axis.x()) + std::abs(axis.y()) + std::abs(axis.z()));
            if (lo > r || hi < -r) return false;
        }
    return true;
}

void fill_surface_band(const TriMesh& mesh, VoxelGrid& grid) {
    const int res = grid.resolution;
    auto to_cell = [&](double v, int axis) {
        return std::clamp(static_cast<int>(std::floor((v - grid.origin[axis]) / grid.cell_size)),
                          0, res - 1);
    };
    const double half = 0.5 * grid.cell_size;
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        const int x0 = to_cell(std::min({a.x(), b.x(), c.x()}), 0);
        const int x1 = to_cell(std::max({a.x(), b.x(), c.x()}), 0);
        const int y0 = to_cell(std::min({a.y(), b.y(), c.y()}), 1);
        const int y1 = to_cell(std::max({a.y(), b.y(), c.y()}), 1);
        const int z0 = to_cell(std::min({a.z(), b.z(), c.z()}), 2);
        const int z1 = to_cell(std::max({a.z(), b.z(), c.z()}), 2);
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    if (grid.get(x, y, z)) continue;
                    if (triangle_intersects_cube(grid.center_of(x, y, z), half, a, b, c))
                        grid.set(x, y, z);
                }
    }
}

}  // namespace

VoxelGrid VoxelGrid::empty(int resolution) {
    if (resolution < 2) throw Error(ErrorCode::invalid_argument, "voxel resolution must be >= 2");
    VoxelGrid grid;
    grid.resolution = resolution;
    grid.origin = Vec3::Constant(-kDomainHalf);
    grid.cell_size = 2.0 * kDomainHalf / static_cast<double>(resolution);
    const std::size_t bits =
        static_cast<std::size_t>(resolution) * resolution * resolution;
    grid.words.assign((bits + 63) / 64, 0);
    return grid;
}

std::size_t VoxelGrid::occupied_count() const {
    std::size_t n = 0;
    for (std::uint64_t w : words) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

VoxelGrid voxelize(const std::vector<TriMesh>& meshes, int resolution) {
    VoxelGrid grid = VoxelGrid::empty(resolution);
    for (const auto& mesh : meshes) {
        if (mesh.empty()) continue;
        const TriMesh welded = weld_vertices(mesh, 0.0);
        if (mesh_is_closed(welded)) {
            fill_parity(welded, grid);
        } else {
            fill_surface_band(welded, grid);
            grid.surface_band = true;
        }
    }
    return grid;
}

double voxel_iou(const VoxelGrid& a, const VoxelGrid& b, bool* both_empty) {
    if (a.resolution != b.resolution || a.cell_size != b.cell_size ||
        (a.origin - b.origin).cwiseAbs().maxCoeff() != 0.0)
        throw Error(ErrorCode::mismatch, "voxel_iou: incompatible grids");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.words.size(); ++i) {
        inter += static_cast<std::size_t>(std::popcount(a.words[i] & b.words[i]));
        uni += static_cast<std::size_t>(std::popcount(a.words[i] | b.words[i]));
    }
    if (both_empty) *both_empty = (uni == 0);
    if (uni == 0) return 1.0;  // identical all-zero grids
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace partkit
