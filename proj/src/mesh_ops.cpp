#include "partkit/mesh_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <unordered_map>

#include "partkit/rng.hpp"

namespace partkit {

Aabb mesh_aabb(const TriMesh& mesh) {
    Aabb box;
    for (const auto& v : mesh.vertices) box.expand(v);
    return box;
}

Aabb meshes_aabb(const std::vector<TriMesh>& meshes) {
    Aabb box;
    for (const auto& m : meshes)
        for (const auto& v : m.vertices) box.expand(v);
    return box;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

double mesh_surface_area(const TriMesh& mesh) {
    double area = 0.0;
    for (const auto& f : mesh.faces)
        area += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    return area;
}

namespace {

// Disjoint-set over vertex ids.
struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct CellKeyHash {
    std::size_t operator()(const CellKey& k) const {
        std::uint64_t h = 1469598103934665603ull;
        for (std::int64_t v : {k.x, k.y, k.z}) {
            h ^= static_cast<std::uint64_t>(v);
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

}  // namespace

TriMesh weld_vertices(const TriMesh& mesh, double epsilon) {
    if (epsilon < 0.0) throw Error(ErrorCode::invalid_argument, "weld epsilon must be >= 0");
    const std::size_t n = mesh.vertices.size();
    UnionFind uf(n);

    if (epsilon == 0.0) {
        // Exact duplicates only.
        std::unordered_map<CellKey, int, CellKeyHash> seen;
        seen.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3& v = mesh.vertices[i];
            CellKey key;
            std::memcpy(&key.x, &v.x(), sizeof(double));
            std::memcpy(&key.y, &v.y(), sizeof(double));
            std::memcpy(&key.z, &v.z(), sizeof(double));
            auto [it, inserted] = seen.emplace(key, static_cast<int>(i));
            if (!inserted) uf.unite(it->second, static_cast<int>(i));
        }
    } else {
        // Grid hash with cell size epsilon; candidates live in the 27
        // surrounding cells.
        std::unordered_map<CellKey, std::vector<int>, CellKeyHash> grid;
        grid.reserve(n);
        const double inv = 1.0 / epsilon;
        auto cell_of = [&](const Vec3& v) {
            return CellKey{static_cast<std::int64_t>(std::floor(v.x() * inv)),
                           static_cast<std::int64_t>(std::floor(v.y() * inv)),
                           static_cast<std::int64_t>(std::floor(v.z() * inv))};
        };
        const double eps2 = epsilon * epsilon;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3& v = mesh.vertices[i];
            const CellKey c = cell_of(v);
            for (std::int64_t dx = -1; dx <= 1; ++dx)
                for (std::int64_t dy = -1; dy <= 1; ++dy)
                    for (std::int64_t dz = -1; dz <= 1; ++dz) {
                        auto it = grid.find(CellKey{c.x + dx, c.y + dy, c.z + dz});
                        if (it == grid.end()) continue;
                        for (int j : it->second)
                            if ((mesh.vertices[j] - v).squaredNorm() <= eps2)
                                uf.unite(j, static_cast<int>(i));
                    }
            grid[c].push_back(static_cast<int>(i));
        }
    }

    // Representative = smallest vertex id of each cluster; keeps welded
    // points on the original surface and makes the result deterministic.
    std::vector<int> remap(n, -1);
    TriMesh out;
    out.name = mesh.name;
    for (std::size_t i = 0; i < n; ++i) {
        const int root = uf.find(static_cast<int>(i));
        if (remap[root] < 0) {
            remap[root] = static_cast<int>(out.vertices.size());
            out.vertices.push_back(mesh.vertices[root]);
        }
        remap[i] = remap[root];
    }
    out.faces.reserve(mesh.faces.size());
    for (const auto& f : mesh.faces) {
        const std::array<int, 3> g{remap[f[0]], remap[f[1]], remap[f[2]]};
        if (g[0] == g[1] || g[1] == g[2] || g[0] == g[2]) continue;  // degenerate after weld
        out.faces.push_back(g);
    }
    return out;
}

std::vector<TriMesh> connected_components(const TriMesh& mesh) {
    if (mesh.faces.empty()) return {};
    UnionFind uf(mesh.vertices.size());
    for (const auto& f : mesh.faces) {
        uf.unite(f[0], f[1]);
        uf.unite(f[1], f[2]);
    }

    // Group faces by their root vertex.
    std::unordered_map<int, std::vector<int>> groups;
    for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi)
        groups[uf.find(mesh.faces[fi][0])].push_back(static_cast<int>(fi));

    std::vector<std::vector<int>> ordered;
    ordered.reserve(groups.size());
    for (auto& [root, faces] : groups) ordered.push_back(std::move(faces));
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a.front() < b.front();
    });

    std::vector<TriMesh> out;
    out.reserve(ordered.size());
    std::vector<int> remap(mesh.vertices.size());
    for (const auto& faces : ordered) {
        TriMesh comp;
        comp.name = mesh.name;
        std::fill(remap.begin(), remap.end(), -1);
        for (int fi : faces) {
            std::array<int, 3> g;
            for (int k = 0; k < 3; ++k) {
                const int v = mesh.faces[fi][k];
                if (remap[v] < 0) {
                    remap[v] = static_cast<int>(comp.vertices.size());
                    comp.vertices.push_back(mesh.vertices[v]);
                }
                g[k] = remap[v];
            }
            comp.faces.push_back(g);
        }
        out.push_back(std::move(comp));
    }
    return out;
}

double mesh_volume(const TriMesh& mesh) {
    if (mesh.faces.empty() || mesh.vertices.empty()) return 0.0;
    // Reference point tied to the mesh keeps the value invariant under
    // rigid transforms even for open meshes.
    Vec3 centroid = Vec3::Zero();
    for (const auto& v : mesh.vertices) centroid += v;
    centroid /= static_cast<double>(mesh.vertices.size());

    double six_vol = 0.0;
    for (const auto& f : mesh.faces) {
        const Vec3 a = mesh.vertices[f[0]] - centroid;
        const Vec3 b = mesh.vertices[f[1]] - centroid;
        const Vec3 c = mesh.vertices[f[2]] - centroid;
        six_vol += a.dot(b.cross(c));
    }
    return std::abs(six_vol) / 6.0;
}

bool mesh_is_closed(const TriMesh& mesh) {
    if (mesh.faces.empty()) return false;
    // Every directed edge must be matched by exactly one reverse edge.
    std::unordered_map<std::uint64_t, int> edges;
    edges.reserve(mesh.faces.size() * 3);
    auto key = [](int a, int b) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
               static_cast<std::uint32_t>(b);
    };
    for (const auto& f : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            const int a = f[k], b = f[(k + 1) % 3];
            edges[key(a, b)] += 1;
        }
    }
    for (const auto& [k, count] : edges) {
        if (count != 1) return false;
        const int a = static_cast<int>(k >> 32);
        const int b = static_cast<int>(k & 0xffffffffu);
        auto rev = edges.find(key(b, a));
        if (rev == edges.end() || rev->second != 1) return false;
    }
    return true;
}

std::pair<std::vector<TriMesh>, NormalizationTransform> normalize_shape(
    const std::vector<TriMesh>& segments) {
    Aabb box = meshes_aabb(segments);
    if (!box.valid())
        throw Error(ErrorCode::empty_input, "normalize_shape: no vertices in input segments");
    const double longest = box.extents().maxCoeff();
    if (longest <= 0.0)
        throw Error(ErrorCode::degenerate_shape, "normalize_shape: shape has zero extent");

    NormalizationTransform t;
    t.translation = -box.center();
    t.scale = 1.0 / longest;

    std::vector<TriMesh> out;
    out.reserve(segments.size());
    for (const auto& seg : segments) out.push_back(transformed(seg, t));
    return {std::move(out), t};
}

SurfaceSamples sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw Error(ErrorCode::invalid_argument, "sample_surface: n must be > 0");
    std::vector<double> cumulative;
    cumulative.reserve(mesh.faces.size());
    double total = 0.0;
    for (const auto& f : mesh.faces) {
        total += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
        cumulative.push_back(total);
    }
    if (total <= 0.0)
        throw Error(ErrorCode::degenerate_shape, "sample_surface: mesh has zero surface area");

    std::mt19937_64 rng(seed);
    SurfaceSamples out;
    out.points.reserve(n);
    out.normals.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = uniform_double(rng) * total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), pick);
        const std::size_t fi =
            std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                  mesh.faces.size() - 1);
        const auto& f = mesh.faces[fi];
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];

        double u = uniform_double(rng);
        double v = uniform_double(rng);
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        out.points.push_back(a + u * (b - a) + v * (c - a));
        Vec3 normal = (b - a).cross(c - a);
        const double len = normal.norm();
        out.normals.push_back(len > 0.0 ? Vec3(normal / len) : Vec3(0, 0, 1));
    }
    return out;
}

TriMesh concatenate(const TriMesh& a, const TriMesh& b) {
    TriMesh out = a;
    const int offset = static_cast<int>(a.vertices.size());
    out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
    out.faces.reserve(a.faces.size() + b.faces.size());
    for (const auto& f : b.faces)
        out.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
    return out;
}

TriMesh transformed(const TriMesh& mesh, const NormalizationTransform& t) {
    TriMesh out = mesh;
    for (auto& v : out.vertices) v = t.apply(v);
    return out;
}

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::io: return "io";
        case ErrorCode::format: return "format";
        case ErrorCode::schema: return "schema";
        case ErrorCode::degenerate_shape: return "degenerate-shape";
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::unavailable: return "unavailable";
        case ErrorCode::empty_input: return "empty-input";
        case ErrorCode::mismatch: return "mismatch";
        case ErrorCode::internal: return "internal";
    }
    return "unknown";
}

}  // namespace partkit
