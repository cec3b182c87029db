#ifndef PARTKIT_TEST_HELPERS_HPP
#define PARTKIT_TEST_HELPERS_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "partkit/mesh_ops.hpp"
#include "partkit/obb.hpp"
#include "partkit/rng.hpp"
#include "partkit/types.hpp"

namespace pktest {

using partkit::Mat3;
using partkit::Quat;
using partkit::TriMesh;
using partkit::Vec3;

inline TriMesh make_box(const Vec3& center, const Vec3& size) {
    partkit::Obb box;
    box.center = center;
    box.half_extents = 0.5 * size;
    box.rotation = Quat::Identity();
    TriMesh mesh = box.to_mesh();
    return mesh;
}

inline TriMesh make_box(const Vec3& center, double edge) {
    return make_box(center, Vec3(edge, edge, edge));
}

inline Quat random_quat(std::mt19937_64& rng) {
    // Uniform over SO(3) via normalized 4-gaussian.
    std::normal_distribution<double> gauss(0.0, 1.0);
    Quat q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    q.normalize();
    return q;
}

inline Vec3 random_point(std::mt19937_64& rng, double span = 1.0) {
    return Vec3(partkit::uniform_double(rng) * 2.0 - 1.0,
                partkit::uniform_double(rng) * 2.0 - 1.0,
                partkit::uniform_double(rng) * 2.0 - 1.0) *
           span;
}

inline TriMesh transformed_rigid(const TriMesh& mesh, const Quat& rotation,
                                 const Vec3& translation) {
    TriMesh out = mesh;
    for (auto& v : out.vertices) v = rotation * v + translation;
    return out;
}

// Closed lat-long sphere, watertight by construction.
inline TriMesh make_sphere(const Vec3& center, double radius, int stacks = 48, int slices = 96) {
    TriMesh mesh;
    mesh.vertices.push_back(center + Vec3(0, 0, radius));  // top pole
    for (int s = 1; s < stacks; ++s) {
        const double phi = M_PI * static_cast<double>(s) / stacks;
        for (int l = 0; l < slices; ++l) {
            const double theta = 2.0 * M_PI * static_cast<double>(l) / slices;
            mesh.vertices.push_back(center + radius * Vec3(std::sin(phi) * std::cos(theta),
                                                           std::sin(phi) * std::sin(theta),
                                                           std::cos(phi)));
        }
    }
    mesh.vertices.push_back(center + Vec3(0, 0, -radius));  // bottom pole
    const int bottom = static_cast<int>(mesh.vertices.size()) - 1;
    auto ring = [&](int s, int l) { return 1 + (s - 1) * slices + (l % slices); };

    for (int l = 0; l < slices; ++l) mesh.faces.push_back({0, ring(1, l), ring(1, l + 1)});
    for (int s = 1; s + 1 < stacks; ++s)
        for (int l = 0; l < slices; ++l) {
            const int a = ring(s, l), b = ring(s, l + 1), c = ring(s + 1, l),
                      d = ring(s + 1, l + 1);
            mesh.faces.push_back({a, c, d});
            mesh.faces.push_back({a, d, b});
        }
    for (int l = 0; l < slices; ++l)
        mesh.faces.push_back({bottom, ring(stacks - 1, l + 1), ring(stacks - 1, l)});
    return mesh;
}

// Fresh scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("partkit_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace pktest

#endif
