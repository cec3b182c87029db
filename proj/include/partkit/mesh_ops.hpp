#ifndef PARTKIT_MESH_OPS_HPP
#define PARTKIT_MESH_OPS_HPP

#include <cstdint>

#include "partkit/types.hpp"

namespace partkit {

Aabb mesh_aabb(const TriMesh& mesh);
Aabb meshes_aabb(const std::vector<TriMesh>& meshes);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
double mesh_surface_area(const TriMesh& mesh);

/// Merge vertices closer than epsilon (Euclidean, transitively via
/// union-find), remap faces and drop faces that became degenerate.
/// epsilon = 0 still merges exact duplicates.
TriMesh weld_vertices(const TriMesh& mesh, double epsilon);

/// Split a welded mesh into face groups connected by shared vertices.
/// Components are ordered by descending face count, ties broken by the
/// smallest original face index. Each output keeps only its referenced
/// vertices. An empty mesh yields an empty list.
std::vector<TriMesh> connected_components(const TriMesh& mesh);

/// Absolute value of the signed tetrahedron sum about the vertex
/// centroid. Exact for watertight consistently-oriented meshes; for open
/// meshes it is a translation/rotation-invariant heuristic magnitude.
double mesh_volume(const TriMesh& mesh);

/// True when every undirected edge is shared by exactly two faces with
/// opposite winding (closed orientable surface).
bool mesh_is_closed(const TriMesh& mesh);

/// Center the joint AABB of all segments at the origin and scale so the
/// longest axis has extent exactly 1. All segments receive the same
/// transform, which is returned. Throws degenerate_shape when the joint
/// extent is zero.
std::pair<std::vector<TriMesh>, NormalizationTransform> normalize_shape(
    const std::vector<TriMesh>& segments);

/// n points drawn area-uniformly from the surface; normals are the face
/// normals of the source triangles. Deterministic per (mesh, n, seed).
SurfaceSamples sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed);

TriMesh concatenate(const TriMesh& a, const TriMesh& b);
TriMesh transformed(const TriMesh& mesh, const NormalizationTransform& t);

}  // namespace partkit

#endif
