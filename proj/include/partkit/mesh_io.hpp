#ifndef PARTKIT_MESH_IO_HPP
#define PARTKIT_MESH_IO_HPP

#include <filesystem>

#include "partkit/types.hpp"

namespace partkit {

enum class MeshFormat { obj, gltf, glb };

/// Guess the format from the file extension; throws format error for
/// anything other than .obj/.gltf/.glb.
MeshFormat format_from_path(const std::filesystem::path& path);

/// Load a mesh file as a flat list of meshes.
///
/// glTF/glb: the node hierarchy is discarded; every mesh primitive
/// becomes an independent TriMesh with its accumulated node transform
/// baked into the vertices. OBJ: each o/g group is one TriMesh.
///
/// Throws: format error (with byte offset) on parse failures;
/// invalid_argument naming the node for non-triangle primitive modes.
std::vector<TriMesh> load_mesh(const std::filesystem::path& path, MeshFormat format);
std::vector<TriMesh> load_mesh(const std::filesystem::path& path);

void write_obj(const TriMesh& mesh, const std::filesystem::path& path);

}  // namespace partkit

#endif
