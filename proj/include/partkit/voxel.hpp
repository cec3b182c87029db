#ifndef PARTKIT_VOXEL_HPP
#define PARTKIT_VOXEL_HPP

#include <cstdint>

#include "partkit/types.hpp"

namespace partkit {

/// Dense cubic occupancy grid. The default domain is the normalized
/// unit cube [-0.5, 0.5]^3 inflated by 5%.
struct VoxelGrid {
    int resolution = 0;
    Vec3 origin{Vec3::Zero()};  // min corner
    double cell_size = 0.0;
    std::vector<std::uint64_t> words;
    bool surface_band = false;  // set when any input fell back to band occupancy

    static VoxelGrid empty(int resolution);

    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * resolution + y) * resolution + x;
    }
    bool get(int x, int y, int z) const {
        const std::size_t i = index(x, y, z);
        return (words[i >> 6] >> (i & 63)) & 1u;
    }
    void set(int x, int y, int z) {
        const std::size_t i = index(x, y, z);
        words[i >> 6] |= std::uint64_t(1) << (i & 63);
    }
    Vec3 center_of(int x, int y, int z) const {
        return origin + cell_size * Vec3(x + 0.5, y + 0.5, z + 0.5);
    }
    std::size_t occupied_count() const;
    double cell_volume() const { return cell_size * cell_size * cell_size; }
};

/// Solid occupancy of the mesh union: a voxel center is occupied when
/// its +x ray parity against a closed mesh is odd (per mesh, OR-combined
/// so overlapping closed parts still union). Meshes that are not closed
/// fall back to surface-band occupancy and set the grid flag.
VoxelGrid voxelize(const std::vector<TriMesh>& meshes, int resolution);

/// |a AND b| / |a OR b|. Two all-zero grids compare as identical (1.0,
/// reported through both_empty). Throws on grid mismatch.
double voxel_iou(const VoxelGrid& a, const VoxelGrid& b, bool* both_empty = nullptr);

}  // namespace partkit

#endif
