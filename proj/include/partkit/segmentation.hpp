#ifndef PARTKIT_SEGMENTATION_HPP
#define PARTKIT_SEGMENTATION_HPP

#include <filesystem>

#include "partkit/obb.hpp"
#include "partkit/types.hpp"

namespace partkit {

/// One merge candidate: a mesh with cached volume and bounds.
struct Segment {
    TriMesh mesh;
    double volume = 0.0;
    Aabb aabb;
    int id = 0;

    static Segment make(TriMesh mesh, int id);
};

struct FilterThresholds {
    double max_mean_part_iou = 0.10;
    double max_largest_rest_ratio = 3.0;
    int max_components_per_part = 1;
    int part_count_min = 2;
    int part_count_max = 8;
};

struct PipelineParams {
    double weld_epsilon_factor = 1e-6;  // fraction of the pre-normalization AABB diagonal
    double planar_epsilon = 1e-3;       // normalized units
    double volume_epsilon = 1e-6;
    double contact_inflation = 5e-3;    // tau
    double merge_fraction = 0.2;        // k = max(1, ceil(fraction * n)) per iteration
    FilterThresholds filter;
};

struct ShapeStats {
    double mean_part_iou = 0.0;
    double largest_rest_ratio = 0.0;  // 0 when there are no "rest" parts
    int part_count = 0;
    std::vector<double> per_part_volumes;
    std::vector<int> per_part_components;
    std::vector<std::string> flags;
};

struct Provenance {
    std::string source;
    std::string config_hash;
};

struct ShapeRecord {
    std::vector<TriMesh> parts;
    std::vector<Obb> obbs;  // index-aligned with parts
    std::optional<std::string> prompt;
    ShapeStats stats;
    Provenance provenance;
};

/// Segments i and j are adjacent iff their AABBs, each inflated by tau,
/// intersect. Symmetric, no self edges.
std::vector<std::vector<int>> build_contact_graph(const std::vector<Segment>& segments,
                                                  double tau);

/// Fuse segments that are planar (min-OBB thinnest half extent below
/// planar_eps) or have negligible volume into their largest-volume
/// contact neighbor, then re-normalize. Segments with no neighbor are
/// left untouched and flagged. Identity inputs come back unchanged.
std::vector<Segment> auto_merge(const std::vector<Segment>& segments, double planar_eps,
                                double volume_eps, double tau,
                                std::vector<std::string>* flags = nullptr);

/// Volume-guided merging: per iteration, tag the k smallest segments
/// with their largest contact neighbor and execute all tags in one pass
/// (union-find collapses tag chains). Stops inside [target_min,
/// target_max] or when nothing can merge.
std::vector<Segment> progressive_merge(const std::vector<Segment>& segments, int target_min,
                                       int target_max, double tau, double merge_fraction,
                                       std::vector<std::string>* flags = nullptr);

ShapeStats compute_stats(const std::vector<TriMesh>& parts, const std::vector<Obb>& obbs,
                         std::vector<std::string> carried_flags = {});

struct FilterDecision {
    bool accepted = true;
    std::vector<std::string> reasons;
};

FilterDecision heuristic_filter(const ShapeRecord& record, const FilterThresholds& thresholds);

struct PipelineResult {
    bool accepted = false;
    ShapeRecord record;            // populated in both outcomes
    std::vector<std::string> reject_reasons;
};

/// load -> flatten -> weld -> components -> normalize -> auto-merge ->
/// re-normalize -> progressive merge -> per-part min OBB -> stats ->
/// heuristic filter. Deterministic for a fixed (source, params) pair.
PipelineResult run_pipeline(const std::filesystem::path& source, const PipelineParams& params,
                            const std::string& config_hash);

}  // namespace partkit

#endif
