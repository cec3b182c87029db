#ifndef PARTKIT_METRICS_HPP
#define PARTKIT_METRICS_HPP

#include <cstdint>

#include "partkit/obb.hpp"
#include "partkit/types.hpp"

namespace partkit {

/// Ordered control boxes plus the shape-level text prompt.
struct Layout {
    std::vector<Obb> boxes;
    std::string prompt;
};

inline constexpr int kMaxLayoutBoxes = 8;

/// Exact box-box intersection over union. The intersection volume comes
/// from clipping b's polytope against a's six half-spaces and applying
/// the divergence theorem; no sampling involved.
double obb_iou(const Obb& a, const Obb& b);

/// Exact intersection volume behind obb_iou; exposed for oracles.
double obb_intersection_volume(const Obb& a, const Obb& b);

struct PartIou {
    std::vector<double> per_part;
    double mean = 0.0;
};

/// Per-part obb_iou between each part's min OBB and its control box.
/// Empty parts score 0. Throws mismatch when sizes differ.
PartIou part_iou(const std::vector<TriMesh>& parts, const Layout& layout);

enum class ObjectBoxMode { min_obb, aabb };

struct ObjectIouResult {
    double value = 0.0;
    double standard_error = 0.0;
};

/// IoU between the whole object's bounding box and the union of all
/// control boxes, estimated by stratified (jittered-grid) Monte Carlo
/// over the joint AABB. Deterministic per seed.
ObjectIouResult object_iou(const std::vector<TriMesh>& parts, const Layout& layout,
                           std::size_t mc_samples = 1u << 20, std::uint64_t seed = 0xC0DE,
                           ObjectBoxMode mode = ObjectBoxMode::min_obb);

struct Histogram {
    std::vector<double> bin_edges;  // size = counts.size() + 1
    std::vector<std::size_t> counts;
    std::size_t overflow = 0;  // mass above the last edge
    double threshold = 0.0;    // reference marker, not a bin edge
    double above_threshold_fraction = 0.0;
};

struct StatsReport {
    Histogram mean_part_iou;      // over [0,1], threshold marker 0.10
    Histogram largest_rest_ratio; // over [0,10], threshold marker 3.0
    std::vector<std::size_t> part_count_counts;  // index 0 -> 1 part, up to 16
    std::size_t sample_count = 0;
};

struct RecordStatsView {
    double mean_part_iou = 0.0;
    double largest_rest_ratio = 0.0;
    int part_count = 0;
};

StatsReport dataset_stats(const std::vector<RecordStatsView>& records, std::size_t bins);

}  // namespace partkit

#endif
