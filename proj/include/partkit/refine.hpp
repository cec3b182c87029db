#ifndef PARTKIT_REFINE_HPP
#define PARTKIT_REFINE_HPP

#include "partkit/metrics.hpp"
#include "partkit/types.hpp"

namespace partkit {

/// Shape-preserving map x -> scale * (rotation * x) + translation.
struct SimilarityTransform {
    double scale = 1.0;
    Quat rotation{Quat::Identity()};
    Vec3 translation{Vec3::Zero()};

    Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
    SimilarityTransform inverse() const;

    /// outer(inner(x)) as a single transform.
    static SimilarityTransform compose(const SimilarityTransform& outer,
                                       const SimilarityTransform& inner);
};

TriMesh apply_similarity(const TriMesh& mesh, const SimilarityTransform& t);
Obb apply_similarity(const Obb& box, const SimilarityTransform& t);

struct BeamConfig {
    int beam_width = 8;
    int max_iterations = 50;
    double translation_step = 0.02;
    double scale_step = 0.02;        // multiplicative: s *= 1 +- step
    double rotation_step_deg = 2.0;  // about the world axes
    double refine_factor = 0.5;
    double epsilon = 1e-4;   // minimum score gain that counts as progress
    double min_step = 1e-4;  // all steps below this terminates
};

struct BeamTraceRow {
    int iteration = 0;
    double best_score = 0.0;
    double translation_step = 0.0;
    double scale_step = 0.0;
    double rotation_step_rad = 0.0;
};

struct OptimizeResult {
    SimilarityTransform transform;
    double initial_score = 0.0;
    double final_score = 0.0;
    std::vector<BeamTraceRow> trace;
};

/// Beam search over one global similarity transform applied jointly to
/// all parts, scored by mean part-IoU against the layout. Because a
/// similarity transform maps minimum OBBs to minimum OBBs, part boxes
/// are computed once and transformed per candidate. The returned score
/// never falls below the identity score.
OptimizeResult optimize_layout(const std::vector<TriMesh>& parts, const Layout& layout,
                               const BeamConfig& cfg);

struct ArtifactEntry {
    int part_index = 0;
    int components_before = 1;
    int removed_components = 0;
    double largest_component_iou = 0.0;
    bool flagged = false;  // multi-component but below theta; left untouched
};

struct ArtifactReport {
    std::vector<ArtifactEntry> entries;  // one per part, in order
};

/// For each multi-component part: when the largest component's min-OBB
/// IoU with the control box reaches theta, keep only that component;
/// otherwise leave the part untouched and flag it. Single-component
/// parts pass through unchanged. Idempotent.
std::pair<std::vector<TriMesh>, ArtifactReport> filter_artifacts(
    const std::vector<TriMesh>& parts, const Layout& layout, double theta);

}  // namespace partkit

#endif
