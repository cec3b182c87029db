#include "partkit/refine.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "partkit/mesh_ops.hpp"

namespace partkit {

SimilarityTransform SimilarityTransform::inverse() const {
    SimilarityTransform inv;
    inv.scale = 1.0 / scale;
    inv.rotation = rotation.conjugate();
    inv.translation = -(inv.scale * (inv.rotation * translation));
    return inv;
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& outer,
                                                 const SimilarityTransform& inner) {
    SimilarityTransform t;
    t.scale = outer.scale * inner.scale;
    t.rotation = (outer.rotation * inner.rotation).normalized();
    t.translation = outer.scale * (outer.rotation * inner.translation) + outer.translation;
    return t;
}

TriMesh apply_similarity(const TriMesh& mesh, const SimilarityTransform& t) {
    TriMesh out = mesh;
    for (auto& v : out.vertices) v = t.apply(v);
    return out;
}

Obb apply_similarity(const Obb& box, const SimilarityTransform& t) {
    Obb out;
    out.center = t.apply(box.center);
    out.half_extents = t.scale * box.half_extents;
    out.rotation = (t.rotation * box.rotation).normalized();
    if (out.rotation.w() < 0) out.rotation.coeffs() = -out.rotation.coeffs();
    return out;
}

namespace {

std::array<double, 8> transform_key(const SimilarityTransform& t) {
    return {t.translation.x(), t.translation.y(), t.translation.z(), t.scale,
            t.rotation.x(),    t.rotation.y(),    t.rotation.z(),    t.rotation.w()};
}

struct BeamState {
    SimilarityTransform transform;
    double score = 0.0;
};

}  // namespace

OptimizeResult optimize_layout(const std::vector<TriMesh>& parts, const Layout& layout,
                               const BeamConfig& cfg) {
    if (parts.size() != layout.boxes.size())
        throw Error(ErrorCode::mismatch, "optimize_layout: parts/boxes size mismatch");
    if (cfg.beam_width < 1)
        throw Error(ErrorCode::invalid_argument, "optimize_layout: beam_width must be >= 1");

    // Part min-OBBs are computed once; candidates only transform them.
    std::vector<std::optional<Obb>> part_boxes(parts.size());
    bool any_geometry = false;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].vertices.empty()) continue;
        part_boxes[i] = min_obb(parts[i].vertices).box;
        any_geometry = true;
    }
    if (!any_geometry) throw Error(ErrorCode::empty_input, "optimize_layout: all parts empty");

    auto score_of = [&](const SimilarityTransform& t) {
        double sum = 0.0;
        for (std::size_t i = 0; i < part_boxes.size(); ++i)
            if (part_boxes[i]) sum += obb_iou(apply_similarity(*part_boxes[i], t), layout.boxes[i]);
        return sum / static_cast<double>(part_boxes.size());
    };

    OptimizeResult result;
    result.initial_score = score_of(SimilarityTransform{});

    std::vector<BeamState> beam{{SimilarityTransform{}, result.initial_score}};
    BeamState best = beam.front();

    double step_t = cfg.translation_step;
    double step_s = cfg.scale_step;
    double step_r = cfg.rotation_step_deg * M_PI / 180.0;

    for (int iteration = 0; iteration < cfg.max_iterations; ++iteration) {
        if (step_t < cfg.min_step && step_s < cfg.min_step && step_r < cfg.min_step) break;

        // 14 axis moves per state: +-t per axis, +-s, +-r per axis.
        std::vector<BeamState> pool = beam;
        for (const auto& state : beam) {
            std::vector<SimilarityTransform> moves;
            for (int axis = 0; axis < 3; ++axis)
                for (double sign : {1.0, -1.0}) {
                    SimilarityTransform m;
                    m.translation = sign * step_t * Vec3::Unit(axis);
                    moves.push_back(m);
                }
            for (double sign : {1.0, -1.0}) {
                SimilarityTransform m;
                m.scale = 1.0 + sign * step_s;
                if (m.scale > 0.0) moves.push_back(m);
            }
            for (int axis = 0; axis < 3; ++axis)
                for (double sign : {1.0, -1.0}) {
                    SimilarityTransform m;
                    m.rotation = Quat(Eigen::AngleAxisd(sign * step_r, Vec3::Unit(axis)));
                    moves.push_back(m);
                }
            for (const auto& m : moves) {
                const SimilarityTransform t = SimilarityTransform::compose(m, state.transform);
                pool.push_back({t, score_of(t)});
            }
        }

        // Deterministic selection: score descending, then lexicographic
        // transform; duplicates collapse to one entry.
        std::sort(pool.begin(), pool.end(), [](const BeamState& a, const BeamState& b) {
            if (a.score != b.score) return a.score > b.score;
            return transform_key(a.transform) < transform_key(b.transform);
        });
        std::vector<BeamState> next;
        for (const auto& state : pool) {
            if (!next.empty() &&
                transform_key(next.back().transform) == transform_key(state.transform))
                continue;
            next.push_back(state);
            if (static_cast<int>(next.size()) >= cfg.beam_width) break;
        }

        const double gain = next.front().score - best.score;
        if (next.front().score > best.score) best = next.front();
        beam = std::move(next);

        result.trace.push_back({iteration, best.score, step_t, step_s, step_r});
        if (gain <= cfg.epsilon) {
            step_t *= cfg.refine_factor;
            step_s *= cfg.refine_factor;
            step_r *= cfg.refine_factor;
        }
    }

    result.transform = best.transform;
    result.final_score = best.score;
    return result;
}

std::pair<std::vector<TriMesh>, ArtifactReport> filter_artifacts(
    const std::vector<TriMesh>& parts, const Layout& layout, double theta) {
    if (parts.size() != layout.boxes.size())
        throw Error(ErrorCode::mismatch, "filter_artifacts: parts/boxes size mismatch");
    if (!(theta > 0.0 && theta <= 1.0))
        throw Error(ErrorCode::invalid_argument, "filter_artifacts: theta must be in (0, 1]");

    std::vector<TriMesh> out;
    out.reserve(parts.size());
    ArtifactReport report;

    for (std::size_t i = 0; i < parts.size(); ++i) {
        ArtifactEntry entry;
        entry.part_index = static_cast<int>(i);

        const auto components = connected_components(weld_vertices(parts[i], 0.0));
        entry.components_before = static_cast<int>(components.size());
        if (components.size() <= 1) {
            out.push_back(parts[i]);  // bit-identical pass-through
            report.entries.push_back(entry);
            continue;
        }

        // Largest by surface area: robust for the thin geometry where
        // these artifacts are most common.
        std::size_t largest = 0;
        double largest_area = -1.0;
        for (std::size_t c = 0; c < components.size(); ++c) {
            const double area = mesh_surface_area(components[c]);
            if (area > largest_area) {
                largest_area = area;
                largest = c;
            }
        }
        entry.largest_component_iou =
            obb_iou(min_obb(components[largest].vertices).box, layout.boxes[i]);

        if (entry.largest_component_iou >= theta) {
            TriMesh kept = components[largest];
            kept.name = parts[i].name;
            entry.removed_components = entry.components_before - 1;
            out.push_back(std::move(kept));
        } else {
            entry.flagged = true;
            out.push_back(parts[i]);
        }
        report.entries.push_back(entry);
    }
    return {std::move(out), std::move(report)};
}

}  // namespace partkit
