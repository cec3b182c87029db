#include "partkit/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "partkit/mesh_io.hpp"
#include "partkit/mesh_ops.hpp"
#include "partkit/metrics.hpp"

namespace partkit {

Segment Segment::make(TriMesh mesh, int id) {
    Segment s;
    s.volume = mesh_volume(mesh);
    s.aabb = mesh_aabb(mesh);
    s.mesh = std::move(mesh);
    s.id = id;
    return s;
}

std::vector<std::vector<int>> build_contact_graph(const std::vector<Segment>& segments,
                                                  double tau) {
    if (tau < 0.0) throw Error(ErrorCode::invalid_argument, "contact graph: tau must be >= 0");
    const int n = static_cast<int>(segments.size());
    std::vector<std::vector<int>> adjacency(n);
    for (int i = 0; i < n; ++i) {
        const Aabb a = segments[i].aabb.inflated(tau);
        for (int j = i + 1; j < n; ++j) {
            if (a.intersects(segments[j].aabb.inflated(tau))) {
                adjacency[i].push_back(j);
                adjacency[j].push_back(i);
            }
        }
    }
    return adjacency;
}

namespace {

struct MergeSet {
    std::vector<int> parent;
    explicit MergeSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    // Directed merge: `from` joins `into`'s group.
    void merge(int from, int into) {
        const int a = find(from), b = find(into);
        if (a != b) parent[a] = b;
    }
};

// Concatenate each group's meshes in ascending member id and rebuild the
// cached fields. Group id = smallest member id, groups ordered by it.
std::vector<Segment> collapse_groups(const std::vector<Segment>& segments, MergeSet& sets) {
    const int n = static_cast<int>(segments.size());
    std::vector<std::vector<int>> groups(n);
    for (int i = 0; i < n; ++i) groups[sets.find(i)].push_back(i);

    std::vector<Segment> out;
    for (int root = 0; root < n; ++root) {
        auto& members = groups[root];
        if (members.empty()) continue;
        std::sort(members.begin(), members.end(),
                  [&](int a, int b) { return segments[a].id < segments[b].id; });
        TriMesh merged = segments[members.front()].mesh;
        for (std::size_t k = 1; k < members.size(); ++k)
            merged = concatenate(merged, segments[members[k]].mesh);
        int min_id = segments[members.front()].id;
        for (int m : members) min_id = std::min(min_id, segments[m].id);
        out.push_back(Segment::make(std::move(merged), min_id));
    }
    std::sort(out.begin(), out.end(), [](const Segment& a, const Segment& b) { return a.id < b.id; });
    return out;
}

std::vector<Segment> renormalize(const std::vector<Segment>& segments) {
    std::vector<TriMesh> meshes;
    meshes.reserve(segments.size());
    for (const auto& s : segments) meshes.push_back(s.mesh);
    auto [normalized, transform] = normalize_shape(meshes);
    (void)transform;
    std::vector<Segment> out;
    out.reserve(segments.size());
    for (std::size_t i = 0; i < normalized.size(); ++i)
        out.push_back(Segment::make(std::move(normalized[i]), segments[i].id));
    return out;
}

}  // namespace

std::vector<Segment> auto_merge(const std::vector<Segment>& segments, double planar_eps,
                                double volume_eps, double tau, std::vector<std::string>* flags) {
    if (segments.empty()) return {};
    const auto adjacency = build_contact_graph(segments, tau);
    const int n = static_cast<int>(segments.size());

    MergeSet sets(n);
    bool any_merge = false;
    for (int i = 0; i < n; ++i) {
        const auto& seg = segments[i];
        bool tiny = seg.volume < volume_eps;
        if (!tiny && !seg.mesh.vertices.empty()) {
            const MinObbResult obb = min_obb(seg.mesh.vertices);
            tiny = obb.box.half_extents.minCoeff() < planar_eps;
        }
        if (!tiny) continue;

        int target = -1;
        double target_volume = -1.0;
        for (int j : adjacency[i]) {
            if (segments[j].volume > target_volume) {
                target_volume = segments[j].volume;
                target = j;
            }
        }
        if (target < 0) {
            if (flags)
                flags->push_back("auto-merge-isolated:" + std::to_string(seg.id));
            continue;
        }
        sets.merge(i, target);
        any_merge = true;
    }
    if (!any_merge) return segments;
    return renormalize(collapse_groups(segments, sets));
}

std::vector<Segment> progressive_merge(const std::vector<Segment>& segments, int target_min,
                                       int target_max, double tau, double merge_fraction,
                                       std::vector<std::string>* flags) {
    if (segments.empty()) return {};
    if (target_min < 1 || target_max < target_min)
        throw Error(ErrorCode::invalid_argument, "progressive_merge: bad target range");

    std::vector<Segment> current = segments;
    std::set<int> flagged_isolated;
    while (static_cast<int>(current.size()) > target_max) {
        const int n = static_cast<int>(current.size());
        const auto adjacency = build_contact_graph(current, tau);

        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (current[a].volume != current[b].volume)
                return current[a].volume < current[b].volume;
            return current[a].id < current[b].id;
        });

        int budget = std::max(1, static_cast<int>(std::ceil(merge_fraction * n)));
        budget = std::min(budget, n - target_min);  // never drop below the range floor

        MergeSet sets(n);
        int tagged = 0;
        for (int idx = 0; idx < n && tagged < budget; ++idx) {
            const int i = order[idx];
            int target = -1;
            double target_volume = -1.0;
            for (int j : adjacency[i]) {
                if (current[j].volume > target_volume ||
                    (current[j].volume == target_volume && target >= 0 &&
                     current[j].id < current[target].id)) {
                    target_volume = current[j].volume;
                    target = j;
                }
            }
            if (target < 0) {
                // Isolated: skip without spending the budget, flag once.
                if (flags && flagged_isolated.insert(current[i].id).second)
                    flags->push_back("merge-isolated:" + std::to_string(current[i].id));
                continue;
            }
            sets.merge(i, target);
            ++tagged;
        }
        if (tagged == 0) {
            if (flags) flags->push_back("progressive-merge-stalled:" + std::to_string(n));
            break;  // nothing has a neighbor
        }
        current = collapse_groups(current, sets);
    }
    return current;
}

ShapeStats compute_stats(const std::vector<TriMesh>& parts, const std::vector<Obb>& obbs,
                         std::vector<std::string> carried_flags) {
    if (parts.size() != obbs.size())
        throw Error(ErrorCode::mismatch, "compute_stats: parts/obbs size mismatch");
    ShapeStats stats;
    stats.flags = std::move(carried_flags);
    stats.part_count = static_cast<int>(parts.size());

    for (std::size_t i = 0; i < parts.size(); ++i) {
        stats.per_part_volumes.push_back(mesh_volume(parts[i]));
        const auto comps = connected_components(weld_vertices(parts[i], 0.0));
        stats.per_part_components.push_back(static_cast<int>(comps.size()));
        if (!mesh_is_closed(weld_vertices(parts[i], 0.0)))
            stats.flags.push_back("open-mesh:" + std::to_string(i));
    }

    // Mean pairwise part-OBB IoU; single-part shapes have no pairs.
    if (obbs.size() >= 2) {
        double iou_sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < obbs.size(); ++i)
            for (std::size_t j = i + 1; j < obbs.size(); ++j) {
                iou_sum += obb_iou(obbs[i], obbs[j]);
                ++pairs;
            }
        stats.mean_part_iou = iou_sum / static_cast<double>(pairs);
    }

    // Largest-to-rest volume ratio; 0 when there is nothing to compare
    // against (single part) so monolithic shapes are not auto-rejected.
    if (!stats.per_part_volumes.empty()) {
        const double largest =
            *std::max_element(stats.per_part_volumes.begin(), stats.per_part_volumes.end());
        double rest = 0.0;
        for (double v : stats.per_part_volumes) rest += v;
        rest -= largest;
        stats.largest_rest_ratio = rest > 0.0 ? largest / rest : 0.0;
    }
    return stats;
}

FilterDecision heuristic_filter(const ShapeRecord& record, const FilterThresholds& thresholds) {
    FilterDecision decision;
    const ShapeStats& s = record.stats;
    if (s.largest_rest_ratio > thresholds.max_largest_rest_ratio)
        decision.reasons.push_back("ratio");
    if (s.mean_part_iou > thresholds.max_mean_part_iou) decision.reasons.push_back("iou");
    for (int c : s.per_part_components)
        if (c > thresholds.max_components_per_part) {
            decision.reasons.push_back("components");
            break;
        }
    if (s.part_count < thresholds.part_count_min || s.part_count > thresholds.part_count_max)
        decision.reasons.push_back("part-count");
    decision.accepted = decision.reasons.empty();
    return decision;
}

PipelineResult run_pipeline(const std::filesystem::path& source, const PipelineParams& params,
                            const std::string& config_hash) {
    auto staged = [&](const char* stage, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            throw Error(e.code(), std::string(stage) + ": " + e.what());
        }
    };

    const std::vector<TriMesh> raw =
        staged("load", [&] { return load_mesh(source); });
    if (raw.empty()) throw Error(ErrorCode::empty_input, "load: no meshes in " + source.string());

    TriMesh soup = raw.front();
    for (std::size_t i = 1; i < raw.size(); ++i) soup = concatenate(soup, raw[i]);

    const double weld_eps = params.weld_epsilon_factor * mesh_aabb(soup).diagonal();
    const TriMesh welded = staged("weld", [&] { return weld_vertices(soup, weld_eps); });
    const std::vector<TriMesh> comps =
        staged("components", [&] { return connected_components(welded); });
    if (comps.empty())
        throw Error(ErrorCode::degenerate_shape, "components: no faces in " + source.string());

    auto [normalized, transform] = staged("normalize", [&] { return normalize_shape(comps); });
    (void)transform;

    std::vector<Segment> segments;
    segments.reserve(normalized.size());
    for (std::size_t i = 0; i < normalized.size(); ++i)
        segments.push_back(Segment::make(std::move(normalized[i]), static_cast<int>(i)));

    std::vector<std::string> flags;
    segments = staged("auto-merge", [&] {
        return auto_merge(segments, params.planar_epsilon, params.volume_epsilon,
                          params.contact_inflation, &flags);
    });
    segments = staged("progressive-merge", [&] {
        return progressive_merge(segments, params.filter.part_count_min,
                                 params.filter.part_count_max, params.contact_inflation,
                                 params.merge_fraction, &flags);
    });

    ShapeRecord record;
    record.provenance = {source.string(), config_hash};
    staged("obb", [&] {
        for (std::size_t i = 0; i < segments.size(); ++i) {
            const MinObbResult r = min_obb(segments[i].mesh.vertices);
            if (r.degenerate) flags.push_back("obb-degenerate:" + std::to_string(i));
            record.obbs.push_back(r.box);
            record.parts.push_back(std::move(segments[i].mesh));
            char label[16];
            std::snprintf(label, sizeof(label), "part_%03zu", i);
            record.parts.back().name = label;
        }
        return 0;
    });
    record.stats =
        staged("stats", [&] { return compute_stats(record.parts, record.obbs, flags); });

    const FilterDecision decision =
        staged("filter", [&] { return heuristic_filter(record, params.filter); });

    PipelineResult result;
    result.accepted = decision.accepted;
    result.record = std::move(record);
    result.reject_reasons = decision.reasons;
    return result;
}

}  // namespace partkit
