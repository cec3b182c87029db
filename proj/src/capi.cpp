#include "partkit.h"

#include <cstring>
#include <memory>
#include <filesystem>

#include "partkit/caption.hpp"
#include "partkit/config.hpp"
#include "partkit/mesh_io.hpp"
#include "partkit/mesh_ops.hpp"
#include "partkit/metrics.hpp"
#include "partkit/refine.hpp"
#include "partkit/scenario.hpp"
#include "partkit/segmentation.hpp"
#include "partkit/serialization.hpp"
#include "partkit/voxel.hpp"

using nlohmann::json;

struct pk_context {
    partkit::PipelineConfig config;
    std::string last_error;
};

namespace {

constexpr const char* kVersion = "0.1.0";

pk_status status_of(partkit::ErrorCode code) {
    using partkit::ErrorCode;
    switch (code) {
        case ErrorCode::io: return PK_ERROR_IO;
        case ErrorCode::format: return PK_ERROR_FORMAT;
        case ErrorCode::schema: return PK_ERROR_SCHEMA;
        case ErrorCode::degenerate_shape: return PK_ERROR_DEGENERATE;
        case ErrorCode::invalid_argument:
        case ErrorCode::empty_input:
        case ErrorCode::mismatch: return PK_ERROR_ARGUMENT;
        case ErrorCode::unavailable: return PK_ERROR_UNAVAILABLE;
        case ErrorCode::internal: return PK_ERROR_INTERNAL;
    }
    return PK_ERROR_INTERNAL;
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Run `fn`, translating exceptions into status codes and recording the
// message on the context.
template <typename Fn>
pk_status guarded(pk_context* ctx, Fn&& fn) {
    if (!ctx) return PK_ERROR_ARGUMENT;
    ctx->last_error.clear();
    try {
        return fn();
    } catch (const partkit::Error& e) {
        ctx->last_error = e.what();
        return status_of(e.code());
    } catch (const nlohmann::json::exception& e) {
        ctx->last_error = e.what();
        return PK_ERROR_SCHEMA;
    } catch (const std::exception& e) {
        ctx->last_error = e.what();
        return PK_ERROR_INTERNAL;
    } catch (...) {
        ctx->last_error = "unknown failure";
        return PK_ERROR_INTERNAL;
    }
}

pk_status require(pk_context* ctx, bool ok, const char* message) {
    if (ok) return PK_OK;
    if (ctx) ctx->last_error = message;
    return PK_ERROR_ARGUMENT;
}

partkit::ShapeRecord load_record_checked(const char* path) {
    return partkit::load_record(std::filesystem::path(path));
}

}  // namespace

extern "C" {

pk_context* pk_context_create(const char* config_json_path) {
    try {
        auto ctx = std::make_unique<pk_context>();
        if (config_json_path && config_json_path[0] != '\0')
            ctx->config = partkit::PipelineConfig::load(config_json_path);
        return ctx.release();
    } catch (...) {
        return nullptr;
    }
}

void pk_context_destroy(pk_context* ctx) { delete ctx; }

const char* pk_context_error(const pk_context* ctx) {
    return ctx ? ctx->last_error.c_str() : "null context";
}

const char* pk_status_name(pk_status status) {
    switch (status) {
        case PK_OK: return "ok";
        case PK_ERROR_IO: return "io";
        case PK_ERROR_FORMAT: return "format";
        case PK_ERROR_SCHEMA: return "schema";
        case PK_ERROR_DEGENERATE: return "degenerate";
        case PK_ERROR_ARGUMENT: return "argument";
        case PK_ERROR_UNAVAILABLE: return "unavailable";
        case PK_ERROR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* pk_version(void) { return kVersion; }

void pk_string_free(char* s) { std::free(s); }

pk_status pk_config_hash(pk_context* ctx, char** hash_out) {
    if (auto s = require(ctx, hash_out != nullptr, "hash_out is null"); s != PK_OK) return s;
    return guarded(ctx, [&] {
        *hash_out = copy_string(ctx->config.hash());
        return PK_OK;
    });
}

int pk_parallelism(const pk_context* ctx) { return ctx ? ctx->config.parallelism : 1; }

pk_status pk_segment(pk_context* ctx, const char* input_path, const char* out_dir,
                     char** result_json_out) {
    if (auto s = require(ctx, input_path && out_dir && result_json_out, "null argument");
        s != PK_OK)
        return s;
    return guarded(ctx, [&] {
        const partkit::PipelineResult result =
            partkit::run_pipeline(input_path, ctx->config.pipeline, ctx->config.hash());

        json out;
        out["accepted"] = result.accepted;
        out["source"] = input_path;
        out["stats"] = {{"mean_part_iou", result.record.stats.mean_part_iou},
                        {"largest_rest_ratio", result.record.stats.largest_rest_ratio},
                        {"part_count", result.record.stats.part_count}};
        if (result.accepted) {
            const std::filesystem::path dir =
                std::filesystem::path(out_dir) /
                std::filesystem::path(input_path).stem().string();
            partkit::save_record(result.record, dir);
            out["record_path"] = (dir / "record.json").string();
        } else {
            out["reasons"] = result.reject_reasons;
        }
        *result_json_out = copy_string(out.dump(2));
        return PK_OK;
    });
}

pk_status pk_obb(pk_context* ctx, const char* mesh_path, char** layout_json_out) {
    if (auto s = require(ctx, mesh_path && layout_json_out, "null argument"); s != PK_OK)
        return s;
    return guarded(ctx, [&] {
        const auto meshes = partkit::load_mesh(mesh_path);
        if (meshes.empty())
            throw partkit::Error(partkit::ErrorCode::empty_input,
                                 std::string("no meshes in ") + mesh_path);
        partkit::Layout layout;
        for (const auto& mesh : meshes)
            layout.boxes.push_back(partkit::min_obb(mesh.vertices).box);
        *layout_json_out = copy_string(partkit::layout_to_json(layout).dump(2));
        return PK_OK;
    });
}

pk_status pk_metrics(pk_context* ctx, const char* record_json_path,
                     const char* layout_json_path, char** metrics_json_out) {
    if (auto s = require(ctx, record_json_path && layout_json_path && metrics_json_out,
                         "null argument");
        s != PK_OK)
        return s;
    return guarded(ctx, [&] {
        const partkit::ShapeRecord record = load_record_checked(record_json_path);
        const partkit::Layout layout = partkit::load_layout(layout_json_path);

        const partkit::PartIou part = partkit::part_iou(record.parts, layout);
        const partkit::ObjectIouResult object =
            partkit::object_iou(record.parts, layout, ctx->config.object_iou_samples,
                                ctx->config.object_iou_seed, ctx->config.object_box);

        std::vector<partkit::TriMesh> box_meshes;
        for (const auto& box : layout.boxes) box_meshes.push_back(box.to_mesh());
        const partkit::VoxelGrid parts_grid =
            partkit::voxelize(record.parts, ctx->config.voxel_resolution);
        const partkit::VoxelGrid boxes_grid =
            partkit::voxelize(box_meshes, ctx->config.voxel_resolution);

        json out;
        out["part_iou"] = part.per_part;
        out["mean_part_iou"] = part.mean;
        out["object_iou"] = object.value;
        out["object_iou_stderr"] = object.standard_error;
        out["voxel_iou"] = partkit::voxel_iou(parts_grid, boxes_grid);
        *metrics_json_out = copy_string(out.dump(2));
        return PK_OK;
    });
}

pk_status pk_stats(pk_context* ctx, const char* const* record_paths, size_t record_count,
                   int bins, char** stats_json_out) {
    if (auto s = require(ctx, record_paths && stats_json_out && record_count > 0 && bins > 0,
                         "need records and positive bins");
        s != PK_OK)
        return s;
    return guarded(ctx, [&] {
        std::vector<partkit::RecordStatsView> views;
        views.reserve(record_count);
        for (size_t i = 0; i < record_count; ++i) {
            const partkit::ShapeRecord record = load_record_checked(record_paths[i]);
            views.push_back({record.stats.mean_part_iou, record.stats.largest_rest_ratio,
                             record.stats.part_count});
        }
        const partkit::StatsReport report =
            partkit::dataset_stats(views, static_cast<std::size_t>(bins));
        *stats_json_out = copy_string(partkit::stats_report_to_json(report).dump(2));
        return PK_OK;
    });
}

pk_status pk_optimize(pk_context* ctx, const char* record_json_path,
                      const char* layout_json_path, const char* out_dir,
                      char** result_json_out) {
    if (auto s = require(ctx, record_json_path && layout_json_path && out_dir && result_json_out,
                         "null argument");
        s != PK_OK)
        return s;
    return guarded(ctx, [&] {
        const partkit::ShapeRecord record = load_record_checked(record_json_path);
        const partkit::Layout layout = partkit::load_layout(layout_json_path);

        const partkit::OptimizeResult result =
            partkit::optimize_layout(record.parts, layout, ctx->config.beam);

        const std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        for (std::size_t i = 0; i < record.parts.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "part_%03zu.obj", i);
            partkit::write_obj(partkit::apply_similarity(record.parts[i], result.transform),
                               dir / name);
        }
        partkit::write_text_file(dir / "transform.json",
                                 partkit::similarity_to_json(result.transform).dump(2) + "\n");
        partkit::write_beam_trace_csv(result.trace, dir / "trace.csv");

        json out;
        out["transform"] = partkit::similarity_to_json(result.transform);
        // Inverse included for callers that move the layout instead of
        // the shape.
        out["inverse_transform"] = partkit::similarity_to_json(result.transform.inverse());
        out["initial_score"] = result.initial_score;
        out["final_score"] = result.final_score;
        out["iterations"] = result.trace.size();
        out["trace_path"] = (dir / "trace.csv").string();
        *result_json_out = copy_string(out.dump(2));
        return PK_OK;
    });
}

pk_status pk_clean(pk_context* ctx, const char* record_json_path, const char* layout_json_path,
                   const char* out_dir, char** report_json_out) {
    if (auto s = require(ctx, record_json_path && layout_json_path && out_dir && report_json_out,
                         "null argument");
        s != PK_OK)
        return s;
    return guarded(ctx, [&] {
        const partkit::ShapeRecord record = load_record_checked(record_json_path);
        const partkit::Layout layout = partkit::load_layout(layout_json_path);

        auto [cleaned, report] =
            partkit::filter_artifacts(record.parts, layout, ctx->config.artifact_theta);

        const std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        for (std::size_t i = 0; i < cleaned.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "part_%03zu.obj", i);
            partkit::write_obj(cleaned[i], dir / name);
        }

        json entries = json::array();
        for (const auto& e : report.entries)
            entries.push_back({{"part_index", e.part_index},
                               {"components_before", e.components_before},
                               {"removed_components", e.removed_components},
                               {"largest_component_iou", e.largest_component_iou},
                               {"flagged", e.flagged}});
        json out;
        out["theta"] = ctx->config.artifact_theta;
        out["parts"] = entries;
        *report_json_out = copy_string(out.dump(2));
        return PK_OK;
    });
}

pk_status pk_simulate(pk_context* ctx, const char* scenario_json_path, const char* out_dir,
                      char** summary_json_out) {
    if (auto s = require(ctx, scenario_json_path && out_dir && summary_json_out, "null argument");
        s != PK_OK)
        return s;
    return guarded(ctx, [&] {
        const partkit::Scenario scenario =
            partkit::scenario_from_json(partkit::load_json_file(scenario_json_path));
        const partkit::ScenarioOutcome outcome = partkit::run_scenario(scenario);

        const std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        partkit::write_sampler_trace_csv(outcome.result.trace, dir / "trace.csv");
        partkit::write_latents(outcome.result.final_latents, dir / "latents.bin");
        if (outcome.reference) {
            partkit::write_sampler_trace_csv(outcome.reference->trace,
                                             dir / "reference_trace.csv");
            partkit::write_latents(outcome.reference->final_latents,
                                   dir / "reference_latents.bin");
        }

        json norms = json::array();
        for (const auto& block : outcome.result.final_latents) norms.push_back(block.tokens.norm());
        json out;
        out["steps"] = scenario.config.steps;
        out["final_norms"] = norms;
        out["trace_path"] = (dir / "trace.csv").string();
        out["latents_path"] = (dir / "latents.bin").string();
        *summary_json_out = copy_string(out.dump(2));
        return PK_OK;
    });
}

pk_status pk_caption(pk_context* ctx, const char* record_json_path,
                     const char* const* image_paths, size_t image_count, char** caption_out) {
    if (auto s = require(ctx, record_json_path && caption_out, "null argument"); s != PK_OK)
        return s;
    return guarded(ctx, [&] {
        const partkit::ShapeRecord record = load_record_checked(record_json_path);
        partkit::CaptionRequest request;
        request.prompt_template = ctx->config.caption.prompt_template;
        for (size_t i = 0; i < image_count; ++i) request.images.emplace_back(image_paths[i]);
        *caption_out = copy_string(partkit::caption_request(record, request, ctx->config.caption));
        return PK_OK;
    });
}

pk_status pk_obb_iou(pk_context* ctx, const char* obb_a_json, const char* obb_b_json,
                     double* iou_out) {
    if (auto s = require(ctx, obb_a_json && obb_b_json && iou_out, "null argument"); s != PK_OK)
        return s;
    return guarded(ctx, [&] {
        const partkit::Obb a = partkit::obb_from_json(json::parse(obb_a_json));
        const partkit::Obb b = partkit::obb_from_json(json::parse(obb_b_json));
        *iou_out = partkit::obb_iou(a, b);
        return PK_OK;
    });
}

}  // extern "C"
