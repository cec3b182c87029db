#include "partkit/config.hpp"

#include <fstream>
#include <sstream>

#include "partkit/rng.hpp"

namespace partkit {

namespace {

using nlohmann::json;

// Overlay `patch` onto `base`, rejecting keys that do not exist in the
// defaults and scalar/object kind mismatches.
void merge_validate(json& base, const json& patch, const std::string& path) {
    if (!patch.is_object())
        throw Error(ErrorCode::schema, "config: expected object at " + (path.empty() ? "/" : path));
    for (const auto& [key, value] : patch.items()) {
        const std::string here = path + "/" + key;
        if (!base.contains(key))
            throw Error(ErrorCode::schema, "config: unknown key at " + here);
        json& slot = base[key];
        if (slot.is_object()) {
            merge_validate(slot, value, here);
            continue;
        }
        const bool ok = (slot.is_number() && value.is_number()) ||
                        (slot.is_string() && value.is_string()) ||
                        (slot.is_boolean() && value.is_boolean());
        if (!ok) throw Error(ErrorCode::schema, "config: wrong value type at " + here);
        slot = value;
    }
}

}  // namespace

json PipelineConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["parallelism"] = parallelism;
    j["pipeline"] = {
        {"weld_epsilon_factor", pipeline.weld_epsilon_factor},
        {"planar_epsilon", pipeline.planar_epsilon},
        {"volume_epsilon", pipeline.volume_epsilon},
        {"contact_inflation", pipeline.contact_inflation},
        {"merge_fraction", pipeline.merge_fraction},
        {"filter",
         {{"max_mean_part_iou", pipeline.filter.max_mean_part_iou},
          {"max_largest_rest_ratio", pipeline.filter.max_largest_rest_ratio},
          {"max_components_per_part", pipeline.filter.max_components_per_part},
          {"part_count_min", pipeline.filter.part_count_min},
          {"part_count_max", pipeline.filter.part_count_max}}},
    };
    j["object_box"] = object_box == ObjectBoxMode::min_obb ? "obb" : "aabb";
    j["object_iou_samples"] = object_iou_samples;
    j["object_iou_seed"] = object_iou_seed;
    j["voxel_resolution"] = voxel_resolution;
    j["beam"] = {
        {"beam_width", beam.beam_width},
        {"max_iterations", beam.max_iterations},
        {"translation_step", beam.translation_step},
        {"scale_step", beam.scale_step},
        {"rotation_step_deg", beam.rotation_step_deg},
        {"refine_factor", beam.refine_factor},
        {"epsilon", beam.epsilon},
        {"min_step", beam.min_step},
    };
    j["sampler"] = {
        {"steps", sampler.steps},
        {"cfg_scale", sampler.cfg_scale},
        {"anneal_beta", sampler.anneal_beta},
        {"tsr_k", sampler.tsr_k},
        {"layers_per_pass", sampler.layers_per_pass},
        {"negative_prompt", sampler.negative_prompt},
        {"kv_blend_schedule", sampler.kv_schedule.name},
        {"kv_lambda_start", sampler.kv_schedule.lambda_start},
        {"kv_constant_value", sampler.kv_schedule.constant_value},
    };
    j["artifact_theta"] = artifact_theta;
    j["caption"] = {
        {"endpoint", caption.endpoint},       {"mock", caption.mock},
        {"template", caption.prompt_template}, {"retries", caption.retries},
        {"backoff_ms", caption.backoff_ms},
    };
    return j;
}

PipelineConfig PipelineConfig::from_json(const json& patch) {
    json merged = PipelineConfig{}.to_json();
    merge_validate(merged, patch, "");

    PipelineConfig c;
    c.seed = merged.at("seed").get<std::uint64_t>();
    c.parallelism = merged.at("parallelism").get<int>();
    const json& p = merged.at("pipeline");
    c.pipeline.weld_epsilon_factor = p.at("weld_epsilon_factor").get<double>();
    c.pipeline.planar_epsilon = p.at("planar_epsilon").get<double>();
    c.pipeline.volume_epsilon = p.at("volume_epsilon").get<double>();
    c.pipeline.contact_inflation = p.at("contact_inflation").get<double>();
    c.pipeline.merge_fraction = p.at("merge_fraction").get<double>();
    const json& f = p.at("filter");
    c.pipeline.filter.max_mean_part_iou = f.at("max_mean_part_iou").get<double>();
    c.pipeline.filter.max_largest_rest_ratio = f.at("max_largest_rest_ratio").get<double>();
    c.pipeline.filter.max_components_per_part = f.at("max_components_per_part").get<int>();
    c.pipeline.filter.part_count_min = f.at("part_count_min").get<int>();
    c.pipeline.filter.part_count_max = f.at("part_count_max").get<int>();

    const std::string box_mode = merged.at("object_box").get<std::string>();
    if (box_mode == "obb")
        c.object_box = ObjectBoxMode::min_obb;
    else if (box_mode == "aabb")
        c.object_box = ObjectBoxMode::aabb;
    else
        throw Error(ErrorCode::schema, "config: object_box must be 'obb' or 'aabb'");
    c.object_iou_samples = merged.at("object_iou_samples").get<std::uint64_t>();
    c.object_iou_seed = merged.at("object_iou_seed").get<std::uint64_t>();
    c.voxel_resolution = merged.at("voxel_resolution").get<int>();

    const json& b = merged.at("beam");
    c.beam.beam_width = b.at("beam_width").get<int>();
    c.beam.max_iterations = b.at("max_iterations").get<int>();
    c.beam.translation_step = b.at("translation_step").get<double>();
    c.beam.scale_step = b.at("scale_step").get<double>();
    c.beam.rotation_step_deg = b.at("rotation_step_deg").get<double>();
    c.beam.refine_factor = b.at("refine_factor").get<double>();
    c.beam.epsilon = b.at("epsilon").get<double>();
    c.beam.min_step = b.at("min_step").get<double>();

    const json& s = merged.at("sampler");
    c.sampler.steps = s.at("steps").get<int>();
    c.sampler.cfg_scale = s.at("cfg_scale").get<double>();
    c.sampler.anneal_beta = s.at("anneal_beta").get<double>();
    c.sampler.tsr_k = s.at("tsr_k").get<double>();
    c.sampler.layers_per_pass = s.at("layers_per_pass").get<int>();
    c.sampler.negative_prompt = s.at("negative_prompt").get<std::string>();
    c.sampler.kv_schedule.name = s.at("kv_blend_schedule").get<std::string>();
    c.sampler.kv_schedule.lambda_start = s.at("kv_lambda_start").get<double>();
    c.sampler.kv_schedule.constant_value = s.at("kv_constant_value").get<double>();

    c.artifact_theta = merged.at("artifact_theta").get<double>();
    const json& cap = merged.at("caption");
    c.caption.endpoint = cap.at("endpoint").get<std::string>();
    c.caption.mock = cap.at("mock").get<bool>();
    c.caption.prompt_template = cap.at("template").get<std::string>();
    c.caption.retries = cap.at("retries").get<int>();
    c.caption.backoff_ms = cap.at("backoff_ms").get<int>();

    // Range checks that JSON typing cannot express.
    if (c.pipeline.filter.part_count_min < 1 ||
        c.pipeline.filter.part_count_max < c.pipeline.filter.part_count_min)
        throw Error(ErrorCode::schema, "config: bad part_count range");
    if (!(c.sampler.anneal_beta > 0.0 && c.sampler.anneal_beta <= 1.0))
        throw Error(ErrorCode::schema, "config: anneal_beta must be in (0, 1]");
    if (!(c.sampler.tsr_k > 0.0 && c.sampler.tsr_k <= 1.0))
        throw Error(ErrorCode::schema, "config: tsr_k must be in (0, 1]");
    if (c.sampler.steps < 1) throw Error(ErrorCode::schema, "config: sampler steps must be >= 1");
    if (!(c.artifact_theta > 0.0 && c.artifact_theta <= 1.0))
        throw Error(ErrorCode::schema, "config: artifact_theta must be in (0, 1]");
    if (c.parallelism < 1) throw Error(ErrorCode::schema, "config: parallelism must be >= 1");
    if (c.voxel_resolution < 2)
        throw Error(ErrorCode::schema, "config: voxel_resolution must be >= 2");
    return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::schema, path.string() + ": config parse error at byte " +
                                           std::to_string(e.byte) + ": " + e.what());
    }
    return from_json(j);
}

std::string PipelineConfig::hash() const {
    const std::string canonical = to_json().dump();
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));
    return buf;
}

}  // namespace partkit
