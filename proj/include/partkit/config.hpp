#ifndef PARTKIT_CONFIG_HPP
#define PARTKIT_CONFIG_HPP

#include <filesystem>

#include <nlohmann/json.hpp>

#include "partkit/metrics.hpp"
#include "partkit/refine.hpp"
#include "partkit/sampler.hpp"
#include "partkit/segmentation.hpp"

namespace partkit {

struct CaptionConfig {
    std::string endpoint;
    bool mock = false;
    std::string prompt_template =
        "Describe this object's overall geometry and its distinct parts. Focus on shape, "
        "structure and proportions; do not mention color, texture or material.";
    int retries = 3;
    int backoff_ms = 250;
};

/// Every tunable of the toolkit in one schema-validated bundle. Unknown
/// keys are rejected with their JSON path.
struct PipelineConfig {
    std::uint64_t seed = 0;
    int parallelism = 1;
    PipelineParams pipeline;
    ObjectBoxMode object_box = ObjectBoxMode::min_obb;
    std::uint64_t object_iou_samples = 1u << 20;
    std::uint64_t object_iou_seed = 0xC0DE;
    int voxel_resolution = 64;
    BeamConfig beam;
    SamplerConfig sampler;
    double artifact_theta = 0.5;
    CaptionConfig caption;

    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig load(const std::filesystem::path& path);

    /// FNV-1a of the canonical serialization, hex-encoded; embedded in
    /// every record's provenance.
    std::string hash() const;
};

}  // namespace partkit

#endif
