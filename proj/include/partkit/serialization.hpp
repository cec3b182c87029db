#ifndef PARTKIT_SERIALIZATION_HPP
#define PARTKIT_SERIALIZATION_HPP

#include <filesystem>

#include <nlohmann/json.hpp>

#include "partkit/metrics.hpp"
#include "partkit/refine.hpp"
#include "partkit/sampler.hpp"
#include "partkit/segmentation.hpp"

namespace partkit {

// Obb wire format: {"center":[x,y,z],"half_extents":[a,b,c],
//                   "rotation":[qx,qy,qz,qw]} (scalar-last quaternion).
nlohmann::json obb_to_json(const Obb& box);
Obb obb_from_json(const nlohmann::json& j);

// Layout: {"prompt": str, "boxes": [Obb...]}, 1..8 boxes.
nlohmann::json layout_to_json(const Layout& layout);
Layout layout_from_json(const nlohmann::json& j);
Layout load_layout(const std::filesystem::path& path);
void save_layout(const Layout& layout, const std::filesystem::path& path);

// ShapeRecord JSON references its part OBJs by path relative to the
// record file.
nlohmann::json record_to_json(const ShapeRecord& record,
                              const std::vector<std::string>& part_paths);
void save_record(const ShapeRecord& record, const std::filesystem::path& dir);
ShapeRecord load_record(const std::filesystem::path& record_json_path);

nlohmann::json stats_report_to_json(const StatsReport& report);

nlohmann::json similarity_to_json(const SimilarityTransform& t);
SimilarityTransform similarity_from_json(const nlohmann::json& j);

void write_beam_trace_csv(const std::vector<BeamTraceRow>& trace,
                          const std::filesystem::path& path);
void write_sampler_trace_csv(const std::vector<SamplerTraceRow>& trace,
                             const std::filesystem::path& path);

// Final latents binary: magic "PKLB", then little-endian u32 version(1),
// u32 block count, and per block i32 part_id, u32 rows, u32 cols,
// u8 frozen, rows*cols f64 row-major.
void write_latents(const LatentSet& latents, const std::filesystem::path& path);
LatentSet read_latents(const std::filesystem::path& path);

nlohmann::json load_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace partkit

#endif
