#include "partkit/serialization.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "partkit/mesh_io.hpp"
#include "partkit/mesh_ops.hpp"

namespace partkit {

namespace {

using nlohmann::json;

Vec3 vec3_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw Error(ErrorCode::schema, std::string(what) + " must be a 3-array");
    return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

json obb_to_json(const Obb& box) {
    return {{"center", vec3_to_json(box.center)},
            {"half_extents", vec3_to_json(box.half_extents)},
            {"rotation", json::array({box.rotation.x(), box.rotation.y(), box.rotation.z(),
                                      box.rotation.w()})}};
}

Obb obb_from_json(const json& j) {
    Obb box;
    box.center = vec3_from_json(j.at("center"), "center");
    box.half_extents = vec3_from_json(j.at("half_extents"), "half_extents");
    const json& r = j.at("rotation");
    if (!r.is_array() || r.size() != 4)
        throw Error(ErrorCode::schema, "rotation must be a 4-array [qx,qy,qz,qw]");
    box.rotation = Quat(r.at(3).get<double>(), r.at(0).get<double>(), r.at(1).get<double>(),
                        r.at(2).get<double>());
    if ((box.half_extents.array() <= 0.0).any())
        throw Error(ErrorCode::schema, "half_extents must be positive");
    const double norm = box.rotation.norm();
    if (std::abs(norm - 1.0) > 1e-6)
        throw Error(ErrorCode::schema, "rotation quaternion must be unit length");
    box.rotation.normalize();
    return box;
}

json layout_to_json(const Layout& layout) {
    json boxes = json::array();
    for (const auto& b : layout.boxes) boxes.push_back(obb_to_json(b));
    return {{"prompt", layout.prompt}, {"boxes", boxes}};
}

Layout layout_from_json(const json& j) {
    Layout layout;
    layout.prompt = j.value("prompt", "");
    const json& boxes = j.at("boxes");
    if (!boxes.is_array() || boxes.empty() || boxes.size() > kMaxLayoutBoxes)
        throw Error(ErrorCode::schema,
                    "layout must contain 1.." + std::to_string(kMaxLayoutBoxes) + " boxes");
    for (const auto& b : boxes) layout.boxes.push_back(obb_from_json(b));
    return layout;
}

Layout load_layout(const std::filesystem::path& path) {
    return layout_from_json(load_json_file(path));
}

void save_layout(const Layout& layout, const std::filesystem::path& path) {
    write_text_file(path, layout_to_json(layout).dump(2) + "\n");
}

json record_to_json(const ShapeRecord& record, const std::vector<std::string>& part_paths) {
    json obbs = json::array();
    for (const auto& b : record.obbs) obbs.push_back(obb_to_json(b));
    json stats = {
        {"mean_part_iou", record.stats.mean_part_iou},
        {"largest_rest_ratio", record.stats.largest_rest_ratio},
        {"part_count", record.stats.part_count},
        {"per_part_volumes", record.stats.per_part_volumes},
        {"per_part_components", record.stats.per_part_components},
        {"flags", record.stats.flags},
    };
    return {{"parts", part_paths},
            {"obbs", obbs},
            {"prompt", record.prompt ? json(*record.prompt) : json(nullptr)},
            {"stats", stats},
            {"provenance",
             {{"source", record.provenance.source},
              {"config_hash", record.provenance.config_hash}}}};
}

void save_record(const ShapeRecord& record, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> part_paths;
    for (std::size_t i = 0; i < record.parts.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "part_%03zu.obj", i);
        write_obj(record.parts[i], dir / name);
        part_paths.emplace_back(name);
    }
    write_text_file(dir / "record.json", record_to_json(record, part_paths).dump(2) + "\n");
}

ShapeRecord load_record(const std::filesystem::path& record_json_path) {
    const json j = load_json_file(record_json_path);
    const std::filesystem::path base = record_json_path.parent_path();

    ShapeRecord record;
    for (const auto& rel : j.at("parts")) {
        const std::filesystem::path part_path = base / rel.get<std::string>();
        const auto meshes = load_mesh(part_path);
        if (meshes.empty())
            throw Error(ErrorCode::format, "record part has no mesh: " + part_path.string());
        TriMesh merged = meshes.front();
        for (std::size_t i = 1; i < meshes.size(); ++i) merged = concatenate(merged, meshes[i]);
        record.parts.push_back(std::move(merged));
    }
    for (const auto& b : j.at("obbs")) record.obbs.push_back(obb_from_json(b));
    if (record.parts.size() != record.obbs.size())
        throw Error(ErrorCode::schema, "record parts/obbs size mismatch");
    if (j.contains("prompt") && !j.at("prompt").is_null())
        record.prompt = j.at("prompt").get<std::string>();
    if (j.contains("stats")) {
        const json& s = j.at("stats");
        record.stats.mean_part_iou = s.value("mean_part_iou", 0.0);
        record.stats.largest_rest_ratio = s.value("largest_rest_ratio", 0.0);
        record.stats.part_count = s.value("part_count", static_cast<int>(record.parts.size()));
        if (s.contains("per_part_volumes"))
            record.stats.per_part_volumes = s.at("per_part_volumes").get<std::vector<double>>();
        if (s.contains("per_part_components"))
            record.stats.per_part_components =
                s.at("per_part_components").get<std::vector<int>>();
        if (s.contains("flags"))
            record.stats.flags = s.at("flags").get<std::vector<std::string>>();
    }
    if (j.contains("provenance")) {
        record.provenance.source = j.at("provenance").value("source", "");
        record.provenance.config_hash = j.at("provenance").value("config_hash", "");
    }
    return record;
}

json stats_report_to_json(const StatsReport& report) {
    auto histogram = [](const Histogram& h) {
        return json{{"bin_edges", h.bin_edges},
                    {"counts", h.counts},
                    {"overflow", h.overflow},
                    {"threshold", h.threshold},
                    {"above_threshold_fraction", h.above_threshold_fraction}};
    };
    json part_bins = json::array();
    for (std::size_t i = 0; i < report.part_count_counts.size(); ++i)
        part_bins.push_back(i + 1);
    return {{"sample_count", report.sample_count},
            {"mean_part_iou", histogram(report.mean_part_iou)},
            {"largest_rest_ratio", histogram(report.largest_rest_ratio)},
            {"part_count", {{"bins", part_bins}, {"counts", report.part_count_counts}}}};
}

json similarity_to_json(const SimilarityTransform& t) {
    return {{"scale", t.scale},
            {"rotation",
             json::array({t.rotation.x(), t.rotation.y(), t.rotation.z(), t.rotation.w()})},
            {"translation", vec3_to_json(t.translation)}};
}

SimilarityTransform similarity_from_json(const json& j) {
    SimilarityTransform t;
    t.scale = j.at("scale").get<double>();
    if (!(t.scale > 0.0)) throw Error(ErrorCode::schema, "similarity scale must be > 0");
    const json& r = j.at("rotation");
    t.rotation = Quat(r.at(3).get<double>(), r.at(0).get<double>(), r.at(1).get<double>(),
                      r.at(2).get<double>());
    if (std::abs(t.rotation.norm() - 1.0) > 1e-6)
        throw Error(ErrorCode::schema, "similarity rotation must be unit length");
    t.rotation.normalize();
    t.translation = vec3_from_json(j.at("translation"), "translation");
    return t;
}

void write_beam_trace_csv(const std::vector<BeamTraceRow>& trace,
                          const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write trace: " + path.string());
    out << "iteration,best_score,translation_step,scale_step,rotation_step_rad\n";
    char buf[160];
    for (const auto& row : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", row.iteration,
                      row.best_score, row.translation_step, row.scale_step,
                      row.rotation_step_rad);
        out << buf;
    }
}

void write_sampler_trace_csv(const std::vector<SamplerTraceRow>& trace,
                             const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write trace: " + path.string());
    const std::size_t parts = trace.empty() ? 0 : trace.front().part_norms.size();
    out << "step,t,alpha_c,lambda_t";
    for (std::size_t p = 0; p < parts; ++p) out << ",norm_part" << p;
    out << "\n";
    char buf[64];
    for (const auto& row : trace) {
        out << row.step;
        std::snprintf(buf, sizeof(buf), ",%.17g", row.t);
        out << buf;
        std::snprintf(buf, sizeof(buf), ",%.17g",
                      row.alpha_per_layer.empty() ? 1.0 : row.alpha_per_layer.front());
        out << buf;
        std::snprintf(buf, sizeof(buf), ",%.17g", row.lambda_t);
        out << buf;
        for (double n : row.part_norms) {
            std::snprintf(buf, sizeof(buf), ",%.17g", n);
            out << buf;
        }
        out << "\n";
    }
}

namespace {

template <typename T>
void put(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, const std::filesystem::path& path) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw Error(ErrorCode::format, "truncated latent file: " + path.string());
    return value;
}

}  // namespace

void write_latents(const LatentSet& latents, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write latents: " + path.string());
    out.write("PKLB", 4);
    put<std::uint32_t>(out, 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(latents.size()));
    for (const auto& block : latents) {
        put<std::int32_t>(out, block.part_id);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(block.tokens.rows()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(block.tokens.cols()));
        put<std::uint8_t>(out, block.frozen ? 1 : 0);
        for (Eigen::Index r = 0; r < block.tokens.rows(); ++r)
            for (Eigen::Index c = 0; c < block.tokens.cols(); ++c)
                put<double>(out, block.tokens(r, c));
    }
}

LatentSet read_latents(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open latents: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PKLB", 4) != 0)
        throw Error(ErrorCode::format, "bad latent file magic: " + path.string());
    if (take<std::uint32_t>(in, path) != 1)
        throw Error(ErrorCode::format, "unsupported latent file version: " + path.string());
    const auto count = take<std::uint32_t>(in, path);
    LatentSet out(count);
    for (auto& block : out) {
        block.part_id = take<std::int32_t>(in, path);
        const auto rows = take<std::uint32_t>(in, path);
        const auto cols = take<std::uint32_t>(in, path);
        block.frozen = take<std::uint8_t>(in, path) != 0;
        block.tokens.resize(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < cols; ++c) block.tokens(r, c) = take<double>(in, path);
    }
    return out;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open: " + path.string());
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::schema, path.string() + ": JSON parse error at byte " +
                                           std::to_string(e.byte) + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write: " + path.string());
    out << content;
    if (!out) throw Error(ErrorCode::io, "write failed: " + path.string());
}

}  // namespace partkit
