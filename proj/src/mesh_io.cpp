#include "partkit/mesh_io.hpp"

#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace partkit {

namespace {

using nlohmann::json;

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// OBJ

struct ObjGroup {
    std::string name;
    std::vector<std::array<int, 3>> faces;  // global vertex indices
};

[[noreturn]] void obj_fail(const std::filesystem::path& path, std::size_t line_no,
                           std::size_t byte_offset, const std::string& what) {
    std::ostringstream msg;
    msg << path.string() << ": OBJ parse error at line " << line_no << " (byte offset "
        << byte_offset << "): " << what;
    throw Error(ErrorCode::format, msg.str());
}

std::vector<TriMesh> load_obj(const std::filesystem::path& path) {
    const std::string text = read_file_bytes(path);
    std::vector<Vec3> vertices;
    std::vector<ObjGroup> groups;
    auto current = [&]() -> ObjGroup& {
        if (groups.empty()) groups.push_back(ObjGroup{"", {}});
        return groups.back();
    };

    std::size_t line_no = 0;
    std::size_t offset = 0;
    std::istringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) {
        ++line_no;
        const std::size_t line_offset = offset;
        offset += line.size() + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();

        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag.empty() || tag[0] == '#') continue;

        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) obj_fail(path, line_no, line_offset, "malformed vertex");
            vertices.emplace_back(x, y, z);
        } else if (tag == "o" || tag == "g") {
            std::string name;
            std::getline(ls, name);
            while (!name.empty() && std::isspace(static_cast<unsigned char>(name.front())))
                name.erase(name.begin());
            groups.push_back(ObjGroup{name, {}});
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string token;
            while (ls >> token) {
                // "i", "i/t", "i//n", "i/t/n" -- only the vertex index matters.
                const std::size_t slash = token.find('/');
                const std::string head = token.substr(0, slash);
                int idx = 0;
                const auto [ptr, ec] =
                    std::from_chars(head.data(), head.data() + head.size(), idx);
                if (ec != std::errc() || ptr != head.data() + head.size())
                    obj_fail(path, line_no, line_offset, "bad face index '" + token + "'");
                if (idx < 0)
                    idx = static_cast<int>(vertices.size()) + idx;  // relative index
                else
                    idx -= 1;
                if (idx < 0 || idx >= static_cast<int>(vertices.size()))
                    obj_fail(path, line_no, line_offset, "face index out of range");
                poly.push_back(idx);
            }
            if (poly.size() < 3) obj_fail(path, line_no, line_offset, "face with < 3 vertices");
            for (std::size_t k = 1; k + 1 < poly.size(); ++k)
                current().faces.push_back({poly[0], poly[k], poly[k + 1]});
        }
        // vt/vn/mtllib/usemtl and friends are ignored.
    }

    std::vector<TriMesh> out;
    for (const auto& group : groups) {
        if (group.faces.empty()) continue;
        TriMesh mesh;
        mesh.name = group.name;
        std::unordered_map<int, int> remap;
        for (const auto& f : group.faces) {
            std::array<int, 3> g;
            for (int k = 0; k < 3; ++k) {
                auto [it, inserted] = remap.emplace(f[k], static_cast<int>(mesh.vertices.size()));
                if (inserted) mesh.vertices.push_back(vertices[f[k]]);
                g[k] = it->second;
            }
            mesh.faces.push_back(g);
        }
        out.push_back(std::move(mesh));
    }
    return out;
}

// ---------------------------------------------------------------------------
// glTF 2.0 (.gltf + buffers, .glb)

int base64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

std::string base64_decode(std::string_view data) {
    std::string out;
    out.reserve(data.size() * 3 / 4);
    int acc = 0, bits = 0;
    for (char c : data) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = base64_value(c);
        if (v < 0) throw Error(ErrorCode::format, "invalid base64 payload");
        acc = (acc << 6) | v;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<char>((acc >> bits) & 0xff));
        }
    }
    return out;
}

struct GltfDocument {
    json root;
    std::vector<std::string> buffers;
    std::filesystem::path base_dir;
};

std::string load_gltf_buffer(const json& buffer, const std::filesystem::path& base_dir,
                             const std::string* bin_chunk) {
    if (buffer.contains("uri")) {
        const std::string uri = buffer.at("uri").get<std::string>();
        constexpr std::string_view data_prefix = "data:";
        if (uri.rfind(data_prefix, 0) == 0) {
            const std::size_t comma = uri.find(',');
            if (comma == std::string::npos)
                throw Error(ErrorCode::format, "malformed data URI in buffer");
            return base64_decode(std::string_view(uri).substr(comma + 1));
        }
        return read_file_bytes(base_dir / uri);
    }
    if (bin_chunk) return *bin_chunk;
    throw Error(ErrorCode::format, "buffer without uri and no GLB binary chunk");
}

struct AccessorView {
    const std::string* data;
    std::size_t offset;
    std::size_t stride;
    std::size_t count;
    int component_type;
};

AccessorView resolve_accessor(const GltfDocument& doc, int accessor_index,
                              std::size_t element_size) {
    const json& accessor = doc.root.at("accessors").at(accessor_index);
    if (accessor.contains("sparse"))
        throw Error(ErrorCode::format, "sparse accessors are not supported");
    const int view_index = accessor.at("bufferView").get<int>();
    const json& view = doc.root.at("bufferViews").at(view_index);
    const int buffer_index = view.at("buffer").get<int>();

    AccessorView out;
    out.data = &doc.buffers.at(buffer_index);
    out.offset = view.value("byteOffset", 0u) + accessor.value("byteOffset", 0u);
    out.stride = view.value("byteStride", 0u);
    if (out.stride == 0) out.stride = element_size;
    out.count = accessor.at("count").get<std::size_t>();
    out.component_type = accessor.at("componentType").get<int>();

    const std::size_t last = out.offset + (out.count > 0 ? (out.count - 1) * out.stride : 0) +
                             element_size;
    if (last > out.data->size())
        throw Error(ErrorCode::format, "accessor range exceeds buffer size (byte offset " +
                                           std::to_string(out.offset) + ")");
    return out;
}

std::vector<Vec3> read_positions(const GltfDocument& doc, int accessor_index) {
    const json& accessor = doc.root.at("accessors").at(accessor_index);
    if (accessor.at("type").get<std::string>() != "VEC3" ||
        accessor.at("componentType").get<int>() != 5126)
        throw Error(ErrorCode::format, "POSITION accessor must be float VEC3");
    const AccessorView view = resolve_accessor(doc, accessor_index, 12);
    std::vector<Vec3> out(view.count);
    for (std::size_t i = 0; i < view.count; ++i) {
        float xyz[3];
        std::memcpy(xyz, view.data->data() + view.offset + i * view.stride, 12);
        out[i] = Vec3(xyz[0], xyz[1], xyz[2]);
    }
    return out;
}

std::vector<std::uint32_t> read_indices(const GltfDocument& doc, int accessor_index) {
    const json& accessor = doc.root.at("accessors").at(accessor_index);
    const int ct = accessor.at("componentType").get<int>();
    std::size_t element = 0;
    switch (ct) {
        case 5121: element = 1; break;  // u8
        case 5123: element = 2; break;  // u16
        case 5125: element = 4; break;  // u32
        default: throw Error(ErrorCode::format, "unsupported index component type");
    }
    const AccessorView view = resolve_accessor(doc, accessor_index, element);
    std::vector<std::uint32_t> out(view.count);
    for (std::size_t i = 0; i < view.count; ++i) {
        const char* src = view.data->data() + view.offset + i * view.stride;
        if (element == 1) {
            std::uint8_t v;
            std::memcpy(&v, src, 1);
            out[i] = v;
        } else if (element == 2) {
            std::uint16_t v;
            std::memcpy(&v, src, 2);
            out[i] = v;
        } else {
            std::uint32_t v;
            std::memcpy(&v, src, 4);
            out[i] = v;
        }
    }
    return out;
}

Eigen::Matrix4d node_local_transform(const json& node) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    if (node.contains("matrix")) {
        const auto& arr = node.at("matrix");
        for (int col = 0; col < 4; ++col)
            for (int row = 0; row < 4; ++row) m(row, col) = arr.at(col * 4 + row).get<double>();
        return m;
    }
    Vec3 translation = Vec3::Zero();
    Quat rotation = Quat::Identity();
    Vec3 scale = Vec3::Ones();
    if (node.contains("translation")) {
        const auto& t = node.at("translation");
        translation = Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
    }
    if (node.contains("rotation")) {
        const auto& r = node.at("rotation");  // [x, y, z, w]
        rotation = Quat(r.at(3).get<double>(), r.at(0).get<double>(), r.at(1).get<double>(),
                        r.at(2).get<double>());
    }
    if (node.contains("scale")) {
        const auto& s = node.at("scale");
        scale = Vec3(s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>());
    }
    m.block<3, 3>(0, 0) = rotation.toRotationMatrix() * scale.asDiagonal();
    m.block<3, 1>(0, 3) = translation;
    return m;
}

void emit_node_meshes(const GltfDocument& doc, int node_index, const Eigen::Matrix4d& parent,
                      std::vector<TriMesh>& out) {
    const json& node = doc.root.at("nodes").at(node_index);
    const Eigen::Matrix4d world = parent * node_local_transform(node);
    const std::string node_name =
        node.value("name", "node_" + std::to_string(node_index));

    if (node.contains("mesh")) {
        const json& mesh = doc.root.at("meshes").at(node.at("mesh").get<int>());
        const auto& primitives = mesh.at("primitives");
        for (std::size_t pi = 0; pi < primitives.size(); ++pi) {
            const json& prim = primitives.at(pi);
            const int mode = prim.value("mode", 4);
            if (mode != 4)
                throw Error(ErrorCode::invalid_argument,
                            "unsupported-geometry: non-triangle primitive mode " +
                                std::to_string(mode) + " in node '" + node_name + "'");
            const auto& attributes = prim.at("attributes");
            if (!attributes.contains("POSITION"))
                throw Error(ErrorCode::format,
                            "primitive without POSITION in node '" + node_name + "'");
            TriMesh tri;
            tri.name = node_name + "/" + std::to_string(pi);
            tri.vertices = read_positions(doc, attributes.at("POSITION").get<int>());
            for (auto& v : tri.vertices) {
                const Eigen::Vector4d h = world * Eigen::Vector4d(v.x(), v.y(), v.z(), 1.0);
                v = h.head<3>();
            }
            std::vector<std::uint32_t> indices;
            if (prim.contains("indices")) {
                indices = read_indices(doc, prim.at("indices").get<int>());
            } else {
                indices.resize(tri.vertices.size());
                for (std::size_t i = 0; i < indices.size(); ++i)
                    indices[i] = static_cast<std::uint32_t>(i);
            }
            if (indices.size() % 3 != 0)
                throw Error(ErrorCode::format,
                            "triangle index count not divisible by 3 in node '" + node_name + "'");
            for (std::size_t i = 0; i + 2 < indices.size(); i += 3) {
                for (int k = 0; k < 3; ++k)
                    if (indices[i + k] >= tri.vertices.size())
                        throw Error(ErrorCode::format, "vertex index out of range in node '" +
                                                           node_name + "'");
                tri.faces.push_back({static_cast<int>(indices[i]),
                                     static_cast<int>(indices[i + 1]),
                                     static_cast<int>(indices[i + 2])});
            }
            out.push_back(std::move(tri));
        }
    }
    if (node.contains("children"))
        for (const auto& child : node.at("children"))
            emit_node_meshes(doc, child.get<int>(), world, out);
}

std::vector<TriMesh> flatten_gltf(GltfDocument&& doc, const std::string* bin_chunk) {
    if (doc.root.contains("buffers"))
        for (const auto& buffer : doc.root.at("buffers"))
            doc.buffers.push_back(load_gltf_buffer(buffer, doc.base_dir, bin_chunk));

    std::vector<TriMesh> out;
    const Eigen::Matrix4d identity = Eigen::Matrix4d::Identity();
    if (doc.root.contains("scenes")) {
        for (const auto& scene : doc.root.at("scenes"))
            if (scene.contains("nodes"))
                for (const auto& n : scene.at("nodes"))
                    emit_node_meshes(doc, n.get<int>(), identity, out);
    } else if (doc.root.contains("nodes")) {
        // No scene: treat every parentless node as a root.
        std::vector<bool> is_child(doc.root.at("nodes").size(), false);
        for (const auto& node : doc.root.at("nodes"))
            if (node.contains("children"))
                for (const auto& c : node.at("children")) is_child[c.get<int>()] = true;
        for (std::size_t i = 0; i < is_child.size(); ++i)
            if (!is_child[i]) emit_node_meshes(doc, static_cast<int>(i), identity, out);
    }
    return out;
}

json parse_json_or_fail(const std::string& text, const std::filesystem::path& path) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::format, path.string() + ": JSON parse error at byte " +
                                           std::to_string(e.byte) + ": " + e.what());
    }
}

std::vector<TriMesh> load_gltf(const std::filesystem::path& path) {
    GltfDocument doc;
    doc.root = parse_json_or_fail(read_file_bytes(path), path);
    doc.base_dir = path.parent_path();
    return flatten_gltf(std::move(doc), nullptr);
}

std::uint32_t read_u32(const std::string& data, std::size_t offset) {
    std::uint32_t v;
    std::memcpy(&v, data.data() + offset, 4);
    return v;  // GLB is little-endian, as is every target we build for
}

std::vector<TriMesh> load_glb(const std::filesystem::path& path) {
    const std::string data = read_file_bytes(path);
    if (data.size() < 12)
        throw Error(ErrorCode::format, path.string() + ": GLB truncated at byte 0");
    if (read_u32(data, 0) != 0x46546C67u)
        throw Error(ErrorCode::format, path.string() + ": bad GLB magic at byte 0");
    if (read_u32(data, 4) != 2u)
        throw Error(ErrorCode::format, path.string() + ": unsupported GLB version at byte 4");

    std::string json_chunk, bin_chunk;
    std::size_t offset = 12;
    while (offset + 8 <= data.size()) {
        const std::uint32_t length = read_u32(data, offset);
        const std::uint32_t type = read_u32(data, offset + 4);
        if (offset + 8 + length > data.size())
            throw Error(ErrorCode::format, path.string() + ": GLB chunk overruns file at byte " +
                                               std::to_string(offset));
        const std::string chunk = data.substr(offset + 8, length);
        if (type == 0x4E4F534Au)
            json_chunk = chunk;
        else if (type == 0x004E4942u)
            bin_chunk = chunk;
        offset += 8 + length + ((4 - length % 4) % 4);
    }
    if (json_chunk.empty())
        throw Error(ErrorCode::format, path.string() + ": GLB has no JSON chunk");

    GltfDocument doc;
    doc.root = parse_json_or_fail(json_chunk, path);
    doc.base_dir = path.parent_path();
    return flatten_gltf(std::move(doc), &bin_chunk);
}

}  // namespace

MeshFormat format_from_path(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".obj") return MeshFormat::obj;
    if (ext == ".gltf") return MeshFormat::gltf;
    if (ext == ".glb") return MeshFormat::glb;
    throw Error(ErrorCode::format, "unsupported mesh format: " + path.string());
}

std::vector<TriMesh> load_mesh(const std::filesystem::path& path, MeshFormat format) {
    switch (format) {
        case MeshFormat::obj: return load_obj(path);
        case MeshFormat::gltf: return load_gltf(path);
        case MeshFormat::glb: return load_glb(path);
    }
    throw Error(ErrorCode::internal, "unreachable");
}

std::vector<TriMesh> load_mesh(const std::filesystem::path& path) {
    return load_mesh(path, format_from_path(path));
}

void write_obj(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write file: " + path.string());
    char buf[128];
    if (!mesh.name.empty()) out << "o " << mesh.name << "\n";
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        out << buf;
    }
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
    if (!out) throw Error(ErrorCode::io, "write failed: " + path.string());
}

}  // namespace partkit
