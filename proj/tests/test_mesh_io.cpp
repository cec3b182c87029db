#include <doctest.h>

#include <fstream>

#include "partkit/mesh_io.hpp"
#include "test_helpers.hpp"

using namespace partkit;

namespace {

std::filesystem::path write_temp(const std::string& tag, const std::string& name,
                                 const std::string& content) {
    const auto dir = pktest::scratch_dir(tag);
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

// Minimal single-triangle glTF with an embedded data-URI buffer; the
// node transform is the variable under test.
std::string triangle_gltf(const std::string& node_extras) {
    return R"({
  "asset": {"version": "2.0"},
  "scenes": [{"nodes": [0]}],
  "nodes": [{"name": "tri_node", "mesh": 0)" +
           node_extras + R"(}],
  "meshes": [{"primitives": [{"attributes": {"POSITION": 0}, "indices": 1}]}],
  "buffers": [{"byteLength": 44, "uri": "data:application/octet-stream;base64,AAAAAAAAAAAAAAAAAACAPwAAAAAAAAAAAAAAAAAAgD8AAAAAAAABAAIAAAA="}],
  "bufferViews": [
    {"buffer": 0, "byteOffset": 0, "byteLength": 36},
    {"buffer": 0, "byteOffset": 36, "byteLength": 6}
  ],
  "accessors": [
    {"bufferView": 0, "componentType": 5126, "count": 3, "type": "VEC3"},
    {"bufferView": 1, "componentType": 5123, "count": 3, "type": "SCALAR"}
  ]
})";
}

}  // namespace

TEST_CASE("OBJ with two object groups loads as two meshes") {
    const auto path = write_temp("obj_groups", "two.obj",
                                 "o first\n"
                                 "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
                                 "f 1 2 3\n"
                                 "o second\n"
                                 "v 2 0 0\nv 3 0 0\nv 2 1 0\n"
                                 "f 4 5 6\n");
    const auto meshes = load_mesh(path);
    REQUIRE(meshes.size() == 2);
    CHECK(meshes[0].name == "first");
    CHECK(meshes[1].name == "second");
    CHECK(meshes[0].faces.size() == 1);
    CHECK(meshes[1].vertices.size() == 3);
}

TEST_CASE("OBJ fan-triangulates polygons and accepts negative indices") {
    const auto path = write_temp("obj_quad", "quad.obj",
                                 "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
                                 "f -4 -3 -2 -1\n");
    const auto meshes = load_mesh(path);
    REQUIRE(meshes.size() == 1);
    CHECK(meshes[0].faces.size() == 2);
}

TEST_CASE("OBJ parse failure reports line and byte offset") {
    const auto path = write_temp("obj_bad", "bad.obj", "v 0 0 0\nf 1 nonsense 2\n");
    try {
        load_mesh(path);
        FAIL("expected a format error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::format);
        CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("glTF node translation is baked into vertices") {
    const auto path = write_temp("gltf_translate", "tri.gltf",
                                 triangle_gltf(R"(, "translation": [1.0, 0.0, 0.0])"));
    const auto meshes = load_mesh(path);
    REQUIRE(meshes.size() == 1);
    REQUIRE(meshes[0].vertices.size() == 3);
    CHECK(meshes[0].vertices[0].x() == doctest::Approx(1.0));
    CHECK(meshes[0].vertices[1].x() == doctest::Approx(2.0));
    CHECK(meshes[0].vertices[2].y() == doctest::Approx(1.0));
}

TEST_CASE("glTF matrix-form node transforms are baked too") {
    // Column-major: uniform scale 2 with translation (0, 0, 1).
    const auto path = write_temp(
        "gltf_matrix", "tri.gltf",
        triangle_gltf(R"(, "matrix": [2,0,0,0, 0,2,0,0, 0,0,2,0, 0,0,1,1])"));
    const auto meshes = load_mesh(path);
    REQUIRE(meshes.size() == 1);
    CHECK(meshes[0].vertices[1].x() == doctest::Approx(2.0));
    CHECK(meshes[0].vertices[0].z() == doctest::Approx(1.0));
    CHECK(meshes[0].vertices[2].y() == doctest::Approx(2.0));
}

TEST_CASE("glTF non-triangle primitive mode is rejected naming the node") {
    std::string doc = triangle_gltf("");
    const auto pos = doc.find("\"indices\": 1}");
    REQUIRE(pos != std::string::npos);
    doc.replace(pos, std::string("\"indices\": 1}").size(), "\"indices\": 1, \"mode\": 1}");
    const auto path = write_temp("gltf_mode", "lines.gltf", doc);
    try {
        load_mesh(path);
        FAIL("expected an unsupported-geometry error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("tri_node") != std::string::npos);
        CHECK(std::string(e.what()).find("unsupported-geometry") != std::string::npos);
    }
}

TEST_CASE("lamp.glb flattens to three meshes with the reference AABB") {
    const auto path = std::filesystem::path(PARTKIT_FIXTURE_DIR) / "lamp.glb";
    const auto meshes = load_mesh(path);
    REQUIRE(meshes.size() == 3);

    Aabb box = meshes_aabb(meshes);
    // Baked world-space bounds exported independently of this loader.
    CHECK(box.min.x() == doctest::Approx(-0.400000005960).epsilon(1e-9));
    CHECK(box.min.y() == doctest::Approx(-0.550000000745).epsilon(1e-9));
    CHECK(box.min.z() == doctest::Approx(-0.400000005960).epsilon(1e-9));
    CHECK(box.max.x() == doctest::Approx(0.453553390593).epsilon(1e-9));
    CHECK(box.max.y() == doctest::Approx(0.700000001490).epsilon(1e-9));
    CHECK(box.max.z() == doctest::Approx(0.400000005960).epsilon(1e-9));
}

TEST_CASE("GLB with a corrupt header reports the byte offset") {
    const auto path = write_temp("glb_bad", "bad.glb", "nope");
    try {
        load_mesh(path);
        FAIL("expected a format error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::format);
        CHECK(std::string(e.what()).find("byte 0") != std::string::npos);
    }
}

TEST_CASE("unknown extension is rejected") {
    CHECK_THROWS_AS(format_from_path("shape.stl"), Error);
}

TEST_CASE("OBJ writer round-trips a mesh") {
    const auto dir = pktest::scratch_dir("obj_roundtrip");
    const TriMesh box = pktest::make_box(Vec3(0.25, -0.5, 1.0), Vec3(1, 2, 3));
    write_obj(box, dir / "box.obj");
    const auto loaded = load_mesh(dir / "box.obj");
    REQUIRE(loaded.size() == 1);
    REQUIRE(loaded[0].vertices.size() == box.vertices.size());
    CHECK(loaded[0].faces.size() == box.faces.size());
    // The loader compacts vertices in face order; compare as sets.
    auto sorted = [](std::vector<Vec3> verts) {
        std::sort(verts.begin(), verts.end(), [](const Vec3& a, const Vec3& b) {
            return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
        });
        return verts;
    };
    const auto a = sorted(box.vertices);
    const auto b = sorted(loaded[0].vertices);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() <= 1e-15);
}
