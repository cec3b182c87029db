#include <doctest.h>

#include <sstream>

#include "partkit/refine.hpp"
#include "partkit/serialization.hpp"
#include "test_helpers.hpp"

using namespace partkit;
using pktest::make_box;
using pktest::random_point;
using pktest::random_quat;

namespace {

// A four-part layout whose parts exactly fill their boxes.
std::pair<std::vector<TriMesh>, Layout> perfectly_fitting_parts() {
    Layout layout;
    std::vector<TriMesh> parts;
    const Vec3 centers[4] = {Vec3(0, 0.5, 0), Vec3(-0.4, 0, 0), Vec3(0.4, 0, 0),
                             Vec3(0, -0.45, 0)};
    const Vec3 sizes[4] = {Vec3(1.0, 0.1, 0.8), Vec3(0.15, 0.9, 0.15), Vec3(0.15, 0.9, 0.15),
                           Vec3(0.7, 0.1, 0.5)};
    for (int i = 0; i < 4; ++i) {
        Obb box;
        box.center = centers[i];
        box.half_extents = 0.5 * sizes[i];
        layout.boxes.push_back(box);
        parts.push_back(box.to_mesh());
    }
    return {parts, layout};
}

std::string serialize_mesh(const TriMesh& mesh) {
    std::ostringstream ss;
    for (const auto& v : mesh.vertices) ss << v.x() << "," << v.y() << "," << v.z() << ";";
    for (const auto& f : mesh.faces) ss << f[0] << "/" << f[1] << "/" << f[2] << ";";
    return ss.str();
}

}  // namespace

TEST_CASE("apply_similarity identity leaves geometry bit-identical") {
    const TriMesh box = make_box(Vec3(0.3, -0.2, 0.7), Vec3(1, 2, 0.5));
    const TriMesh moved = apply_similarity(box, SimilarityTransform{});
    CHECK(serialize_mesh(moved) == serialize_mesh(box));
}

TEST_CASE("apply_similarity scales an OBB's extents and volume") {
    Obb box;
    box.half_extents = Vec3(0.5, 0.5, 0.5);
    SimilarityTransform t;
    t.scale = 2.0;
    const Obb scaled = apply_similarity(box, t);
    CHECK(scaled.half_extents.isApprox(Vec3(1, 1, 1)));
    CHECK(scaled.volume() == doctest::Approx(8.0));
}

TEST_CASE("composed transforms equal sequential application") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        SimilarityTransform t1, t2;
        t1.scale = 0.5 + uniform_double(rng);
        t1.rotation = random_quat(rng);
        t1.translation = random_point(rng);
        t2.scale = 0.5 + uniform_double(rng);
        t2.rotation = random_quat(rng);
        t2.translation = random_point(rng);
        const SimilarityTransform combined = SimilarityTransform::compose(t2, t1);
        for (int i = 0; i < 10; ++i) {
            const Vec3 p = random_point(rng, 2.0);
            CHECK((combined.apply(p) - t2.apply(t1.apply(p))).norm() <= 1e-9);
        }
        // Inverse round trip.
        const SimilarityTransform inv = combined.inverse();
        const Vec3 p = random_point(rng);
        CHECK((inv.apply(combined.apply(p)) - p).norm() <= 1e-9);
    }
}

TEST_CASE("optimize_layout returns near-identity on aligned parts") {
    auto [parts, layout] = perfectly_fitting_parts();
    const OptimizeResult result = optimize_layout(parts, layout, BeamConfig{});
    CHECK(result.initial_score == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(result.final_score >= result.initial_score - 1e-12);
    CHECK(result.transform.translation.norm() <= 1e-3);
    CHECK(std::abs(result.transform.scale - 1.0) <= 1e-3);
    const double angle = 2.0 * std::acos(std::min(1.0, std::abs(result.transform.rotation.w())));
    CHECK(angle <= 0.1 * M_PI / 180.0);
}

TEST_CASE("optimize_layout recovers a planted translation") {
    auto [parts, layout] = perfectly_fitting_parts();
    SimilarityTransform planted;
    planted.translation = Vec3(0.06, 0, 0);
    std::vector<TriMesh> misaligned;
    for (const auto& p : parts) misaligned.push_back(apply_similarity(p, planted));

    const OptimizeResult result = optimize_layout(misaligned, layout, BeamConfig{});
    CHECK(result.final_score >= 0.95);
    CHECK((result.transform.translation - Vec3(-0.06, 0, 0)).norm() <= 5e-3);
    CHECK(result.final_score >= result.initial_score);
}

TEST_CASE("optimize_layout recovers a planted scale") {
    auto [parts, layout] = perfectly_fitting_parts();
    SimilarityTransform planted;
    planted.scale = 1.1;
    std::vector<TriMesh> misaligned;
    for (const auto& p : parts) misaligned.push_back(apply_similarity(p, planted));

    const OptimizeResult result = optimize_layout(misaligned, layout, BeamConfig{});
    CHECK(result.final_score >= 0.95);
    CHECK(std::abs(result.transform.scale - 1.0 / 1.1) <= 0.01);
}

TEST_CASE("optimize_layout trace has a non-decreasing best score") {
    auto [parts, layout] = perfectly_fitting_parts();
    SimilarityTransform planted;
    planted.translation = Vec3(0.04, -0.03, 0.02);
    planted.rotation = Quat(Eigen::AngleAxisd(3.0 * M_PI / 180.0, Vec3::UnitY()));
    std::vector<TriMesh> misaligned;
    for (const auto& p : parts) misaligned.push_back(apply_similarity(p, planted));

    const OptimizeResult result = optimize_layout(misaligned, layout, BeamConfig{});
    for (std::size_t i = 1; i < result.trace.size(); ++i)
        CHECK(result.trace[i].best_score >= result.trace[i - 1].best_score - 1e-15);
    CHECK(result.final_score >= 0.9);
}

TEST_CASE("optimize_layout preserves shape: distance ratios equal the scale") {
    auto [parts, layout] = perfectly_fitting_parts();
    SimilarityTransform planted;
    planted.scale = 0.93;
    planted.translation = Vec3(0.02, 0.01, -0.03);
    std::vector<TriMesh> misaligned;
    for (const auto& p : parts) misaligned.push_back(apply_similarity(p, planted));

    const OptimizeResult result = optimize_layout(misaligned, layout, BeamConfig{});
    const TriMesh moved = apply_similarity(misaligned[0], result.transform);
    const TriMesh& original = misaligned[0];
    for (std::size_t i = 1; i < original.vertices.size(); ++i) {
        const double before = (original.vertices[i] - original.vertices[0]).norm();
        const double after = (moved.vertices[i] - moved.vertices[0]).norm();
        CHECK(after == doctest::Approx(before * result.transform.scale).epsilon(1e-9));
    }
}

TEST_CASE("optimize_layout rejects empty-geometry inputs") {
    Layout layout;
    Obb box;
    layout.boxes = {box};
    CHECK_THROWS_AS(optimize_layout({TriMesh{}}, layout, BeamConfig{}), Error);
}

TEST_CASE("filter_artifacts removes a floater outside the control box") {
    Layout layout;
    Obb box;
    box.half_extents = Vec3(0.5, 0.1, 0.5);
    layout.boxes = {box};
    // Slab filling the box plus a tiny floater outside it.
    TriMesh part = make_box(Vec3::Zero(), Vec3(1.0, 0.2, 1.0));
    const std::size_t slab_faces = part.faces.size();
    part = concatenate(part, make_box(Vec3(2.0, 0, 0), 0.05));

    auto [cleaned, report] = filter_artifacts({part}, layout, 0.5);
    REQUIRE(cleaned.size() == 1);
    CHECK(cleaned[0].faces.size() == slab_faces);
    CHECK(report.entries[0].components_before == 2);
    CHECK(report.entries[0].removed_components == 1);
    CHECK_FALSE(report.entries[0].flagged);
    // The retained slab still fills the box.
    const Aabb bounds = mesh_aabb(cleaned[0]);
    CHECK(bounds.max.x() == doctest::Approx(0.5));
}

TEST_CASE("filter_artifacts passes single-component parts through bit-identically") {
    Layout layout;
    Obb box;
    layout.boxes = {box};
    const TriMesh part = make_box(Vec3(0.1, 0.2, 0.3), Vec3(0.4, 0.5, 0.6));
    auto [cleaned, report] = filter_artifacts({part}, layout, 0.5);
    CHECK(serialize_mesh(cleaned[0]) == serialize_mesh(part));
    CHECK(report.entries[0].removed_components == 0);
}

TEST_CASE("filter_artifacts flags but keeps parts whose main component misses the box") {
    Layout layout;
    Obb box;
    box.half_extents = Vec3(0.5, 0.5, 0.5);
    layout.boxes = {box};
    // The bigger component sits well outside the box: IoU far below theta.
    TriMesh part = make_box(Vec3(3, 0, 0), 1.0);
    part = concatenate(part, make_box(Vec3(0, 0, 0), 0.3));

    auto [cleaned, report] = filter_artifacts({part}, layout, 0.5);
    CHECK(report.entries[0].flagged);
    CHECK(report.entries[0].removed_components == 0);
    CHECK(serialize_mesh(cleaned[0]) == serialize_mesh(part));
    CHECK(report.entries[0].largest_component_iou < 0.5);
}

TEST_CASE("filter_artifacts is idempotent and never grows face counts") {
    Layout layout;
    Obb box;
    box.half_extents = Vec3(0.5, 0.25, 0.5);
    layout.boxes = {box};
    TriMesh part = make_box(Vec3::Zero(), Vec3(1.0, 0.5, 1.0));
    part = concatenate(part, make_box(Vec3(1.5, 0, 0), 0.1));
    part = concatenate(part, make_box(Vec3(0, 1.5, 0), 0.08));

    auto [once, report1] = filter_artifacts({part}, layout, 0.5);
    auto [twice, report2] = filter_artifacts(once, layout, 0.5);
    CHECK(once[0].faces.size() <= part.faces.size());
    CHECK(serialize_mesh(once[0]) == serialize_mesh(twice[0]));
    CHECK(report2.entries[0].components_before == 1);
}

TEST_CASE("filter_artifacts validates theta") {
    Layout layout;
    Obb box;
    layout.boxes = {box};
    CHECK_THROWS_AS(filter_artifacts({box.to_mesh()}, layout, 0.0), Error);
    CHECK_THROWS_AS(filter_artifacts({box.to_mesh()}, layout, 1.5), Error);
}
