#include <doctest.h>

#include "test_helpers.hpp"

using namespace partkit;
using pktest::random_point;
using pktest::random_quat;

namespace {

// Independent oracle: best axis-aligned volume over a bag of random
// rotations. The exact minimum can only be at or below this.
double rotation_grid_best_volume(const std::vector<Vec3>& points, int rotations,
                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double best = std::numeric_limits<double>::max();
    for (int i = 0; i < rotations; ++i) {
        const Mat3 r = random_quat(rng).toRotationMatrix();
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
        Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
        for (const auto& p : points) {
            const Vec3 q = r * p;
            lo = lo.cwiseMin(q);
            hi = hi.cwiseMax(q);
        }
        best = std::min(best, (hi - lo).prod());
    }
    return best;
}

std::vector<Vec3> box_corner_points(const Vec3& extents) {
    Obb box;
    box.half_extents = 0.5 * extents;
    const auto corners = obb_corners(box);
    return {corners.begin(), corners.end()};
}

}  // namespace

TEST_CASE("obb_corners follow the documented bit pattern") {
    Obb box;
    box.half_extents = Vec3(0.5, 0.5, 0.5);
    const auto corners = obb_corners(box);
    for (int i = 0; i < 8; ++i) {
        CHECK(corners[i].x() == doctest::Approx((i & 1) ? 0.5 : -0.5));
        CHECK(corners[i].y() == doctest::Approx((i & 2) ? 0.5 : -0.5));
        CHECK(corners[i].z() == doctest::Approx((i & 4) ? 0.5 : -0.5));
    }
}

TEST_CASE("obb_corners shift with the center") {
    Obb box;
    box.half_extents = Vec3(0.5, 0.5, 0.5);
    box.center = Vec3(1, 0, 0);
    const auto corners = obb_corners(box);
    CHECK(corners[0].x() == doctest::Approx(0.5));
    CHECK(corners[1].x() == doctest::Approx(1.5));
}

TEST_CASE("obb_corners round-trip through the local frame") {
    std::mt19937_64 rng(3);
    Obb box;
    box.center = random_point(rng, 2.0);
    box.half_extents = Vec3(0.9, 0.5, 0.2);
    box.rotation = random_quat(rng);
    const auto corners = obb_corners(box);
    for (int i = 0; i < 8; ++i) {
        const Vec3 local = box.to_local(corners[i]);
        CHECK(std::abs(local.x()) == doctest::Approx(0.9).epsilon(1e-12));
        CHECK(std::abs(local.y()) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::abs(local.z()) == doctest::Approx(0.2).epsilon(1e-12));
    }
}

TEST_CASE("min_obb of an axis-aligned box's corners") {
    const auto points = box_corner_points(Vec3(1, 2, 3));
    const MinObbResult result = min_obb(points);
    CHECK_FALSE(result.degenerate);
    CHECK(result.box.volume() == doctest::Approx(6.0).epsilon(1e-9));
    // Canonical form sorts extents descending.
    CHECK(result.box.half_extents.x() == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(result.box.half_extents.y() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(result.box.half_extents.z() == doctest::Approx(0.5).epsilon(1e-9));
    // Rotation is an axis permutation: each column must be a signed unit
    // axis.
    const Mat3 axes = result.box.rotation.toRotationMatrix();
    for (int c = 0; c < 3; ++c) CHECK(axes.col(c).cwiseAbs().maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("min_obb volume is invariant under rotation of the input") {
    std::mt19937_64 rng(5);
    const auto points = box_corner_points(Vec3(1, 2, 3));
    for (int trial = 0; trial < 5; ++trial) {
        const Quat r = random_quat(rng);
        std::vector<Vec3> rotated;
        for (const auto& p : points) rotated.push_back(r * p);
        CHECK(min_obb(rotated).box.volume() == doctest::Approx(6.0).epsilon(1e-9));
    }
}

TEST_CASE("min_obb rotation invariance over 50 random point sets") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Vec3> points;
        const int n = 8 + static_cast<int>(partkit::uniform_double(rng) * 40);
        for (int i = 0; i < n; ++i) points.push_back(random_point(rng));
        const double base = min_obb(points).box.volume();

        const Quat r = random_quat(rng);
        std::vector<Vec3> rotated;
        for (const auto& p : points) rotated.push_back(r * p);
        const double turned = min_obb(rotated).box.volume();
        CHECK(std::abs(turned - base) <= 1e-9 * base);
    }
}

TEST_CASE("min_obb beats the rotation-grid oracle on random ball points") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Vec3> points;
        for (int i = 0; i < 64; ++i) {
            Vec3 p = random_point(rng);
            while (p.norm() > 1.0) p = random_point(rng);
            points.push_back(p);
        }
        const double mine = min_obb(points).box.volume();
        const double oracle = rotation_grid_best_volume(points, 20000, 1000 + trial);
        CHECK(mine <= oracle + 1e-9 * oracle);
    }
}

TEST_CASE("min_obb contains every input point") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vec3> points;
        const int n = 4 + static_cast<int>(partkit::uniform_double(rng) * 60);
        for (int i = 0; i < n; ++i) points.push_back(random_point(rng, 2.0));
        const Obb box = min_obb(points).box;
        for (const auto& p : points) CHECK(box.contains(p, 1e-9));
    }
}

TEST_CASE("min_obb volume never decreases when a point is added") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Vec3> points;
        for (int i = 0; i < 16; ++i) points.push_back(random_point(rng));
        const double before = min_obb(points).box.volume();
        points.push_back(random_point(rng, 1.5));
        const double after = min_obb(points).box.volume();
        CHECK(after >= before - 1e-9 * before);
    }
}

TEST_CASE("min_obb of a box's corners reproduces the box volume") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        Obb box;
        box.center = random_point(rng, 2.0);
        box.half_extents = Vec3(0.1 + partkit::uniform_double(rng),
                                0.1 + partkit::uniform_double(rng),
                                0.1 + partkit::uniform_double(rng));
        box.rotation = random_quat(rng);
        const auto corners = obb_corners(box);
        const double recovered =
            min_obb(std::vector<Vec3>(corners.begin(), corners.end())).box.volume();
        CHECK(recovered == doctest::Approx(box.volume()).epsilon(1e-9));
    }
}

TEST_CASE("min_obb handles degenerate inputs with thin-axis clamping") {
    CHECK_THROWS_AS(min_obb({}), Error);

    // Coplanar square.
    std::vector<Vec3> square = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0),
                                Vec3(0.5, 0.5, 0)};
    const MinObbResult planar = min_obb(square);
    CHECK(planar.degenerate);
    CHECK(planar.box.half_extents.minCoeff() == doctest::Approx(kThinHalfExtent));
    CHECK(planar.box.half_extents.maxCoeff() == doctest::Approx(0.5).epsilon(1e-9));
    for (const auto& p : square) CHECK(planar.box.contains(p, 1e-9));

    // Collinear points.
    const MinObbResult linear = min_obb({Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2)});
    CHECK(linear.degenerate);
    CHECK(linear.box.half_extents.x() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-9));

    // A single (repeated) point.
    const MinObbResult point = min_obb({Vec3(1, 2, 3), Vec3(1, 2, 3)});
    CHECK(point.degenerate);
    CHECK(point.box.center.isApprox(Vec3(1, 2, 3)));
}

TEST_CASE("pca_obb reproduces an axis-aligned box") {
    const auto points = box_corner_points(Vec3(2, 1, 0.5));
    const Obb box = pca_obb(points);
    CHECK(box.volume() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(box.half_extents.x() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pca_obb is never smaller than min_obb") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<Vec3> points;
        const int n = 8 + static_cast<int>(partkit::uniform_double(rng) * 40);
        for (int i = 0; i < n; ++i) points.push_back(random_point(rng, 2.0));
        CHECK(pca_obb(points).volume() >= min_obb(points).box.volume() - 1e-9);
    }
}

TEST_CASE("pca_obb principal axis tracks an elongated Gaussian cloud") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec3> points;
    for (int i = 0; i < 1000; ++i)
        points.push_back(Vec3(3.0 * gauss(rng), 1.0 * gauss(rng), 0.3 * gauss(rng)));

    // Oracle: eigenvector of the widest sample-covariance eigenvalue.
    Vec3 mean = Vec3::Zero();
    for (const auto& p : points) mean += p;
    mean /= static_cast<double>(points.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) cov += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
    const Vec3 oracle_axis = solver.eigenvectors().col(2);

    // The widest box axis is column 0 in the canonical frame.
    const Obb box = pca_obb(points);
    const Vec3 box_axis = box.rotation.toRotationMatrix().col(0);
    const double align = std::abs(box_axis.dot(oracle_axis));
    CHECK(align >= std::cos(5.0 * M_PI / 180.0));
    CHECK(std::abs(box_axis.dot(Vec3::UnitX())) >= std::cos(5.0 * M_PI / 180.0));
}

TEST_CASE("pca_obb rejects identical points") {
    CHECK_THROWS_AS(pca_obb({Vec3(1, 1, 1), Vec3(1, 1, 1)}), Error);
}

TEST_CASE("enclosing_obb of a single box is that box") {
    std::mt19937_64 rng(19);
    Obb box;
    box.center = random_point(rng);
    box.half_extents = Vec3(0.8, 0.4, 0.3);
    box.rotation = random_quat(rng);
    const Obb enclosing = enclosing_obb({box});
    CHECK(enclosing.volume() == doctest::Approx(box.volume()).epsilon(1e-9));
    for (const auto& c : obb_corners(box)) CHECK(enclosing.contains(c, 1e-9));
}

TEST_CASE("enclosing_obb of two touching unit cubes") {
    Obb a, b;
    a.half_extents = b.half_extents = Vec3(0.5, 0.5, 0.5);
    a.center = Vec3(-1, 0, 0);
    b.center = Vec3(1, 0, 0);
    const Obb enclosing = enclosing_obb({a, b});
    CHECK(enclosing.volume() == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(enclosing.half_extents.x() == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("enclosing_obb of random boxes contains all corners and beats the grid oracle") {
    std::mt19937_64 rng(21);
    std::vector<Obb> boxes;
    std::vector<Vec3> corners;
    for (int i = 0; i < 5; ++i) {
        Obb box;
        box.center = random_point(rng);
        box.half_extents = Vec3(0.2 + partkit::uniform_double(rng) * 0.5,
                                0.2 + partkit::uniform_double(rng) * 0.5,
                                0.2 + partkit::uniform_double(rng) * 0.5);
        box.rotation = random_quat(rng);
        boxes.push_back(box);
        for (const auto& c : obb_corners(box)) corners.push_back(c);
    }
    const Obb enclosing = enclosing_obb(boxes);
    for (const auto& c : corners) CHECK(enclosing.contains(c, 1e-9));
    const double oracle = rotation_grid_best_volume(corners, 20000, 77);
    CHECK(enclosing.volume() <= oracle + 1e-9 * oracle);
}

TEST_CASE("enclosing_obb rejects an empty list") {
    CHECK_THROWS_AS(enclosing_obb({}), Error);
}
