#ifndef PARTKIT_TYPES_HPP
#define PARTKIT_TYPES_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace partkit {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;
using Mat3 = Eigen::Matrix3d;

enum class ErrorCode {
    io,
    format,
    schema,
    degenerate_shape,
    invalid_argument,
    unavailable,
    empty_input,
    mismatch,
    internal,
};

/// All library failures are reported through this exception type so the
/// C boundary can map them onto stable status codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

const char* error_code_name(ErrorCode code);

/// Indexed triangle mesh. Vertices are 3D positions in normalized object
/// units; faces index into the vertex list.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::string name;

    bool empty() const { return vertices.empty() || faces.empty(); }
};

struct Aabb {
    Vec3 min{Vec3::Constant(std::numeric_limits<double>::max())};
    Vec3 max{Vec3::Constant(std::numeric_limits<double>::lowest())};

    bool valid() const { return (min.array() <= max.array()).all(); }
    Vec3 center() const { return 0.5 * (min + max); }
    Vec3 extents() const { return max - min; }
    double diagonal() const { return (max - min).norm(); }

    void expand(const Vec3& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
    void expand(const Aabb& other) {
        min = min.cwiseMin(other.min);
        max = max.cwiseMax(other.max);
    }
    Aabb inflated(double amount) const {
        return Aabb{min - Vec3::Constant(amount), max + Vec3::Constant(amount)};
    }
    bool intersects(const Aabb& other) const {
        return (min.array() <= other.max.array()).all() &&
               (other.min.array() <= max.array()).all();
    }
    bool contains(const Vec3& p, double tol = 0.0) const {
        return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
    }
};

/// Point/normal pairs sampled from a mesh surface; index-aligned.
struct SurfaceSamples {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
};

/// x' = scale * (x + translation). Translation is applied before the
/// uniform scale.
struct NormalizationTransform {
    Vec3 translation{Vec3::Zero()};
    double scale{1.0};

    Vec3 apply(const Vec3& p) const { return scale * (p + translation); }
    bool is_identity(double tol = 1e-12) const {
        return std::abs(scale - 1.0) <= tol && translation.cwiseAbs().maxCoeff() <= tol;
    }
};

}  // namespace partkit

#endif
