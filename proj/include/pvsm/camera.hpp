// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pvsm/error.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <optional>
#include <string>

namespace pvsm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Points closer to the image plane than this (camera-frame z) are rejected.
inline constexpr double kEpsilonDepth = 1e-8;

/// Tolerance used when validating rotation matrices handed to constructors.
inline constexpr double kRotationTolerance = 1e-9;

struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
};

/// Pinhole intrinsics in pixels. Pixel (col, row) has its continuous center
/// at (col + 0.5, row + 0.5).
struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    Mat3
    matrix() const {
        Mat3 k;
        k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
        return k;
    }

    Mat3
    inverse_matrix() const {
        Mat3 k;
        k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
        return k;
    }

    bool operator==(const Intrinsics &) const = default;
};

inline void
validate(const Intrinsics &k) {
    if (!(k.fx > 0.0) || !(k.fy > 0.0) || !std::isfinite(k.fx) || !std::isfinite(k.fy)) {
        fail(ErrorCode::InvalidSpec, "focal lengths must be positive and finite");
    }
    if (!std::isfinite(k.cx) || !std::isfinite(k.cy)) {
        fail(ErrorCode::InvalidSpec, "principal point must be finite");
    }
    if (k.width < 1 || k.height < 1) {
        fail(ErrorCode::InvalidSpec, "image dimensions must be at least 1x1");
    }
}

/// Largest per-entry deviation of rᵀr from identity, and |det(r) - 1|.
inline double
orthonormality_error(const Mat3 &r) {
    const double gram = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
    return std::max(gram, std::abs(r.determinant() - 1.0));
}

/// x ↦ rotation·x + translation.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform
    identity() {
        return {};
    }

    Vec3
    apply(const Vec3 &x) const {
        return rotation * x + translation;
    }

    bool
    operator==(const RigidTransform &o) const {
        return rotation == o.rotation && translation == o.translation;
    }
};

/// x ↦ scale·rotation·x + translation.
struct SimilarityTransform {
    double scale = 1.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3
    apply(const Vec3 &x) const {
        return scale * (rotation * x) + translation;
    }
};

inline void
validate(const RigidTransform &g, double tolerance = kRotationTolerance) {
    if (!g.rotation.allFinite() || !g.translation.allFinite()) {
        fail(ErrorCode::ConventionMismatch, "transform has non-finite entries");
    }
    if (orthonormality_error(g.rotation) > tolerance) {
        fail(ErrorCode::ConventionMismatch, "rotation is not a proper orthonormal matrix");
    }
}

/// g2 ∘ g1: apply g1 first.
inline RigidTransform
compose(const RigidTransform &g2, const RigidTransform &g1) {
    return {g2.rotation * g1.rotation, g2.rotation * g1.translation + g2.translation};
}

inline RigidTransform
inverse(const RigidTransform &g) {
    const Mat3 rt = g.rotation.transpose();
    return {rt, -(rt * g.translation)};
}

inline Mat3
rotation_about(const Vec3 &axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

/// Rotation about the camera's optical (+z) axis.
inline Mat3
rotation_z(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat3 r;
    r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    return r;
}

/// Pinhole camera with world-to-camera extrinsics: X_cam = R·X_world + t.
/// The camera looks down +z with +x right and +y down.
struct Camera {
    Intrinsics intrinsics;
    RigidTransform extrinsics;

    int
    width() const {
        return intrinsics.width;
    }
    int
    height() const {
        return intrinsics.height;
    }

    Vec3
    center() const {
        return -(extrinsics.rotation.transpose() * extrinsics.translation);
    }

    /// Unit optical axis in world coordinates (third row of R).
    Vec3
    forward() const {
        return extrinsics.rotation.row(2).transpose();
    }

    Vec3
    to_camera(const Vec3 &world) const {
        return extrinsics.apply(world);
    }

    Vec3
    to_world(const Vec3 &cam) const {
        return extrinsics.rotation.transpose() * (cam - extrinsics.translation);
    }

    static Camera
    from_center(const Intrinsics &k, const Mat3 &worldToCam, const Vec3 &center) {
        return Camera{k, RigidTransform{worldToCam, -(worldToCam * center)}};
    }
};

inline void
validate(const Camera &camera) {
    validate(camera.intrinsics);
    validate(camera.extrinsics);
    if (!camera.center().allFinite()) {
        fail(ErrorCode::ConventionMismatch, "camera center is not finite");
    }
}

struct Ray {
    Vec3 origin;
    Vec3 direction;
};

/// World-space viewing ray through continuous pixel coordinates (u, v).
inline Ray
pixel_ray(const Camera &camera, double u, double v) {
    const Intrinsics &k = camera.intrinsics;
    const Vec3 dirCam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
    const Vec3 dir = camera.extrinsics.rotation.transpose() * dirCam;
    return {camera.center(), dir.normalized()};
}

struct Projection {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
};

/// Non-throwing projection; nullopt when the point is not in front of the camera.
inline std::optional<Projection>
try_project(const Camera &camera, const Vec3 &world) {
    const Vec3 p = camera.to_camera(world);
    const double z = p.z();
    if (!(z > kEpsilonDepth)) {
        return std::nullopt;
    }
    const Intrinsics &k = camera.intrinsics;
    return Projection{k.fx * (p.x() / z) + k.cx, k.fy * (p.y() / z) + k.cy, z};
}

inline Projection
project(const Camera &camera, const Vec3 &world) {
    if (auto p = try_project(camera, world)) {
        return *p;
    }
    fail(ErrorCode::PointBehindCamera, "point has camera-frame depth <= epsilon");
}

/// Re-express a camera after the whole world has been moved by g.
inline Camera
apply_gauge(const RigidTransform &g, const Camera &camera) {
    const Mat3 r = camera.extrinsics.rotation * g.rotation.transpose();
    const Vec3 t = camera.extrinsics.translation - r * g.translation;
    return Camera{camera.intrinsics, RigidTransform{r, t}};
}

/// Scale the world about its origin by s; camera centers scale by s.
inline Camera
apply_world_scale(double s, const Camera &camera) {
    if (!(s > 0.0) || !std::isfinite(s)) {
        fail(ErrorCode::NonPositiveScale, "world scale must be positive, got " + std::to_string(s));
    }
    return Camera{camera.intrinsics,
                  RigidTransform{camera.extrinsics.rotation, s * camera.extrinsics.translation}};
}

} // namespace pvsm
