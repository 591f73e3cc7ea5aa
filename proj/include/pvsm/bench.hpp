// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pvsm/camera.hpp"
#include "pvsm/conditioning.hpp"
#include "pvsm/error.hpp"
#include "pvsm/image.hpp"
#include "pvsm/random.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

namespace pvsm {

// ---------------------------------------------------------------------------
// Transform specifications

struct AnisotropicPixel {
    double ratio = 1.0; // applied to fx
};
struct WorldScale {
    double s = 1.0;
};
struct Fov {
    double zoom = 1.0; // multiplies fx and fy
};
struct Roll {
    double angle = 0.0; // radians, about the optical axis
};
struct RandomGauge {
    std::uint64_t seed = 0;
    double max_rotation = std::numbers::pi;
    double max_translation = 10.0;
};

/// Dolly schedules: either forward translations Δ(t) or vertical FOVs θ(t) (radians).
struct DeltaSchedule {
    std::vector<double> deltas;
};
struct FovSchedule {
    std::vector<double> fovs;
};

struct DollyZoomParams {
    double anchor_depth = 1.0;
    std::variant<DeltaSchedule, FovSchedule> schedule = DeltaSchedule{};

    std::size_t
    frame_count() const {
        return std::visit(
            [](const auto &s) -> std::size_t {
                if constexpr (std::is_same_v<std::decay_t<decltype(s)>, DeltaSchedule>) {
                    return s.deltas.size();
                } else {
                    return s.fovs.size();
                }
            },
            schedule);
    }
};

struct DollyZoom {
    DollyZoomParams params;
};

using TransformSpec = std::variant<AnisotropicPixel, WorldScale, Fov, Roll, RandomGauge, DollyZoom>;

inline std::string_view
kind_name(const TransformSpec &spec) {
    static constexpr std::string_view names[] = {"anisotropic", "world-scale", "fov",
                                                 "roll",        "random-gauge", "dolly-zoom"};
    return names[spec.index()];
}

inline void
validate(const DollyZoomParams &params) {
    if (!(params.anchor_depth > 0.0) || !std::isfinite(params.anchor_depth)) {
        fail(ErrorCode::InvalidSpec, "dolly anchor depth must be positive");
    }
    if (const auto *d = std::get_if<DeltaSchedule>(&params.schedule)) {
        for (double delta : d->deltas) {
            if (!std::isfinite(delta)) {
                fail(ErrorCode::InvalidSpec, "dolly delta must be finite");
            }
            if (delta >= params.anchor_depth) {
                fail(ErrorCode::DegenerateDolly,
                     "delta " + std::to_string(delta) + " reaches the anchor depth " +
                         std::to_string(params.anchor_depth));
            }
        }
    } else {
        for (double theta : std::get<FovSchedule>(params.schedule).fovs) {
            if (!(theta > 0.0 && theta < std::numbers::pi)) {
                fail(ErrorCode::InvalidSpec, "dolly field of view must lie in (0, pi)");
            }
        }
    }
}

inline void
validate(const TransformSpec &spec) {
    std::visit(
        [](const auto &s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, AnisotropicPixel>) {
                if (!(s.ratio >= 0.1 && s.ratio <= 10.0)) {
                    fail(ErrorCode::InvalidSpec, "anisotropic ratio must lie in [0.1, 10]");
                }
            } else if constexpr (std::is_same_v<T, WorldScale>) {
                if (!(s.s > 0.0) || !std::isfinite(s.s)) {
                    fail(ErrorCode::InvalidSpec, "world scale must be positive");
                }
            } else if constexpr (std::is_same_v<T, Fov>) {
                if (!(s.zoom > 0.0) || !std::isfinite(s.zoom)) {
                    fail(ErrorCode::InvalidSpec, "fov zoom must be positive");
                }
            } else if constexpr (std::is_same_v<T, Roll>) {
                if (!std::isfinite(s.angle)) {
                    fail(ErrorCode::InvalidSpec, "roll angle must be finite");
                }
            } else if constexpr (std::is_same_v<T, RandomGauge>) {
                if (!(s.max_rotation >= 0.0 && s.max_rotation <= std::numbers::pi)) {
                    fail(ErrorCode::InvalidSpec, "max_rotation must lie in [0, pi]");
                }
                if (!(s.max_translation >= 0.0) || !std::isfinite(s.max_translation)) {
                    fail(ErrorCode::InvalidSpec, "max_translation must be >= 0");
                }
            } else {
                validate(s.params);
            }
        },
        spec);
}

// ---------------------------------------------------------------------------
// Random gauge

namespace detail {

/// Inverse CDF of the Haar-measure rotation angle, density ∝ 1 − cos θ,
/// restricted to [0, maxAngle].
inline double
haar_angle(double u, double maxAngle) {
    const double target = u * (maxAngle - std::sin(maxAngle));
    double lo = 0.0;
    double hi = maxAngle;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) {
            break;
        }
        if (mid - std::sin(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline Vec3
uniform_unit_vector(RngStream &rng) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

} // namespace detail

/// Rotation distributed as Haar measure on SO(3) conditioned on angle ≤
/// maxRotation; translation uniform in the ball of radius maxTranslation.
inline RigidTransform
random_gauge(std::uint64_t seed, double maxRotation, double maxTranslation) {
    RigidTransform g;
    RngStream rng(seed, 0x6761756765ULL);
    const Vec3 axis = detail::uniform_unit_vector(rng);
    const double angle = detail::haar_angle(rng.uniform(), maxRotation);
    const Vec3 dir = detail::uniform_unit_vector(rng);
    const double radius = maxTranslation * std::cbrt(rng.uniform());
    if (maxRotation > 0.0) {
        g.rotation = rotation_about(axis, angle);
    }
    if (maxTranslation > 0.0) {
        g.translation = radius * dir;
    }
    return g;
}

inline double
rotation_angle(const Mat3 &r) {
    const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
    return std::acos(c);
}

// ---------------------------------------------------------------------------
// Homography warp

namespace detail {

/// Snap sample positions this close to a pixel center so integer-aligned
/// warps stay bit-exact.
inline constexpr double kTapSnap = 1e-9;

struct Tap {
    bool valid = false;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double fx = 0.0, fy = 0.0;
};

inline bool
resolve_axis(double coord, int size, int &i0, int &i1, double &frac) {
    double s = coord - 0.5; // tap space: pixel k sits at s = k
    const double nearest = std::nearbyint(s);
    if (std::abs(s - nearest) <= kTapSnap) {
        s = nearest;
    }
    if (!(s >= 0.0 && s <= size - 1)) {
        return false;
    }
    if (size == 1) {
        i0 = i1 = 0;
        frac = 0.0;
        return true;
    }
    i0 = std::min(static_cast<int>(std::floor(s)), size - 2);
    i1 = i0 + 1;
    frac = s - i0;
    return true;
}

/// dst pixel → source sample position through K_src·R_relᵀ·K_dst⁻¹.
class HomographySampler {
  public:
    HomographySampler(const Intrinsics &src, const Intrinsics &dst, const Mat3 &relRotation)
        : mSrc(src), mH(src.matrix() * relRotation.transpose() * dst.inverse_matrix()) {}

    Tap
    tap(int row, int col) const {
        const Vec3 q = mH * Vec3(col + 0.5, row + 0.5, 1.0);
        Tap t;
        if (!(q.z() > 0.0)) {
            return t;
        }
        const double x = q.x() / q.z();
        const double y = q.y() / q.z();
        if (!resolve_axis(x, mSrc.width, t.x0, t.x1, t.fx) ||
            !resolve_axis(y, mSrc.height, t.y0, t.y1, t.fy)) {
            return t;
        }
        t.valid = true;
        return t;
    }

  private:
    Intrinsics mSrc;
    Mat3 mH;
};

} // namespace detail

struct WarpResult {
    ColorImage image;
    Mask valid;
};

/// Backward bilinear warp for a pure-rotation / intrinsics change. A pixel is
/// valid iff its sample lies inside the hull of source pixel centers, i.e. all
/// four bilinear taps are in frame. Output size follows K_dst.
inline WarpResult
homography_warp(const ColorImage &image, const Intrinsics &src, const Intrinsics &dst,
                const Mat3 &relRotation) {
    if (image.height() != src.height || image.width() != src.width || image.channels() != 3) {
        fail(ErrorCode::DimensionMismatch, "image does not match source intrinsics");
    }
    if (orthonormality_error(relRotation) > kRotationTolerance) {
        fail(ErrorCode::InvalidSpec, "relative rotation is not orthonormal");
    }
    const detail::HomographySampler sampler(src, dst, relRotation);
    WarpResult out{make_color_image(dst.height, dst.width), make_mask(dst.height, dst.width)};
    for (int row = 0; row < dst.height; ++row) {
        for (int col = 0; col < dst.width; ++col) {
            const detail::Tap t = sampler.tap(row, col);
            if (!t.valid) {
                continue;
            }
            out.valid(row, col) = 1;
            for (int ch = 0; ch < 3; ++ch) {
                const double a = image(t.y0, t.x0, ch), b = image(t.y0, t.x1, ch);
                const double c = image(t.y1, t.x0, ch), d = image(t.y1, t.x1, ch);
                const double top = (1.0 - t.fx) * a + t.fx * b;
                const double bottom = (1.0 - t.fx) * c + t.fx * d;
                out.image(row, col, ch) = static_cast<float>((1.0 - t.fy) * top + t.fy * bottom);
            }
        }
    }
    return out;
}

inline Mask
warp_validity(const Intrinsics &src, const Intrinsics &dst, const Mat3 &relRotation) {
    const detail::HomographySampler sampler(src, dst, relRotation);
    Mask valid = make_mask(dst.height, dst.width);
    for (int row = 0; row < dst.height; ++row) {
        for (int col = 0; col < dst.width; ++col) {
            valid(row, col) = sampler.tap(row, col).valid ? 1 : 0;
        }
    }
    return valid;
}

// ---------------------------------------------------------------------------
// Dolly zoom

inline double
fov_from_focal(double fy, int height) {
    return 2.0 * std::atan(height / (2.0 * fy));
}

inline double
focal_from_fov(double theta, int height) {
    return height / (2.0 * std::tan(theta / 2.0));
}

/// tan(θ/2) = tan(θ0/2)·Z0/(Z0 − Δ)
inline double
fov_from_delta(double theta0, double delta, double anchorDepth) {
    const double t = std::tan(theta0 / 2.0) * anchorDepth / (anchorDepth - delta);
    return 2.0 * std::atan(t);
}

/// Δ = Z0·(1 − tan(θ0/2)/tan(θ/2))
inline double
delta_from_fov(double theta0, double theta, double anchorDepth) {
    return anchorDepth * (1.0 - std::tan(theta0 / 2.0) / std::tan(theta / 2.0));
}

/// Depth of a world point along the initial optical axis.
inline double
anchor_depth_of(const Camera &camera, const Vec3 &anchor) {
    return camera.forward().dot(anchor - camera.center());
}

/// Per-frame forward translations, converting an FOV schedule if needed.
inline std::vector<double>
dolly_deltas(const Camera &initial, const DollyZoomParams &params) {
    if (const auto *d = std::get_if<DeltaSchedule>(&params.schedule)) {
        return d->deltas;
    }
    const double theta0 = fov_from_focal(initial.intrinsics.fy, initial.height());
    std::vector<double> deltas;
    for (double theta : std::get<FovSchedule>(params.schedule).fovs) {
        deltas.push_back(delta_from_fov(theta0, theta, params.anchor_depth));
    }
    return deltas;
}

/// Camera advanced by delta along its optical axis with the focal lengths
/// rescaled so the anchor plane keeps its image size.
inline Camera
dolly_frame(const Camera &initial, double delta, double anchorDepth) {
    if (!(delta < anchorDepth)) {
        fail(ErrorCode::DegenerateDolly, "delta " + std::to_string(delta) +
                                             " reaches the anchor depth " +
                                             std::to_string(anchorDepth));
    }
    Camera c = initial;
    const double factor = (anchorDepth - delta) / anchorDepth;
    c.intrinsics.fy = initial.intrinsics.fy * factor;
    c.intrinsics.fx = initial.intrinsics.fx * factor;
    // C(t) = C0 + Δ·n0  ⇒  t(t) = t0 − Δ·R·n0
    const Mat3 &r = initial.extrinsics.rotation;
    c.extrinsics.translation = initial.extrinsics.translation - delta * (r * initial.forward());
    return c;
}

inline std::vector<Camera>
dolly_zoom_trajectory(const Camera &initial, const DollyZoomParams &params) {
    if (!(params.anchor_depth > 0.0) || !std::isfinite(params.anchor_depth)) {
        fail(ErrorCode::InvalidSpec, "dolly anchor depth must be positive");
    }
    if (const auto *f = std::get_if<FovSchedule>(&params.schedule)) {
        for (double theta : f->fovs) {
            if (!(theta > 0.0 && theta < std::numbers::pi)) {
                fail(ErrorCode::InvalidSpec, "dolly field of view must lie in (0, pi)");
            }
        }
    }
    std::vector<Camera> frames;
    for (double delta : dolly_deltas(initial, params)) {
        frames.push_back(dolly_frame(initial, delta, params.anchor_depth));
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Benchmark cases

struct BenchCase {
    Camera transformed_target;
    ColorImage warped_gt;
    Mask valid_mask;
    double world_scale_factor = 1.0;
    /// Context views as the transformed target sees them (scaled for
    /// WorldScale, re-gauged for RandomGauge, otherwise unchanged).
    std::vector<ContextView> contexts;
};

namespace detail {

struct IntrinsicWarp {
    Intrinsics dst;
    Mat3 rel = Mat3::Identity();
};

/// Target intrinsics/rotation change for the image-space transforms; nullopt-like
/// flag for transforms that leave the GT untouched.
inline bool
intrinsic_warp(const TransformSpec &spec, const Camera &target, IntrinsicWarp &out) {
    out.dst = target.intrinsics;
    out.rel = Mat3::Identity();
    if (const auto *a = std::get_if<AnisotropicPixel>(&spec)) {
        out.dst.fx = target.intrinsics.fx * a->ratio;
        return true;
    }
    if (const auto *f = std::get_if<Fov>(&spec)) {
        out.dst.fx = target.intrinsics.fx * f->zoom;
        out.dst.fy = target.intrinsics.fy * f->zoom;
        return true;
    }
    if (const auto *r = std::get_if<Roll>(&spec)) {
        out.rel = rotation_z(r->angle);
        return true;
    }
    return false;
}

} // namespace detail

/// Valid-pixel mask of the GT warp for spec; all-true for world-space transforms.
inline Mask
validity_mask(const TransformSpec &spec, const Camera &target) {
    validate(spec);
    if (std::holds_alternative<DollyZoom>(spec)) {
        fail(ErrorCode::InvalidSpec, "dolly zoom cases are produced by dolly_zoom_trajectory");
    }
    detail::IntrinsicWarp w;
    if (!detail::intrinsic_warp(spec, target, w)) {
        return make_mask(target.height(), target.width(), true);
    }
    return warp_validity(target.intrinsics, w.dst, w.rel);
}

inline BenchCase
apply_transform(const TransformSpec &spec, const Camera &target, const ColorImage &gt,
                std::span<const ContextView> contexts) {
    validate(spec);
    if (gt.height() != target.height() || gt.width() != target.width()) {
        fail(ErrorCode::DimensionMismatch, "ground truth does not match target camera");
    }
    if (std::holds_alternative<DollyZoom>(spec)) {
        fail(ErrorCode::InvalidSpec, "dolly zoom cases are produced by dolly_zoom_trajectory");
    }

    BenchCase out;
    out.contexts.assign(contexts.begin(), contexts.end());

    detail::IntrinsicWarp w;
    if (detail::intrinsic_warp(spec, target, w)) {
        out.transformed_target = target;
        out.transformed_target.intrinsics = w.dst;
        if (std::holds_alternative<Roll>(spec)) {
            out.transformed_target.extrinsics.rotation = w.rel * target.extrinsics.rotation;
            out.transformed_target.extrinsics.translation = w.rel * target.extrinsics.translation;
        }
        if (w.dst == target.intrinsics && w.rel == Mat3::Identity()) {
            out.warped_gt = gt;
            out.valid_mask = make_mask(target.height(), target.width(), true);
        } else {
            WarpResult warped = homography_warp(gt, target.intrinsics, w.dst, w.rel);
            out.warped_gt = std::move(warped.image);
            out.valid_mask = std::move(warped.valid);
        }
        return out;
    }

    out.warped_gt = gt;
    out.valid_mask = make_mask(target.height(), target.width(), true);
    if (const auto *ws = std::get_if<WorldScale>(&spec)) {
        out.world_scale_factor = ws->s;
        out.transformed_target = apply_world_scale(ws->s, target);
        for (auto &c : out.contexts) {
            c.camera = apply_world_scale(ws->s, c.camera);
            for (float &z : c.depth.data()) {
                z = static_cast<float>(z * ws->s);
            }
        }
    } else {
        const auto &rg = std::get<RandomGauge>(spec);
        const RigidTransform g = random_gauge(rg.seed, rg.max_rotation, rg.max_translation);
        out.transformed_target = apply_gauge(g, target);
        for (auto &c : out.contexts) {
            c.camera = apply_gauge(g, c.camera);
        }
    }
    return out;
}

/// Default parameter draws for a transform kind; deterministic per seed.
inline TransformSpec
sample_transform(std::string_view kind, std::uint64_t seed) {
    RngStream rng(seed, 0x62656e6368ULL);
    const auto logUniform = [&](double lo, double hi) {
        return std::exp(rng.uniform(std::log(lo), std::log(hi)));
    };
    if (kind == "anisotropic") {
        return AnisotropicPixel{logUniform(0.1, 10.0)};
    }
    if (kind == "world-scale") {
        return WorldScale{logUniform(0.25, 4.0)};
    }
    if (kind == "fov") {
        return Fov{logUniform(0.5, 2.0)};
    }
    if (kind == "roll") {
        const double limit = std::numbers::pi / 4.0;
        return Roll{rng.uniform(-limit, limit)};
    }
    if (kind == "random-gauge") {
        return RandomGauge{seed, std::numbers::pi, 10.0};
    }
    fail(ErrorCode::InvalidSpec, "unknown transform kind '" + std::string(kind) + "'");
}

/// Transform of the given kind with an explicit parameter (ratio, scale, zoom,
/// roll angle in radians, or max translation for random-gauge).
inline TransformSpec
make_transform(std::string_view kind, double param, std::uint64_t seed) {
    TransformSpec spec;
    if (kind == "anisotropic") {
        spec = AnisotropicPixel{param};
    } else if (kind == "world-scale") {
        spec = WorldScale{param};
    } else if (kind == "fov") {
        spec = Fov{param};
    } else if (kind == "roll") {
        spec = Roll{param};
    } else if (kind == "random-gauge") {
        spec = RandomGauge{seed, std::numbers::pi, param};
    } else {
        fail(ErrorCode::InvalidSpec, "unknown transform kind '" + std::string(kind) + "'");
    }
    validate(spec);
    return spec;
}

} // namespace pvsm
