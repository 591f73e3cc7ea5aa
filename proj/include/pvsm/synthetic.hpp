// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pvsm/camera.hpp"
#include "pvsm/conditioning.hpp"
#include "pvsm/image.hpp"
#include "pvsm/io.hpp"
#include "pvsm/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace pvsm {

/// Smooth random height field z = f(x, y) with a procedural texture, seen by
/// a handful of roughly forward-facing cameras. Depth and color of every view
/// are ray-cast from the same surface, so the views are mutually consistent.
class SyntheticSurface {
  public:
    explicit SyntheticSurface(std::uint64_t seed) {
        RngStream rng(seed, 0x73757266ULL);
        mBase = rng.uniform(3.5, 4.5);
        mTiltX = rng.uniform(-0.15, 0.15);
        mTiltY = rng.uniform(-0.15, 0.15);
        for (auto &w : mWaves) {
            w.amp = rng.uniform(0.05, 0.2);
            w.kx = rng.uniform(-3.0, 3.0);
            w.ky = rng.uniform(-3.0, 3.0);
            w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        for (auto &c : mColor) {
            c.freqX = rng.uniform(1.0, 6.0);
            c.freqY = rng.uniform(1.0, 6.0);
            c.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        mCheck = rng.uniform(3.0, 8.0);
    }

    double
    height(double x, double y) const {
        double z = mBase + mTiltX * x + mTiltY * y;
        for (const auto &w : mWaves) {
            z += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
        }
        return z;
    }

    Rgb
    color(double x, double y) const {
        Rgb out{};
        const double checker =
            (static_cast<long long>(std::floor(x * mCheck)) + static_cast<long long>(std::floor(y * mCheck))) % 2 == 0
                ? 0.12
                : -0.12;
        for (int ch = 0; ch < 3; ++ch) {
            const auto &c = mColor[ch];
            const double v = 0.5 + 0.3 * std::sin(c.freqX * x + c.phase) * std::cos(c.freqY * y) + checker;
            out[ch] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
        return out;
    }

    /// Ray-cast the surface; returns camera-frame z-depth and the world hit.
    bool
    intersect(const Camera &camera, double u, double v, double &zDepth, Vec3 &hit) const {
        const Ray ray = pixel_ray(camera, u, v);
        if (ray.direction.z() <= 0.05) {
            return false;
        }
        double s = (height(ray.origin.x(), ray.origin.y()) - ray.origin.z()) / ray.direction.z();
        for (int it = 0; it < 60; ++it) {
            const Vec3 p = ray.origin + s * ray.direction;
            const double next = (height(p.x(), p.y()) - ray.origin.z()) / ray.direction.z();
            if (std::abs(next - s) < 1e-12) {
                s = next;
                break;
            }
            s = next;
        }
        if (!(s > 0.0)) {
            return false;
        }
        hit = ray.origin + s * ray.direction;
        zDepth = camera.to_camera(hit).z();
        return zDepth > 0.0;
    }

    /// Render color and z-depth; a fraction of pixels is marked invalid (depth 0).
    ContextView
    render(const Camera &camera, std::uint64_t seed, double invalidFraction = 0.0) const {
        ContextView view{make_color_image(camera.height(), camera.width()),
                         make_depth_map(camera.height(), camera.width()), camera};
        const CounterRng holes(seed, 0x686f6c65ULL);
        for (int row = 0; row < camera.height(); ++row) {
            for (int col = 0; col < camera.width(); ++col) {
                double z = 0.0;
                Vec3 hit;
                if (!intersect(camera, col + 0.5, row + 0.5, z, hit)) {
                    continue;
                }
                const Rgb c = color(hit.x(), hit.y());
                for (int ch = 0; ch < 3; ++ch) {
                    view.color(row, col, ch) = c[ch];
                }
                const auto counter = static_cast<std::uint64_t>(row) * camera.width() + col;
                if (holes.uniform(counter) >= invalidFraction) {
                    view.depth(row, col) = static_cast<float>(z);
                }
            }
        }
        return view;
    }

  private:
    struct Wave {
        double amp, kx, ky, phase;
    };
    struct ColorWave {
        double freqX, freqY, phase;
    };
    double mBase = 4.0;
    double mTiltX = 0.0, mTiltY = 0.0;
    Wave mWaves[3]{};
    ColorWave mColor[3]{};
    double mCheck = 4.0;
};

struct SyntheticScene {
    std::vector<ContextView> contexts;
    Camera target;
    ColorImage target_gt;
};

namespace detail {

inline Camera
jittered_camera(RngStream &rng, int size, const Vec3 &center, double maxTiltDeg) {
    Intrinsics k;
    k.width = size;
    k.height = size;
    k.fx = k.fy = rng.uniform(0.8, 1.1) * size;
    k.cx = size / 2.0;
    k.cy = size / 2.0;
    const double tilt = maxTiltDeg * std::numbers::pi / 180.0;
    const Mat3 r = rotation_about(Vec3::UnitX(), rng.uniform(-tilt, tilt)) *
                   rotation_about(Vec3::UnitY(), rng.uniform(-tilt, tilt)) *
                   rotation_about(Vec3::UnitZ(), rng.uniform(-tilt, tilt));
    return Camera::from_center(k, r, center);
}

} // namespace detail

/// Random scene: `contexts` views spread along x, a target camera between
/// them, all size×size.
inline SyntheticScene
make_synthetic_scene(std::uint64_t seed, int size = 64, int contexts = 2,
                     double invalidFraction = 0.02) {
    const SyntheticSurface surface(seed);
    RngStream rng(seed, 0x7363656eULL);
    SyntheticScene scene;
    for (int i = 0; i < contexts; ++i) {
        const double spread = contexts > 1 ? -0.6 + 1.2 * i / (contexts - 1) : 0.0;
        const Vec3 c(spread + rng.uniform(-0.1, 0.1), rng.uniform(-0.2, 0.2), rng.uniform(-0.3, 0.3));
        const Camera cam = detail::jittered_camera(rng, size, c, 5.0);
        scene.contexts.push_back(surface.render(cam, seed * 31 + static_cast<std::uint64_t>(i), invalidFraction));
    }
    const Vec3 tc(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.4));
    scene.target = detail::jittered_camera(rng, size, tc, 5.0);
    scene.target_gt = surface.render(scene.target, seed * 31 + 1000).color;
    return scene;
}

/// On-disk fixture: views ctx0..ctxN-1 (with depth) and "target" (with depth).
inline SceneBundle
make_synthetic_bundle(std::uint64_t seed, int size = 64, int contexts = 2) {
    const SyntheticSurface surface(seed);
    const SyntheticScene s = make_synthetic_scene(seed, size, contexts, 0.0);
    SceneBundle bundle;
    bundle.world_unit = "synthetic";
    for (int i = 0; i < contexts; ++i) {
        SceneView v;
        v.id = "ctx" + std::to_string(i);
        v.camera = s.contexts[static_cast<std::size_t>(i)].camera;
        v.color_path = v.id + ".png";
        v.depth_path = v.id + ".pfm";
        v.color = quantized(s.contexts[static_cast<std::size_t>(i)].color);
        v.depth = s.contexts[static_cast<std::size_t>(i)].depth;
        bundle.context_ids.push_back(v.id);
        bundle.views.push_back(std::move(v));
    }
    SceneView t;
    t.id = "target";
    t.camera = s.target;
    t.color_path = "target.png";
    t.depth_path = "target.pfm";
    const ContextView rendered = surface.render(s.target, seed * 31 + 1000);
    t.color = quantized(rendered.color);
    t.depth = rendered.depth;
    bundle.target_ids.push_back(t.id);
    bundle.views.push_back(std::move(t));
    return bundle;
}

} // namespace pvsm
