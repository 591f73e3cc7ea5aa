// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pvsm/bench.hpp"
#include "pvsm/camera.hpp"
#include "pvsm/conditioning.hpp"
#include "pvsm/corruption.hpp"
#include "pvsm/metrics.hpp"
#include "pvsm/plucker.hpp"
#include "pvsm/random.hpp"
#include "pvsm/synthetic.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

// Self-check suite run by `pvsm verify`: every invariant the library promises,
// evaluated on seeded random inputs at the library's stated tolerances.

namespace pvsm {

struct PropertyResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Fraction of pixels whose coverage or color differ between two projections.
inline double
projection_mismatch_fraction(const ProjectionImage &a, const ProjectionImage &b) {
    std::size_t differ = 0;
    for (int row = 0; row < a.height(); ++row) {
        for (int col = 0; col < a.width(); ++col) {
            bool d = a.coverage(row, col) != b.coverage(row, col);
            for (int ch = 0; ch < 3 && !d; ++ch) {
                d = a.color(row, col, ch) != b.color(row, col, ch);
            }
            differ += d ? 1 : 0;
        }
    }
    return static_cast<double>(differ) / static_cast<double>(a.coverage.pixel_count());
}

namespace detail {

inline std::string
fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

inline RigidTransform
gauge(std::uint64_t seed) {
    return random_gauge(seed, std::numbers::pi, 10.0);
}

inline Camera
generic_camera(std::uint64_t seed, int size) {
    RngStream rng(seed, 0x63616dULL);
    Intrinsics k{rng.uniform(0.7, 1.3) * size, rng.uniform(0.7, 1.3) * size,
                 size * rng.uniform(0.4, 0.6), size * rng.uniform(0.4, 0.6), size, size};
    const RigidTransform pose = random_gauge(seed + 7, std::numbers::pi, 3.0);
    return Camera{k, pose};
}

inline PluckerRay
random_ray(RngStream &rng) {
    const Vec3 o(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    return plucker_from_ray(o, uniform_unit_vector(rng));
}

} // namespace detail

inline std::vector<PropertyResult>
run_verification(std::uint64_t seed) {
    std::vector<PropertyResult> out;
    const auto record = [&](std::string name, bool pass, std::string detail) {
        out.push_back({std::move(name), pass, std::move(detail)});
    };

    // Camera: gauge consistency and group law.
    {
        RngStream rng(seed, 1);
        double worst = 0.0;
        double groupWorst = 0.0;
        for (int i = 0; i < 200; ++i) {
            const Camera cam = detail::generic_camera(seed * 1000 + i, 64);
            const RigidTransform g1 = detail::gauge(seed * 2000 + i);
            const RigidTransform g2 = detail::gauge(seed * 3000 + i);
            const Vec3 x = cam.to_world(Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(1, 6)));
            const Projection a = project(cam, x);
            const Projection b = project(apply_gauge(g1, cam), g1.apply(x));
            worst = std::max({worst, std::abs(a.u - b.u), std::abs(a.v - b.v)});
            const Camera c1 = apply_gauge(g2, apply_gauge(g1, cam));
            const Camera c2 = apply_gauge(compose(g2, g1), cam);
            groupWorst = std::max({groupWorst, (c1.extrinsics.rotation - c2.extrinsics.rotation).cwiseAbs().maxCoeff(),
                                   (c1.extrinsics.translation - c2.extrinsics.translation).cwiseAbs().maxCoeff()});
        }
        record("camera.gauge_consistency", worst <= 1e-6, "max px error " + detail::fmt(worst));
        record("camera.group_law", groupWorst <= 1e-9, "max entry error " + detail::fmt(groupWorst));
    }

    // Plücker: commutation with construction, group action, Klein preservation, line identity.
    {
        double commute = 0.0;
        for (int i = 0; i < 4; ++i) {
            const Camera cam = detail::generic_camera(seed * 10 + i, 32);
            const RigidTransform g = detail::gauge(seed * 20 + i);
            const PluckerMap lhs = plucker_map(apply_gauge(g, cam));
            const PluckerMap rhs = act_se3(g, plucker_map(cam));
            for (std::size_t k = 0; k < lhs.size(); ++k) {
                commute = std::max(commute, (lhs.rays()[k].stacked() - rhs.rays()[k].stacked()).cwiseAbs().maxCoeff());
            }
        }
        record("plucker.commutes_with_gauge", commute <= 1e-9, "max error " + detail::fmt(commute));

        RngStream rng(seed, 2);
        double group = 0.0, line = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const RigidTransform g1 = detail::gauge(seed * 40 + 2 * i);
            const RigidTransform g2 = detail::gauge(seed * 40 + 2 * i + 1);
            const PluckerRay l = detail::random_ray(rng);
            group = std::max(group, (act_se3(g2, act_se3(g1, l)).stacked() -
                                     act_se3(compose(g2, g1), l).stacked()).cwiseAbs().maxCoeff());
            // Two points on the line, transformed, rebuild the line.
            const Vec3 p0 = l.direction.cross(l.moment);
            const Vec3 p1 = p0 + 2.5 * l.direction;
            const Vec3 q0 = g1.apply(p0), q1 = g1.apply(p1);
            const Vec3 d = (q1 - q0).normalized();
            const PluckerRay ref{q0.cross(d), d};
            line = std::max(line, (act_se3(g1, l).stacked() - ref.stacked()).cwiseAbs().maxCoeff());
        }
        record("plucker.group_action", group <= 1e-9, "max error " + detail::fmt(group));
        record("plucker.two_point_identity", line <= 1e-9, "max error " + detail::fmt(line));

        PluckerRay l = detail::random_ray(rng);
        for (int i = 0; i < 100; ++i) {
            l = act_se3(random_gauge(seed * 50 + i, std::numbers::pi, 1.0), l);
        }
        const KleinResidual kr = klein_residual(l);
        const double klein = std::max(std::abs(kr.orthogonality), std::abs(kr.norm_error));
        record("plucker.klein_after_100_actions", klein <= 1e-9, "residual " + detail::fmt(klein));
    }

    // Conditioning: gauge / scale invariance, reprojection identity, determinism.
    {
        double gaugeWorst = 0.0, scaleWorst = 0.0;
        double minPsnr = std::numeric_limits<double>::infinity();
        bool deterministic = true;
        std::size_t identityDiffs = 0;
        for (int i = 0; i < 5; ++i) {
            const SyntheticScene s = make_synthetic_scene(seed * 100 + i);
            const ProjectionImage base = projective_condition(s.contexts, s.target, 1.0, {1});

            const RigidTransform g = detail::gauge(seed * 60 + i);
            std::vector<ContextView> moved = s.contexts;
            for (auto &c : moved) {
                c.camera = apply_gauge(g, c.camera);
            }
            const ProjectionImage gauged = projective_condition(moved, apply_gauge(g, s.target), 1.0, {1});
            gaugeWorst = std::max(gaugeWorst, projection_mismatch_fraction(base, gauged));
            minPsnr = std::min(minPsnr, psnr(base.color, gauged.color));

            const TransformSpec ws = WorldScale{i % 2 == 0 ? 0.1 : 10.0};
            const BenchCase bc = apply_transform(ws, s.target, s.target_gt, s.contexts);
            const ProjectionImage scaled = projective_condition(bc.contexts, bc.transformed_target, 1.0, {1});
            scaleWorst = std::max(scaleWorst, projection_mismatch_fraction(base, scaled));
            minPsnr = std::min(minPsnr, psnr(base.color, scaled.color));

            const ProjectionImage parallel = projective_condition(s.contexts, s.target, 1.0, {4, 8});
            deterministic = deterministic && parallel.zbuffer == base.zbuffer &&
                            parallel.point_index == base.point_index && parallel.color == base.color;

            const ContextView &c0 = s.contexts[0];
            const ProjectionImage self = projective_condition(std::span(&c0, 1), c0.camera, 0.0, {1});
            for (int row = 0; row < c0.color.height(); ++row) {
                for (int col = 0; col < c0.color.width(); ++col) {
                    const bool valid = c0.depth(row, col) > 0.0f;
                    bool same = (self.coverage(row, col) != 0) == valid;
                    for (int ch = 0; valid && ch < 3; ++ch) {
                        same = same && self.color(row, col, ch) == c0.color(row, col, ch);
                    }
                    identityDiffs += same ? 0 : 1;
                }
            }
        }
        record("conditioning.gauge_invariance", gaugeWorst <= 1e-3, "max mismatch fraction " + detail::fmt(gaugeWorst));
        record("conditioning.world_scale_invariance", scaleWorst <= 1e-3, "max mismatch fraction " + detail::fmt(scaleWorst));
        record("conditioning.invariance_psnr", minPsnr >= 45.0, "min PSNR " + detail::fmt(minPsnr) + " dB");
        record("conditioning.serial_equals_parallel", deterministic, deterministic ? "bit-identical" : "buffers differ");
        record("conditioning.reprojection_identity", identityDiffs == 0, std::to_string(identityDiffs) + " differing pixels");
    }

    // Dolly zoom.
    {
        Camera cam{{100.0, 100.0, 50.0, 50.0, 100, 100}, RigidTransform{}};
        cam = Camera::from_center(cam.intrinsics, rotation_about(Vec3(1, 2, 3), 0.4), Vec3(0.5, -0.2, 1.0));
        const double z0 = 4.0;
        DeltaSchedule sched;
        for (int f = 0; f < 30; ++f) {
            sched.deltas.push_back(-3.0 + 6.5 * f / 29.0);
        }
        const auto frames = dolly_zoom_trajectory(cam, {z0, sched});
        const Vec3 anchor = cam.to_world(Vec3(0.7, -0.4, z0));
        const Projection p0 = project(cam, anchor);
        const double size0 = std::hypot(p0.u - cam.intrinsics.cx, p0.v - cam.intrinsics.cy);
        double rel = 0.0;
        for (const Camera &f : frames) {
            const Projection p = project(f, anchor);
            rel = std::max(rel, std::abs(std::hypot(p.u - f.intrinsics.cx, p.v - f.intrinsics.cy) - size0) / size0);
        }
        record("dolly.anchor_size_constant", rel <= 1e-6, "max relative change " + detail::fmt(rel));

        const double theta0 = fov_from_focal(cam.intrinsics.fy, cam.height());
        double roundTrip = 0.0;
        for (double d : sched.deltas) {
            roundTrip = std::max(roundTrip, std::abs(delta_from_fov(theta0, fov_from_delta(theta0, d, z0), z0) - d));
        }
        record("dolly.schedule_round_trip", roundTrip <= 1e-9, "max delta error " + detail::fmt(roundTrip));

        Camera k100{{100.0, 100.0, 50.0, 50.0, 100, 100}, RigidTransform{}};
        const Camera f = dolly_frame(k100, 2.0, 4.0);
        const double tanTheta = std::tan(0.5 * fov_from_delta(2.0 * std::atan(0.5), 2.0, 4.0));
        const bool exact = f.intrinsics.fy == 50.0 && std::abs(tanTheta - 1.0) <= 1e-15;
        record("dolly.worked_substitutions", exact, "fy=" + detail::fmt(f.intrinsics.fy) + " tan=" + detail::fmt(tanTheta));
    }

    // Corruption.
    {
        const SyntheticScene s = make_synthetic_scene(seed, 64, 1);
        CorruptionSpec spec = sample_corruption_spec(seed);
        const CorruptedImage a = corrupt(s.target_gt, spec);
        const CorruptedImage b = corrupt(s.target_gt, spec);
        const bool same = a.image == b.image && a.pixel_mask == b.pixel_mask && a.patch_mask == b.patch_mask;
        record("corruption.deterministic", same, same ? "bit-identical" : "outputs differ");

        const std::size_t expected = static_cast<std::size_t>(std::llround(spec.patch_mask_ratio * 64.0));
        const std::size_t removed = count_true(a.patch_mask);
        record("corruption.removed_patch_count", removed == expected,
               std::to_string(removed) + " of expected " + std::to_string(expected));

        CorruptionSpec jitter = spec;
        jitter.gain_range = {0.5, 2.0};
        jitter.bias_range = {-0.3, 0.3};
        const CorruptedImage c = corrupt(s.target_gt, jitter);
        const bool isolated = c.pixel_mask == a.pixel_mask && c.patch_mask == a.patch_mask;
        record("corruption.stage_isolation", isolated, isolated ? "masks unchanged" : "masks changed");
    }

    // Metrics.
    {
        const SyntheticScene s = make_synthetic_scene(seed + 1, 48, 1);
        const ColorImage &a = s.target_gt;
        const ColorImage &b = s.contexts[0].color;
        const double self = ssim(a, a);
        record("metrics.ssim_identity", std::abs(self - 1.0) <= 1e-9, "ssim(x,x)=" + detail::fmt(self));
        const double sym = std::abs(ssim(a, b) - ssim(b, a));
        record("metrics.ssim_symmetry", sym <= 1e-9, "asymmetry " + detail::fmt(sym));

        Mask cov = make_mask(a.height(), a.width());
        for (int r = 0; r < a.height(); ++r) {
            for (int c = 0; c < a.width() / 3; ++c) {
                cov(r, c) = 1;
            }
        }
        const SeenUnseen split = seen_unseen_split(cov);
        const double ns = static_cast<double>(count_true(split.seen));
        const double nu = static_cast<double>(count_true(split.unseen));
        const double joint = (ns * masked_mse(a, b, split.seen) + nu * masked_mse(a, b, split.unseen)) / (ns + nu);
        const double err = std::abs(joint - mse(a, b));
        record("metrics.split_consistency", err <= 1e-10, "mse error " + detail::fmt(err));
    }

    // Benchmark validity.
    {
        const Camera cam{{100.0, 100.0, 50.0, 50.0, 100, 100}, RigidTransform{}};
        const double frac = static_cast<double>(count_true(validity_mask(Fov{0.5}, cam))) / 10000.0;
        record("bench.fov_half_valid_fraction", frac == 0.25, "fraction " + detail::fmt(frac));
        const ColorImage gt = make_synthetic_scene(seed, 100, 1).target_gt;
        const BenchCase ident = apply_transform(AnisotropicPixel{1.0}, cam, gt, {});
        const bool same = ident.warped_gt == gt && count_true(ident.valid_mask) == gt.pixel_count();
        record("bench.identity_transform", same, same ? "bit-exact" : "warp changed image");
    }

    return out;
}

} // namespace pvsm
