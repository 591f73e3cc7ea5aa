// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "cli_runner.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <numbers>
#include <string>

using namespace pvsm;

namespace {

constexpr double kPi = std::numbers::pi;

int gFailures = 0;

void
report(const char *name, bool pass, const std::string &detail) {
    std::printf("%s  %-34s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    gFailures += pass ? 0 : 1;
}

std::string
fmt(const char *f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

double
seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// PSNR between two conditioning images over pixels covered in either.
double
conditioning_psnr(const ProjectionImage &a, const ProjectionImage &b) {
    Mask m = make_mask(a.height(), a.width());
    for (std::size_t i = 0; i < m.data().size(); ++i) {
        m.data()[i] = (a.coverage.data()[i] || b.coverage.data()[i]) ? 1 : 0;
    }
    if (count_true(m) == 0) {
        return std::numeric_limits<double>::infinity();
    }
    return masked_psnr(a.color, b.color, m);
}

constexpr RasterOptions kSerial{1, 16};

// ---------------------------------------------------------------------------

void
gauge_invariance() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0, minPsnr = std::numeric_limits<double>::infinity();
    for (std::uint64_t s = 0; s < 100; ++s) {
        const SyntheticScene scene = make_synthetic_scene(1000 + s, 64, 2);
        const ProjectionImage base = projective_condition(scene.contexts, scene.target, kDefaultSplatRadius, kSerial);
        std::vector<ContextView> moved = scene.contexts;
        for (std::uint64_t k = 0; k < 100; ++k) {
            const RigidTransform g = random_gauge(s * 100 + k, kPi, 10.0);
            for (std::size_t i = 0; i < moved.size(); ++i) {
                moved[i].camera = apply_gauge(g, scene.contexts[i].camera);
            }
            const ProjectionImage img =
                projective_condition(moved, apply_gauge(g, scene.target), kDefaultSplatRadius, kSerial);
            worst = std::max(worst, projection_mismatch_fraction(base, img));
            minPsnr = std::min(minPsnr, conditioning_psnr(base, img));
        }
    }
    const double secs = seconds_since(t0);
    report("gauge_invariance", worst <= 1e-3 && minPsnr >= 45.0 && secs < 60.0,
           fmt("100 scenes x 100 gauges: max differing %.3e, min PSNR %.2f dB, %.1f s", worst, minPsnr, secs));
}

void
similarity_invariance() {
    double worst = 0.0, minPsnr = std::numeric_limits<double>::infinity();
    for (std::uint64_t s = 0; s < 100; ++s) {
        const SyntheticScene scene = make_synthetic_scene(2000 + s, 64, 2);
        const ProjectionImage base = projective_condition(scene.contexts, scene.target, kDefaultSplatRadius, kSerial);
        for (double scale : {0.1, 0.5, 2.0, 10.0}) {
            // Pure scale, then scale composed with a random rigid motion.
            for (int withGauge = 0; withGauge < 2; ++withGauge) {
                const RigidTransform g = withGauge ? random_gauge(s, kPi, 10.0) : RigidTransform::identity();
                const BenchCase bc = apply_transform(WorldScale{scale}, scene.target, scene.target_gt, scene.contexts);
                std::vector<ContextView> ctx = bc.contexts;
                for (auto &c : ctx) {
                    c.camera = apply_gauge(g, c.camera);
                }
                const ProjectionImage img = projective_condition(ctx, apply_gauge(g, bc.transformed_target),
                                                                 kDefaultSplatRadius, kSerial);
                worst = std::max(worst, projection_mismatch_fraction(base, img));
                minPsnr = std::min(minPsnr, conditioning_psnr(base, img));
            }
        }
    }
    report("similarity_invariance", worst <= 1e-3 && minPsnr >= 45.0,
           fmt("s in {0.1,0.5,2,10}, 100 scenes: max differing %.3e, min PSNR %.2f dB", worst, minPsnr));
}

void
plucker_action() {
    std::mt19937_64 rng(31);
    double commute = 0.0, twoPoint = 0.0, group = 0.0, klein = 0.0;
    std::size_t rays = 0;
    while (rays < 10000) {
        const Camera cam = oracle::generic_camera(rng, 10, 10);
        const RigidTransform g = oracle::random_rigid(rng, 10.0);
        const PluckerMap lhs = plucker_map(apply_gauge(g, cam));
        const PluckerMap base = plucker_map(cam);
        const PluckerMap rhs = act_se3(g, base);
        for (std::size_t i = 0; i < lhs.size(); ++i) {
            commute = std::max(commute, (lhs.rays()[i].stacked() - rhs.rays()[i].stacked()).cwiseAbs().maxCoeff());
            const Ray r = pixel_ray(cam, static_cast<double>(i % 10) + 0.5, static_cast<double>(i / 10) + 0.5);
            const PluckerRay oracle = oracle::act_by_two_points(g, r.origin, r.direction);
            twoPoint = std::max(twoPoint, (rhs.rays()[i].stacked() - oracle.stacked()).cwiseAbs().maxCoeff());
        }
        rays += lhs.size();
    }
    for (int i = 0; i < 1000; ++i) {
        const RigidTransform g1 = oracle::random_rigid(rng, 10.0), g2 = oracle::random_rigid(rng, 10.0);
        const PluckerRay l = plucker_from_ray(Vec3(1, -2, 0.5), Vec3(2, 1, -2) / 3.0);
        group = std::max(group,
                         (act_se3(g2, act_se3(g1, l)).stacked() - act_se3(compose(g2, g1), l).stacked())
                             .cwiseAbs()
                             .maxCoeff());
    }
    for (int chain = 0; chain < 100; ++chain) {
        PluckerRay l = plucker_from_ray(Vec3(0.5, 0.25, -3), Vec3(0, 0.6, 0.8));
        for (int i = 0; i < 100; ++i) {
            l = act_se3(oracle::random_rigid(rng, 10.0), l);
        }
        const KleinResidual k = klein_residual(l);
        klein = std::max({klein, std::abs(k.orthogonality), std::abs(k.norm_error)});
    }
    const bool pass = commute <= 1e-9 && group <= 1e-9 && klein <= 1e-9 && twoPoint <= 1e-9;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%zu rays: commute %.2e, group %.2e, klein(100) %.2e, two-point %.2e", rays,
                  commute, group, klein, twoPoint);
    report("plucker_action", pass, buf);
}

void
plucker_non_uniformity() {
    std::mt19937_64 rng(41);
    const Camera cam = oracle::generic_camera(rng, 64, 64);
    const PluckerMap map = plucker_map(cam);
    double best = 0.0;
    for (int i = 0; i < 200; ++i) {
        RigidTransform g = oracle::random_rigid(rng, 1.0);
        if (g.translation.norm() > 1.0) {
            g.translation.normalize();
        }
        const ScalarField f = perturbation_field(g, map);
        best = std::max(best, f.max() / f.mean());
    }
    report("plucker_non_uniformity", best > 1.5, fmt("64x64 map, ||t|| <= 1: best max/mean %.3f (> 1.5)", best));
}

void
rasterizer_oracle() {
    std::mt19937_64 rng(51);
    std::uniform_int_distribution<int> size(8, 48), npts(1, 10000);
    std::uniform_real_distribution<double> radius(0.0, 2.5);
    int oracleMismatch = 0, threadMismatch = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const Camera cam = oracle::generic_camera(rng, size(rng), size(rng));
        const PointCloud cloud = oracle::random_cloud(rng, cam, static_cast<std::size_t>(npts(rng)));
        const double r = trial % 10 == 0 ? 0.0 : radius(rng);
        const ProjectionImage serial = rasterize(cloud, cam, r, {1, 16});
        const ProjectionImage parallel = rasterize(cloud, cam, r, {4, 16});
        const auto ref = oracle::rasterize_brute_force(cloud, cam, r);
        oracleMismatch += !(serial.coverage == ref.coverage && serial.color == ref.color && serial.point_index == ref.index);
        threadMismatch += !(serial.coverage == parallel.coverage && serial.color == parallel.color &&
                            serial.point_index == parallel.point_index && serial.zbuffer == parallel.zbuffer);
    }
    report("rasterizer_oracle", oracleMismatch == 0 && threadMismatch == 0,
           fmt("200 clouds <= 1e4 points: %.0f oracle mismatches, %.0f serial/parallel mismatches", oracleMismatch,
               threadMismatch));
}

void
reprojection_identity() {
    std::size_t differing = 0, checked = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const SyntheticScene scene = make_synthetic_scene(3000 + s, 64, 1, 0.05);
        const ContextView &ctx = scene.contexts[0];
        const ProjectionImage img = projective_condition(scene.contexts, ctx.camera, 0.0);
        for (int row = 0; row < 64; ++row) {
            for (int col = 0; col < 64; ++col) {
                const bool valid = ctx.depth(row, col) > 0.0f;
                bool d = (img.coverage(row, col) != 0) != valid;
                for (int ch = 0; valid && ch < 3; ++ch) {
                    d = d || img.color(row, col, ch) != ctx.color(row, col, ch);
                }
                differing += d;
                checked += valid;
            }
        }
    }
    report("reprojection_identity", differing == 0,
           fmt("20 views, %.0f valid pixels: %.0f differing", static_cast<double>(checked),
               static_cast<double>(differing)));
}

void
dolly_zoom() {
    std::mt19937_64 rng(61);
    double sizeDrift = 0.0;
    for (int t = 0; t < 10; ++t) {
        const Camera cam = oracle::generic_camera(rng, 64, 64);
        const double z0 = 2.0 + t;
        const Ray a = pixel_ray(cam, 5.5, 9.5), b = pixel_ray(cam, 60.5, 50.5);
        const Vec3 pa = a.origin + z0 / a.direction.dot(cam.forward()) * a.direction;
        const Vec3 pb = b.origin + z0 / b.direction.dot(cam.forward()) * b.direction;
        const Projection qa0 = project(cam, pa), qb0 = project(cam, pb);
        const double size0 = std::hypot(qa0.u - qb0.u, qa0.v - qb0.v);
        const double theta0 = fov_from_focal(cam.intrinsics.fy, cam.height());
        FovSchedule sched;
        for (int k = 0; k < 30; ++k) {
            sched.fovs.push_back(theta0 * (0.5 + 1.2 * k / 29.0) > 3.0 ? 3.0 : theta0 * (0.5 + 1.2 * k / 29.0));
        }
        for (const Camera &f : dolly_zoom_trajectory(cam, {z0, sched})) {
            const Projection qa = project(f, pa), qb = project(f, pb);
            sizeDrift = std::max(sizeDrift, std::abs(std::hypot(qa.u - qb.u, qa.v - qb.v) / size0 - 1.0));
        }
    }
    double roundTrip = 0.0;
    for (double theta0 : {0.3, 0.9, 1.4, 2.2}) {
        for (double z0 : {0.5, 4.0, 30.0}) {
            for (int k = 0; k < 30; ++k) {
                const double delta = -2.0 * z0 + 2.9 * z0 * k / 29.0;
                roundTrip = std::max(roundTrip,
                                     std::abs(delta_from_fov(theta0, fov_from_delta(theta0, delta, z0), z0) - delta) /
                                         std::max(1.0, z0));
            }
        }
    }
    Intrinsics k;
    k.fx = k.fy = 100.0;
    k.cx = k.cy = 50.0;
    k.width = k.height = 100;
    const Camera worked{k, RigidTransform::identity()};
    const Camera f = dolly_frame(worked, 2.0, 4.0);
    const double theta = fov_from_delta(2.0 * std::atan(0.5), 2.0, 4.0);
    const bool exact = f.intrinsics.fy == 50.0 && theta == kPi / 2 && std::abs(std::tan(theta / 2) - 1.0) <= 2e-16;
    report("dolly_zoom", sizeDrift <= 1e-6 && roundTrip <= 1e-9 && exact,
           fmt("30-frame size drift %.2e, round trip %.2e, worked fy=%.17g", sizeDrift, roundTrip,
               f.intrinsics.fy) +
               fmt(" theta=%.17g", theta));
}

void
metrics_oracle() {
    std::mt19937_64 rng(71);
    ColorImage gt = oracle::random_image(rng, 32, 32);
    for (float &v : gt.data()) {
        v = 0.1f + 0.8f * v;
    }
    ColorImage pred = gt;
    for (float &v : pred.data()) {
        v += 0.1f;
    }
    const Mask all = make_mask(32, 32, true);
    const double p20 = masked_psnr(pred, gt, all);
    const double err20 = std::abs(p20 - oracle::direct_masked_psnr(pred, gt, all));

    ColorImage half = make_color_image(32, 32, 0.25f);
    Mask left = make_mask(32, 32);
    for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 32; ++c) {
            left(r, c) = c < 16;
            for (int ch = 0; ch < 3; ++ch) {
                half(r, c, ch) = c < 16 ? ((r + c + ch) % 2 ? 0.45f : 0.05f) : static_cast<float>(rng() % 256) / 255.0f;
            }
        }
    }
    const ColorImage flat = make_color_image(32, 32, 0.25f);
    const double p14 = masked_psnr(half, flat, left);
    const double err14 = std::abs(p14 - oracle::direct_masked_psnr(half, flat, left));

    double ssimSelf = 0.0, ssimErr = 0.0;
    for (int i = 0; i < 50; ++i) {
        const ColorImage a = oracle::random_image(rng, 24, 28);
        ColorImage b = a;
        std::normal_distribution<float> noise(0.0f, 0.05f + 0.01f * i);
        for (float &v : b.data()) {
            v = std::clamp(v + noise(rng), 0.0f, 1.0f);
        }
        ssimSelf = std::max(ssimSelf, std::abs(ssim(a, a) - 1.0));
        ssimErr = std::max(ssimErr, std::abs(ssim(a, b) - oracle::direct_ssim(a, b)));
    }
    const bool pass = err20 <= 1e-10 && std::abs(p20 - 20.0) <= 1e-5 && err14 <= 1e-10 &&
                      std::abs(p14 - 13.979400086720377) <= 1e-5 && ssimSelf <= 1e-9 && ssimErr <= 1e-6;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "psnr %.6f dB (err %.1e), %.6f dB (err %.1e); ssim self %.1e, 50 pairs %.1e",
                  p20, err20, p14, err14, ssimSelf, ssimErr);
    report("metrics_oracle", pass, buf);
}

void
corruption_counting() {
    std::mt19937_64 rng(81);
    const ColorImage img = oracle::random_image(rng, 64, 64);
    bool identical = true, countExact = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const CorruptionSpec spec = sample_corruption_spec(seed);
        const CorruptedImage a = corrupt(img, spec), b = corrupt(img, spec);
        identical = identical && a.image == b.image && a.pixel_mask == b.pixel_mask && a.patch_mask == b.patch_mask;
        countExact = countExact && count_true(a.patch_mask) ==
                                       static_cast<std::size_t>(std::llround(spec.patch_mask_ratio * 64));
    }
    // Fixed spec: kept patches are deterministic in number, sparsified pixels
    // survive independently with probability 1 − p.
    CorruptionSpec spec;
    spec.patch_mask_ratio = 0.5;
    spec.sparsify_fraction = 0.5;
    spec.pixel_drop_prob = 0.6;
    const int trials = 1000;
    const double patchPixels = 64.0;
    const double removed = std::llround(0.5 * 64), sparse = std::llround(0.5 * (64 - removed));
    const double intact = 64 - removed - sparse;
    double retained = 0.0;
    for (int t = 0; t < trials; ++t) {
        spec.seed = 10000 + static_cast<std::uint64_t>(t);
        retained += static_cast<double>(count_true(corrupt(img, spec).pixel_mask));
    }
    const double bernoulli = trials * sparse * patchPixels;
    const double mean = trials * intact * patchPixels + bernoulli * (1 - spec.pixel_drop_prob);
    const double sigma = std::sqrt(bernoulli * spec.pixel_drop_prob * (1 - spec.pixel_drop_prob));
    const double z = (retained - mean) / sigma;
    report("corruption_determinism_counting", identical && countExact && std::abs(z) <= 3.0,
           fmt("bit-identical %.0f, counts exact %.0f, retained fraction z = %.2f over 1000 trials", identical,
               countExact, z));
}

void
benchmark_validity() {
    Intrinsics k;
    k.fx = k.fy = 90.0;
    k.cx = k.cy = 50.0;
    k.width = k.height = 100;
    const Camera square{k, RigidTransform::identity()};
    const Mask fov = validity_mask(Fov{0.5}, square);
    const double fovFrac = static_cast<double>(count_true(fov)) / fov.pixel_count();

    k.cx = k.cy = 256.0;
    k.width = k.height = 512;
    k.fx = k.fy = 400.0;
    const Camera big{k, RigidTransform::identity()};
    const Mask roll = validity_mask(Roll{kPi / 4}, big);
    const double rollFrac = static_cast<double>(count_true(roll)) / roll.pixel_count();
    const double mc = oracle::roll_valid_fraction_monte_carlo(512, kPi / 4, 1000000, 91);
    const double rel = std::abs(rollFrac - mc) / mc;
    report("benchmark_validity", fovFrac == 0.25 && rel <= 0.005,
           fmt("fov 0.5 fraction %.6f; roll 45 fraction %.5f vs Monte-Carlo %.5f", fovFrac, rollFrac, mc) +
               fmt(" (rel %.2e)", rel));
}

void
cli_determinism() {
    using pvsm::testing::run_cli;
    const fs::path root = fs::temp_directory_path() / "pvsm_acceptance_cli";
    fs::remove_all(root);
    fs::create_directories(root);
    const auto verify = run_cli("verify --seed 0");
    bool same = true;
    std::string failed;
    const auto twice = [&](const std::string &name, const std::string &cmd) {
        const auto a = run_cli(cmd + " --out " + (root / (name + "_a")).string());
        const auto b = run_cli(cmd + " --out " + (root / (name + "_b")).string());
        const bool ok = a.status == 0 && a.output == b.output &&
                        pvsm::testing::same_tree(root / (name + "_a"), root / (name + "_b"));
        if (!ok) {
            failed += " " + name;
        }
        same = same && ok;
    };
    twice("synth", "synth --seed 5 --size 48");
    const std::string scene = (root / "synth_a").string();
    twice("project", "project --scene " + scene);
    for (const char *kind : {"anisotropic", "world-scale", "fov", "roll", "random-gauge"}) {
        twice(std::string("bench_") + kind, "bench --scene " + scene + " --transform " + kind + " --seed 9");
    }
    twice("dolly", "dolly --scene " + scene + " --anchor-depth 4 --frames 5 --fov-start 40 --fov-end 70");
    twice("corrupt", "corrupt --image " + scene + "/target.png --spec '{\"seed\":3}'");
    const auto m1 = run_cli("metrics --pred " + (root / "project_a/color.png").string() + " --gt " + scene +
                            "/target.png --coverage " + (root / "project_a/coverage.png").string());
    const auto m2 = run_cli("metrics --pred " + (root / "project_a/color.png").string() + " --gt " + scene +
                            "/target.png --coverage " + (root / "project_a/coverage.png").string());
    same = same && m1.status == 0 && m1.output == m2.output;
    same = same && verify.output == run_cli("verify --seed 0").output;
    fs::remove_all(root);
    report("cli_determinism", verify.status == 0 && same,
           "verify exit " + std::to_string(verify.status) + ", seeded commands byte-identical: " +
               (same ? "yes" : "no (" + failed + " )"));
}

} // namespace

int
main() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::pair<const char *, void (*)()> criteria[] = {
        {"gauge_invariance", gauge_invariance},
        {"similarity_invariance", similarity_invariance},
        {"plucker_action", plucker_action},
        {"plucker_non_uniformity", plucker_non_uniformity},
        {"rasterizer_oracle", rasterizer_oracle},
        {"reprojection_identity", reprojection_identity},
        {"dolly_zoom", dolly_zoom},
        {"metrics_oracle", metrics_oracle},
        {"corruption_determinism_counting", corruption_counting},
        {"benchmark_validity", benchmark_validity},
        {"cli_determinism", cli_determinism},
    };
    for (const auto &[name, run] : criteria) {
        try {
            run();
        } catch (const std::exception &e) {
            report(name, false, std::string("threw: ") + e.what());
        }
    }
    std::printf("%d of %zu criteria failed (%.1f s)\n", gFailures, std::size(criteria), seconds_since(t0));
    return gFailures == 0 ? 0 : 1;
}
