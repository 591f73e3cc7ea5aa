// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Structured output is one JSON object per line on
// stdout; diagnostics go to stderr.
//
// Exit status: 0 success, 1 verification failure, 2 usage error, 3 I/O error.

#include "pvsm/pvsm.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace pvsm;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kUsage = 2, kIo = 3 };

/// Errors raised while reading inputs are reported as I/O failures.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename F>
auto
loading(F &&f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error &e) {
        throw InputError(e.what());
    }
}

int
exit_code_for(const Error &e) {
    switch (e.code()) {
    case ErrorCode::MissingFile:
    case ErrorCode::IoFailure:
    case ErrorCode::MalformedJson:
    case ErrorCode::MalformedHeader:
    case ErrorCode::ConventionMismatch: return kIo;
    default: return kUsage;
    }
}

void
emit(const json &j) {
    std::cout << j.dump() << '\n';
}

double
deg2rad(double deg) {
    return deg * std::numbers::pi / 180.0;
}

std::vector<std::string>
or_default(const std::vector<std::string> &ids, const std::vector<std::string> &fallback) {
    return ids.empty() ? fallback : ids;
}

std::string
target_or_default(const std::string &id, const SceneBundle &scene) {
    if (!id.empty()) {
        return id;
    }
    if (scene.target_ids.empty()) {
        fail(ErrorCode::InvalidSpec, "scene has no target views; pass --target");
    }
    return scene.target_ids.front();
}

json
projection_summary(const ProjectionImage &img) {
    return {{"height", img.height()},
            {"width", img.width()},
            {"covered_pixels", count_true(img.coverage)},
            {"coverage_fraction",
             static_cast<double>(count_true(img.coverage)) / static_cast<double>(img.coverage.pixel_count())}};
}

// ---------------------------------------------------------------------------

struct ProjectArgs {
    std::string scene, target, out;
    std::vector<std::string> context;
    double radius = kDefaultSplatRadius;
    bool force = false;
};

int
run_project(const ProjectArgs &a) {
    const SceneBundle scene = loading([&] { return load_scene(a.scene); });
    const auto contexts = scene.contexts(or_default(a.context, scene.context_ids));
    const std::string targetId = target_or_default(a.target, scene);
    const SceneView &target = scene.view(targetId);
    const ProjectionImage img = projective_condition(contexts, target.camera, a.radius);

    StagedDirectory out(a.out, a.force);
    save_projection(out.path(), img);
    out.commit();
    json j = projection_summary(img);
    j["command"] = "project";
    j["target"] = targetId;
    j["radius"] = a.radius;
    emit(j);
    return kOk;
}

struct BenchArgs {
    std::string scene, transform, target, out;
    std::vector<std::string> context;
    std::optional<double> param;
    std::uint64_t seed = 0;
    double radius = kDefaultSplatRadius;
    bool force = false;
};

int
run_bench(const BenchArgs &a) {
    const SceneBundle scene = loading([&] { return load_scene(a.scene); });
    const auto contexts = scene.contexts(or_default(a.context, scene.context_ids));
    const std::string targetId = target_or_default(a.target, scene);
    const SceneView &target = scene.view(targetId);

    TransformSpec spec;
    if (a.param) {
        // Roll angles are given in degrees on the command line.
        spec = make_transform(a.transform, a.transform == "roll" ? deg2rad(*a.param) : *a.param, a.seed);
    } else {
        spec = sample_transform(a.transform, a.seed);
    }
    const BenchCase bc = apply_transform(spec, target.camera, target.color, contexts);
    const ProjectionImage img = projective_condition(bc.contexts, bc.transformed_target, a.radius);

    StagedDirectory out(a.out, a.force);
    save_bench_case(out.path(), spec, bc);
    save_projection(out.path(), img);
    out.commit();

    json j = projection_summary(img);
    j["command"] = "bench";
    j["spec"] = to_json(spec);
    j["valid_fraction"] =
        static_cast<double>(count_true(bc.valid_mask)) / static_cast<double>(bc.valid_mask.pixel_count());
    j["world_scale_factor"] = bc.world_scale_factor;
    emit(j);
    return kOk;
}

struct DollyArgs {
    std::string scene, target, out;
    std::vector<std::string> context;
    double anchorDepth = 0.0;
    int frames = 0;
    std::optional<double> fovStart, fovEnd, deltaEnd;
    double radius = kDefaultSplatRadius;
    bool force = false;
};

int
run_dolly(const DollyArgs &a) {
    if (a.frames < 1) {
        fail(ErrorCode::InvalidSpec, "--frames must be >= 1");
    }
    const bool fovMode = a.fovStart || a.fovEnd;
    if (fovMode == a.deltaEnd.has_value() || (fovMode && !(a.fovStart && a.fovEnd))) {
        fail(ErrorCode::InvalidSpec, "pass either --fov-start and --fov-end, or --delta-end");
    }
    const auto lerp = [&](double lo, double hi, int k) {
        return a.frames == 1 ? hi : lo + (hi - lo) * k / (a.frames - 1);
    };
    DollyZoomParams params;
    params.anchor_depth = a.anchorDepth;
    if (fovMode) {
        FovSchedule s;
        for (int k = 0; k < a.frames; ++k) {
            s.fovs.push_back(deg2rad(lerp(*a.fovStart, *a.fovEnd, k)));
        }
        params.schedule = s;
    } else {
        DeltaSchedule s;
        for (int k = 0; k < a.frames; ++k) {
            s.deltas.push_back(lerp(0.0, *a.deltaEnd, k));
        }
        params.schedule = s;
    }
    validate(params);

    const SceneBundle scene = loading([&] { return load_scene(a.scene); });
    const auto contexts = scene.contexts(or_default(a.context, scene.context_ids));
    const SceneView &target = scene.view(target_or_default(a.target, scene));
    const std::vector<Camera> frames = dolly_zoom_trajectory(target.camera, params);
    const std::vector<double> deltas = dolly_deltas(target.camera, params);

    std::optional<StagedDirectory> out;
    if (!a.out.empty()) {
        out.emplace(a.out, a.force);
    }
    json trajectory = json::array();
    for (std::size_t k = 0; k < frames.size(); ++k) {
        json j{{"command", "dolly"},
               {"frame", k},
               {"delta", deltas[k]},
               {"fov_y", fov_from_focal(frames[k].intrinsics.fy, frames[k].height())},
               {"camera", camera_to_json(frames[k])}};
        if (out) {
            char prefix[32];
            std::snprintf(prefix, sizeof(prefix), "frame_%04zu_", k);
            const ProjectionImage img = projective_condition(contexts, frames[k], a.radius);
            save_projection(out->path(), img, prefix);
            j["coverage_fraction"] = projection_summary(img)["coverage_fraction"];
        }
        trajectory.push_back(j);
        emit(j);
    }
    if (out) {
        write_text(out->path() / "trajectory.json", trajectory.dump(2) + "\n");
        out->commit();
    }
    return kOk;
}

struct CorruptArgs {
    std::string image, spec, out;
    bool force = false;
};

int
run_corrupt(const CorruptArgs &a) {
    const ColorImage image = loading([&] { return load_image(a.image); });
    json specJson;
    const std::string text = a.spec.rfind('{', 0) == 0 ? a.spec : loading([&] {
        const auto bytes = detail::read_file(a.spec);
        return std::string(bytes.begin(), bytes.end());
    });
    try {
        specJson = json::parse(text);
    } catch (const json::exception &e) {
        fail(ErrorCode::InvalidSpec, std::string("--spec is not valid JSON: ") + e.what());
    }
    const CorruptionSpec spec = corruption_spec_from_json(specJson);
    const CorruptedImage c = corrupt(image, spec);

    StagedDirectory out(a.out, a.force);
    save_image(out.path() / "image.png", c.image);
    save_mask(out.path() / "patch_mask.png", c.patch_mask);
    save_mask(out.path() / "pixel_mask.png", c.pixel_mask);
    write_text(out.path() / "spec.json", to_json(spec).dump(2) + "\n");
    out.commit();

    std::vector<int> removed;
    for (std::size_t i = 0; i < c.patch_mask.data().size(); ++i) {
        if (c.patch_mask.data()[i] != 0) {
            removed.push_back(static_cast<int>(i));
        }
    }
    emit({{"command", "corrupt"},
          {"spec", to_json(spec)},
          {"removed_patches", removed},
          {"sparsified_patches", c.sparsified_patches},
          {"gain", c.gain},
          {"bias", c.bias},
          {"retained_fraction",
           static_cast<double>(count_true(c.pixel_mask)) / static_cast<double>(c.pixel_mask.pixel_count())}});
    return kOk;
}

struct MetricsArgs {
    std::string pred, gt, mask, coverage;
    int dilate = 0;
};

int
run_metrics(const MetricsArgs &a) {
    const ColorImage pred = loading([&] { return load_image(a.pred); });
    const ColorImage gt = loading([&] { return load_image(a.gt); });
    std::optional<Mask> mask, coverage;
    if (!a.mask.empty()) {
        mask = loading([&] { return load_mask(a.mask); });
    }
    if (!a.coverage.empty()) {
        coverage = loading([&] { return load_mask(a.coverage); });
    }
    json j = to_json(evaluate(pred, gt, mask, coverage, a.dilate));
    j["command"] = "metrics";
    emit(j);
    return kOk;
}

int
run_verify(std::uint64_t seed) {
    const auto results = run_verification(seed);
    bool ok = true;
    for (const auto &r : results) {
        ok = ok && r.pass;
        emit({{"property", r.name}, {"pass", r.pass}, {"detail", r.detail}});
        std::fprintf(stderr, "%-42s %s  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.detail.c_str());
    }
    emit({{"command", "verify"}, {"seed", seed}, {"pass", ok}, {"properties", results.size()}});
    return ok ? kOk : kVerifyFailed;
}

struct SynthArgs {
    std::string out;
    std::uint64_t seed = 0;
    int size = 64;
    int contexts = 2;
    bool force = false;
};

int
run_synth(const SynthArgs &a) {
    if (a.size < 1 || a.contexts < 1) {
        fail(ErrorCode::InvalidSpec, "--size and --contexts must be >= 1");
    }
    const SceneBundle bundle = make_synthetic_bundle(a.seed, a.size, a.contexts);
    StagedDirectory out(a.out, a.force);
    save_scene(out.path(), bundle);
    out.commit();
    emit({{"command", "synth"}, {"seed", a.seed}, {"views", bundle.views.size()}});
    return kOk;
}

} // namespace

int
main(int argc, char **argv) {
    CLI::App app{"Projective conditioning geometry toolkit"};
    app.set_version_flag("--version", std::string(pvsm::kVersion));
    app.require_subcommand(1);

    ProjectArgs pa;
    auto *project = app.add_subcommand("project", "Rasterize the context point cloud into a target view");
    project->add_option("--scene", pa.scene, "Scene directory")->required();
    project->add_option("--context", pa.context, "Context view ids (default: scene context_ids)")->delimiter(',');
    project->add_option("--target", pa.target, "Target view id (default: first target)");
    project->add_option("--radius", pa.radius, "Splat radius in pixels")->check(CLI::NonNegativeNumber);
    project->add_option("--out", pa.out, "Output directory")->required();
    project->add_flag("--force", pa.force, "Replace an existing output directory");

    BenchArgs ba;
    auto *bench = app.add_subcommand("bench", "Build one consistency-benchmark case");
    bench->add_option("--scene", ba.scene, "Scene directory")->required();
    bench->add_option("--transform", ba.transform, "anisotropic | world-scale | fov | roll | random-gauge")->required();
    bench->add_option("--param", ba.param,
                      "ratio | scale | zoom | roll degrees | max translation (default: seeded draw)");
    bench->add_option("--seed", ba.seed, "Seed for drawn parameters and random gauges")->required();
    bench->add_option("--context", ba.context, "Context view ids")->delimiter(',');
    bench->add_option("--target", ba.target, "Target view id");
    bench->add_option("--radius", ba.radius, "Splat radius in pixels")->check(CLI::NonNegativeNumber);
    bench->add_option("--out", ba.out, "Output directory")->required();
    bench->add_flag("--force", ba.force, "Replace an existing output directory");

    DollyArgs da;
    auto *dolly = app.add_subcommand("dolly", "Dolly-zoom trajectory and per-frame conditioning images");
    dolly->add_option("--scene", da.scene, "Scene directory")->required();
    dolly->add_option("--anchor-depth", da.anchorDepth, "Anchor depth Z0 in world units")->required();
    dolly->add_option("--frames", da.frames, "Number of frames")->required();
    dolly->add_option("--fov-start", da.fovStart, "Vertical FOV of the first frame, degrees");
    dolly->add_option("--fov-end", da.fovEnd, "Vertical FOV of the last frame, degrees");
    dolly->add_option("--delta-end", da.deltaEnd, "Forward translation of the last frame");
    dolly->add_option("--context", da.context, "Context view ids")->delimiter(',');
    dolly->add_option("--target", da.target, "Initial camera view id");
    dolly->add_option("--radius", da.radius, "Splat radius in pixels")->check(CLI::NonNegativeNumber);
    dolly->add_option("--out", da.out, "Output directory for per-frame images");
    dolly->add_flag("--force", da.force, "Replace an existing output directory");

    CorruptArgs ca;
    auto *corruptCmd = app.add_subcommand("corrupt", "Masked-image corruption of one image");
    corruptCmd->add_option("--image", ca.image, "Input PNG")->required();
    corruptCmd->add_option("--spec", ca.spec, "Corruption spec: JSON file or inline JSON (needs 'seed')")->required();
    corruptCmd->add_option("--out", ca.out, "Output directory")->required();
    corruptCmd->add_flag("--force", ca.force, "Replace an existing output directory");

    MetricsArgs ma;
    auto *metricsCmd = app.add_subcommand("metrics", "PSNR / SSIM / MSE of a prediction");
    metricsCmd->add_option("--pred", ma.pred, "Predicted PNG")->required();
    metricsCmd->add_option("--gt", ma.gt, "Ground-truth PNG")->required();
    metricsCmd->add_option("--mask", ma.mask, "Valid-pixel mask PNG");
    metricsCmd->add_option("--coverage", ma.coverage, "Coverage PNG for the seen/unseen split");
    metricsCmd->add_option("--dilate", ma.dilate, "Coverage dilation radius in pixels")->check(CLI::NonNegativeNumber);

    std::uint64_t verifySeed = 0;
    auto *verify = app.add_subcommand("verify", "Run the invariant suite");
    verify->add_option("--seed", verifySeed, "Seed")->required();

    SynthArgs sa;
    auto *synth = app.add_subcommand("synth", "Write a synthetic RGB-D scene fixture");
    synth->add_option("--out", sa.out, "Output directory")->required();
    synth->add_option("--seed", sa.seed, "Seed")->required();
    synth->add_option("--size", sa.size, "Image size in pixels");
    synth->add_option("--contexts", sa.contexts, "Number of context views");
    synth->add_flag("--force", sa.force, "Replace an existing output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*project) return run_project(pa);
        if (*bench) return run_bench(ba);
        if (*dolly) return run_dolly(da);
        if (*corruptCmd) return run_corrupt(ca);
        if (*metricsCmd) return run_metrics(ma);
        if (*verify) return run_verify(verifySeed);
        if (*synth) return run_synth(sa);
    } catch (const InputError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    }
    return kUsage;
}
