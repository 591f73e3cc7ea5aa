// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pvsm/error.hpp"
#include "pvsm/image.hpp"
#include "pvsm/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace pvsm {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Masked-image corruption: patch removal, then pixel sparsification of a
/// subset of surviving patches, then a per-channel affine color jitter.
struct CorruptionSpec {
    int patch_size = 8;
    double patch_mask_ratio = 0.75;
    double sparsify_fraction = 0.5; // of surviving patches
    double pixel_drop_prob = 0.6;
    Range gain_range{0.8, 1.25};
    Range bias_range{-0.1, 0.1};
    std::uint64_t seed = 0;
};

inline void
validate(const CorruptionSpec &spec) {
    const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (spec.patch_size < 1) {
        fail(ErrorCode::InvalidSpec, "patch size must be >= 1");
    }
    if (!unit(spec.patch_mask_ratio) || !unit(spec.sparsify_fraction) ||
        !unit(spec.pixel_drop_prob)) {
        fail(ErrorCode::InvalidSpec, "ratios must lie in [0, 1]");
    }
    if (!(spec.gain_range.lo > 0.0) || !(spec.gain_range.hi >= spec.gain_range.lo) ||
        !std::isfinite(spec.gain_range.hi)) {
        fail(ErrorCode::InvalidSpec, "gain range must satisfy 0 < lo <= hi");
    }
    if (!(spec.bias_range.hi >= spec.bias_range.lo) || !std::isfinite(spec.bias_range.lo) ||
        !std::isfinite(spec.bias_range.hi)) {
        fail(ErrorCode::InvalidSpec, "bias range must satisfy lo <= hi");
    }
}

/// Spec with the per-sample draws used for pretraining: mask ratio
/// U[0.5, 0.9], pixel drop probability U[0.3, 0.9].
inline CorruptionSpec
sample_corruption_spec(std::uint64_t seed, int patchSize = 8) {
    RngStream rng(seed, 0x73706563ULL);
    CorruptionSpec spec;
    spec.patch_size = patchSize;
    spec.patch_mask_ratio = rng.uniform(0.5, 0.9);
    spec.pixel_drop_prob = rng.uniform(0.3, 0.9);
    spec.seed = seed;
    return spec;
}

/// Parse a spec dict. `seed` is required; keys that are absent keep the
/// per-sample defaults drawn from that seed.
inline CorruptionSpec
corruption_spec_from_json(const nlohmann::json &j) {
    try {
        if (!j.is_object() || !j.contains("seed")) {
            fail(ErrorCode::InvalidSpec, "corruption spec needs an explicit integer 'seed'");
        }
        CorruptionSpec spec = sample_corruption_spec(j.at("seed").get<std::uint64_t>(),
                                                     j.value("patch_size", 8));
        spec.patch_mask_ratio = j.value("patch_mask_ratio", spec.patch_mask_ratio);
        spec.sparsify_fraction = j.value("sparsify_fraction", spec.sparsify_fraction);
        spec.pixel_drop_prob = j.value("pixel_drop_prob", spec.pixel_drop_prob);
        const auto range = [&](const char *key, Range fallback) {
            if (!j.contains(key)) {
                return fallback;
            }
            const auto v = j.at(key).get<std::vector<double>>();
            if (v.size() != 2) {
                fail(ErrorCode::InvalidSpec, std::string(key) + " must be [lo, hi]");
            }
            return Range{v[0], v[1]};
        };
        spec.gain_range = range("gain_range", spec.gain_range);
        spec.bias_range = range("bias_range", spec.bias_range);
        validate(spec);
        return spec;
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorCode::InvalidSpec, std::string("corruption spec: ") + e.what());
    }
}

inline nlohmann::json
to_json(const CorruptionSpec &spec) {
    return {{"patch_size", spec.patch_size},
            {"patch_mask_ratio", spec.patch_mask_ratio},
            {"sparsify_fraction", spec.sparsify_fraction},
            {"pixel_drop_prob", spec.pixel_drop_prob},
            {"gain_range", {spec.gain_range.lo, spec.gain_range.hi}},
            {"bias_range", {spec.bias_range.lo, spec.bias_range.hi}},
            {"seed", spec.seed}};
}


struct PatchRect {
    int row0 = 0, col0 = 0, row1 = 0, col1 = 0; // half-open
};

/// Row-major grid of non-overlapping p×p patches.
struct PatchGrid {
    int rows = 0;
    int cols = 0;
    int patch_size = 1;

    int
    count() const {
        return rows * cols;
    }
    int
    index(int r, int c) const {
        return r * cols + c;
    }
    PatchRect
    rect(int patchIndex) const {
        const int r = patchIndex / cols;
        const int c = patchIndex % cols;
        return {r * patch_size, c * patch_size, (r + 1) * patch_size, (c + 1) * patch_size};
    }
    int
    patch_of(int row, int col) const {
        return index(row / patch_size, col / patch_size);
    }
};

inline PatchGrid
patch_grid(int height, int width, int p) {
    if (p < 1) {
        fail(ErrorCode::InvalidSpec, "patch size must be >= 1");
    }
    if (height % p != 0 || width % p != 0) {
        fail(ErrorCode::IndivisibleImage, std::to_string(height) + "x" + std::to_string(width) +
                                              " is not divisible into " + std::to_string(p) +
                                              "-pixel patches");
    }
    return {height / p, width / p, p};
}

struct CorruptedImage {
    ColorImage image;
    Mask patch_mask; // grid rows×cols, true = removed
    Mask pixel_mask; // H×W, true = retained
    std::vector<int> sparsified_patches;
    std::array<double, 3> gain{1.0, 1.0, 1.0};
    std::array<double, 3> bias{0.0, 0.0, 0.0};
};

namespace detail {

// Substream tags; each stage draws only from its own stream.
inline constexpr std::uint64_t kStreamPatchRemoval = 1;
inline constexpr std::uint64_t kStreamSparsifySelect = 2;
inline constexpr std::uint64_t kStreamPixelDrop = 3;
inline constexpr std::uint64_t kStreamColor = 4;

/// First k entries of a seeded partial Fisher–Yates shuffle of `items`.
inline std::vector<int>
choose_without_replacement(std::vector<int> items, std::size_t k, std::uint64_t seed,
                           std::uint64_t tag) {
    const CounterRng rng(seed, tag);
    k = std::min(k, items.size());
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.below(i, items.size() - i);
        std::swap(items[i], items[j]);
    }
    items.resize(k);
    return items;
}

inline std::size_t
round_count(double fraction, std::size_t n) {
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

} // namespace detail

inline CorruptedImage
corrupt(const ColorImage &image, const CorruptionSpec &spec) {
    validate(spec);
    if (image.channels() != 3) {
        fail(ErrorCode::DimensionMismatch, "corruption expects an RGB image");
    }
    const PatchGrid grid = patch_grid(image.height(), image.width(), spec.patch_size);

    CorruptedImage out;
    out.image = image;
    out.patch_mask = make_mask(grid.rows, grid.cols);
    out.pixel_mask = make_mask(image.height(), image.width(), true);

    // Stage 1: patch removal.
    std::vector<int> all(static_cast<std::size_t>(grid.count()));
    std::iota(all.begin(), all.end(), 0);
    const auto removed = detail::choose_without_replacement(
        all, detail::round_count(spec.patch_mask_ratio, all.size()), spec.seed,
        detail::kStreamPatchRemoval);
    for (int idx : removed) {
        out.patch_mask.data()[static_cast<std::size_t>(idx)] = 1;
    }

    // Stage 2: sparsify a subset of the survivors.
    std::vector<int> survivors;
    for (int idx = 0; idx < grid.count(); ++idx) {
        if (out.patch_mask.data()[static_cast<std::size_t>(idx)] == 0) {
            survivors.push_back(idx);
        }
    }
    out.sparsified_patches = detail::choose_without_replacement(
        survivors, detail::round_count(spec.sparsify_fraction, survivors.size()), spec.seed,
        detail::kStreamSparsifySelect);
    std::sort(out.sparsified_patches.begin(), out.sparsified_patches.end());

    const CounterRng dropRng(spec.seed, detail::kStreamPixelDrop);
    for (int idx : out.sparsified_patches) {
        const PatchRect r = grid.rect(idx);
        for (int row = r.row0; row < r.row1; ++row) {
            for (int col = r.col0; col < r.col1; ++col) {
                // Counter = linear pixel index so draws do not depend on patch order.
                const auto counter = static_cast<std::uint64_t>(row) * image.width() + col;
                if (dropRng.uniform(counter) < spec.pixel_drop_prob) {
                    out.pixel_mask(row, col) = 0;
                }
            }
        }
    }
    for (int idx : removed) {
        const PatchRect r = grid.rect(idx);
        for (int row = r.row0; row < r.row1; ++row) {
            for (int col = r.col0; col < r.col1; ++col) {
                out.pixel_mask(row, col) = 0;
            }
        }
    }

    // Stage 3: affine color jitter on retained pixels; dropped pixels are zero.
    const CounterRng colorRng(spec.seed, detail::kStreamColor);
    for (int ch = 0; ch < 3; ++ch) {
        out.gain[ch] = colorRng.uniform(static_cast<std::uint64_t>(ch) * 2,
                                        spec.gain_range.lo, spec.gain_range.hi);
        out.bias[ch] = colorRng.uniform(static_cast<std::uint64_t>(ch) * 2 + 1,
                                        spec.bias_range.lo, spec.bias_range.hi);
    }
    for (int row = 0; row < image.height(); ++row) {
        for (int col = 0; col < image.width(); ++col) {
            const bool keep = out.pixel_mask(row, col) != 0;
            for (int ch = 0; ch < 3; ++ch) {
                float &v = out.image(row, col, ch);
                if (!keep) {
                    v = 0.0f;
                } else {
                    v = static_cast<float>(
                        std::clamp(out.gain[ch] * static_cast<double>(v) + out.bias[ch], 0.0, 1.0));
                }
            }
        }
    }
    return out;
}

} // namespace pvsm
