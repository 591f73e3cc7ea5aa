// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pvsm/camera.hpp"
#include "pvsm/error.hpp"
#include "pvsm/image.hpp"
#include "pvsm/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace pvsm {

inline constexpr double kDefaultSplatRadius = 1.0;

struct PixelIndex {
    int row = 0;
    int col = 0;
    bool operator==(const PixelIndex &) const = default;
};

using Rgb = std::array<float, 3>;

/// Structure-of-arrays world point cloud with per-point provenance.
struct PointCloud {
    std::vector<Vec3> positions;
    std::vector<Rgb> colors;
    std::vector<int> source_view;
    std::vector<PixelIndex> source_pixel;

    std::size_t
    size() const {
        return positions.size();
    }
    bool
    empty() const {
        return positions.empty();
    }

    void
    reserve(std::size_t n) {
        positions.reserve(n);
        colors.reserve(n);
        source_view.reserve(n);
        source_pixel.reserve(n);
    }

    void
    push_back(const Vec3 &p, const Rgb &c, int view, PixelIndex px) {
        positions.push_back(p);
        colors.push_back(c);
        source_view.push_back(view);
        source_pixel.push_back(px);
    }
};

/// One RGB-D context view.
struct ContextView {
    ColorImage color;
    DepthMap depth;
    Camera camera;
};

/// Rasterized conditioning image. Uncovered pixels are black, have +inf depth
/// and point_index −1.
struct ProjectionImage {
    ColorImage color;
    Mask coverage;
    Image<double> zbuffer;
    Image<std::int64_t> point_index;

    int
    height() const {
        return coverage.height();
    }
    int
    width() const {
        return coverage.width();
    }

    static ProjectionImage
    empty(int height, int width) {
        return {make_color_image(height, width), make_mask(height, width),
                Image<double>(height, width, 1, std::numeric_limits<double>::infinity()),
                Image<std::int64_t>(height, width, 1, -1)};
    }
};

/// Lift a continuous pixel coordinate with z-depth to world space.
inline Vec3
unproject_point(const Camera &camera, PixelCoord px, double depth) {
    const Intrinsics &k = camera.intrinsics;
    const Vec3 cam(depth * ((px.u - k.cx) / k.fx), depth * ((px.v - k.cy) / k.fy), depth);
    return camera.to_world(cam);
}

/// One point per pixel with depth > 0, sampled at the pixel center.
inline PointCloud
unproject_view(const ColorImage &color, const DepthMap &depth, const Camera &camera,
               int viewIndex = 0) {
    const int h = camera.height();
    const int w = camera.width();
    if (color.height() != h || color.width() != w || color.channels() != 3) {
        fail(ErrorCode::DimensionMismatch, "color image does not match camera intrinsics");
    }
    if (depth.height() != h || depth.width() != w || depth.channels() != 1) {
        fail(ErrorCode::DimensionMismatch, "depth map does not match camera intrinsics");
    }
    PointCloud cloud;
    cloud.reserve(static_cast<std::size_t>(h) * w);
    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            const float z = depth(row, col);
            if (!(z > 0.0f)) {
                continue;
            }
            const Vec3 p = unproject_point(camera, {col + 0.5, row + 0.5}, static_cast<double>(z));
            cloud.push_back(p, {color(row, col, 0), color(row, col, 1), color(row, col, 2)},
                            viewIndex, {row, col});
        }
    }
    return cloud;
}

inline PointCloud
merge(std::span<const PointCloud> clouds) {
    PointCloud out;
    std::size_t total = 0;
    for (const auto &c : clouds) {
        total += c.size();
    }
    out.reserve(total);
    for (const auto &c : clouds) {
        out.positions.insert(out.positions.end(), c.positions.begin(), c.positions.end());
        out.colors.insert(out.colors.end(), c.colors.begin(), c.colors.end());
        out.source_view.insert(out.source_view.end(), c.source_view.begin(), c.source_view.end());
        out.source_pixel.insert(out.source_pixel.end(), c.source_pixel.begin(),
                                c.source_pixel.end());
    }
    return out;
}

inline PointCloud
transform_cloud(const RigidTransform &g, PointCloud cloud) {
    for (auto &p : cloud.positions) {
        p = g.apply(p);
    }
    return cloud;
}

inline PointCloud
transform_cloud(const SimilarityTransform &g, PointCloud cloud) {
    for (auto &p : cloud.positions) {
        p = g.apply(p);
    }
    return cloud;
}

namespace detail {

/// Splat coverage rule: the pixel containing the projected center, plus every
/// pixel whose center lies within `radius` of it.
inline bool
splat_covers(int row, int col, double u, double v, double radius) {
    if (col == static_cast<int>(std::floor(u)) && row == static_cast<int>(std::floor(v))) {
        return true;
    }
    const double dx = (col + 0.5) - u;
    const double dy = (row + 0.5) - v;
    return dx * dx + dy * dy <= radius * radius;
}

struct ProjectedPoint {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
    int colLo = 0, colHi = -1, rowLo = 0, rowHi = -1; // inclusive pixel bounds
};

} // namespace detail

struct RasterOptions {
    /// 0 = PVSM_THREADS / hardware default, 1 = serial.
    unsigned threads = 0;
    int tile_size = 16;
};

/// Hard-disc z-buffer splatting. Per pixel the candidate with the smallest
/// (depth, point index) wins, so the result is independent of how tiles are
/// scheduled across threads.
inline ProjectionImage
rasterize(const PointCloud &cloud, const Camera &camera, double splatRadius,
          RasterOptions options = {}) {
    if (!(splatRadius >= 0.0) || !std::isfinite(splatRadius)) {
        fail(ErrorCode::InvalidSpec, "splat radius must be finite and >= 0");
    }
    const int h = camera.height();
    const int w = camera.width();
    ProjectionImage out = ProjectionImage::empty(h, w);
    const std::size_t n = cloud.size();
    if (n == 0) {
        return out;
    }

    // Project. Points whose footprint misses the frame get an empty bound.
    std::vector<detail::ProjectedPoint> proj(n);
    const double reach = splatRadius + 1.0;
    parallel_for_chunks(
        n,
        [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                auto p = try_project(camera, cloud.positions[i]);
                if (!p || !std::isfinite(p->u) || !std::isfinite(p->v)) {
                    continue;
                }
                if (p->u < -reach || p->u > w + reach || p->v < -reach || p->v > h + reach) {
                    continue;
                }
                detail::ProjectedPoint &q = proj[i];
                q.u = p->u;
                q.v = p->v;
                q.depth = p->depth;
                q.colLo = std::max(0, static_cast<int>(std::floor(p->u - reach)));
                q.colHi = std::min(w - 1, static_cast<int>(std::floor(p->u + reach)));
                q.rowLo = std::max(0, static_cast<int>(std::floor(p->v - reach)));
                q.rowHi = std::min(h - 1, static_cast<int>(std::floor(p->v + reach)));
            }
        },
        options.threads, 4096);

    // Bin point indices into tiles, preserving ascending index order per tile.
    const int ts = std::max(1, options.tile_size);
    const int tilesX = (w + ts - 1) / ts;
    const int tilesY = (h + ts - 1) / ts;
    std::vector<std::vector<std::uint32_t>> bins(static_cast<std::size_t>(tilesX) * tilesY);
    for (std::size_t i = 0; i < n; ++i) {
        const auto &q = proj[i];
        if (q.colHi < q.colLo || q.rowHi < q.rowLo) {
            continue;
        }
        for (int ty = q.rowLo / ts; ty <= q.rowHi / ts; ++ty) {
            for (int tx = q.colLo / ts; tx <= q.colHi / ts; ++tx) {
                bins[static_cast<std::size_t>(ty) * tilesX + tx].push_back(
                    static_cast<std::uint32_t>(i));
            }
        }
    }

    // Resolve each tile independently; tiles own disjoint pixels.
    parallel_for_chunks(
        bins.size(),
        [&](std::size_t begin, std::size_t end) {
            for (std::size_t tile = begin; tile < end; ++tile) {
                const int tx = static_cast<int>(tile % tilesX);
                const int ty = static_cast<int>(tile / tilesX);
                const int c0 = tx * ts, c1 = std::min(w, c0 + ts) - 1;
                const int r0 = ty * ts, r1 = std::min(h, r0 + ts) - 1;
                for (std::uint32_t idx : bins[tile]) {
                    const auto &q = proj[idx];
                    const int rowLo = std::max(r0, q.rowLo), rowHi = std::min(r1, q.rowHi);
                    const int colLo = std::max(c0, q.colLo), colHi = std::min(c1, q.colHi);
                    for (int row = rowLo; row <= rowHi; ++row) {
                        for (int col = colLo; col <= colHi; ++col) {
                            if (!detail::splat_covers(row, col, q.u, q.v, splatRadius)) {
                                continue;
                            }
                            double &best = out.zbuffer(row, col);
                            std::int64_t &bestIdx = out.point_index(row, col);
                            const auto i64 = static_cast<std::int64_t>(idx);
                            if (q.depth < best ||
                                (q.depth == best && (bestIdx < 0 || i64 < bestIdx))) {
                                best = q.depth;
                                bestIdx = i64;
                            }
                        }
                    }
                }
            }
        },
        options.threads);

    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            const std::int64_t idx = out.point_index(row, col);
            if (idx < 0) {
                continue;
            }
            out.coverage(row, col) = 1;
            const Rgb &c = cloud.colors[static_cast<std::size_t>(idx)];
            for (int ch = 0; ch < 3; ++ch) {
                out.color(row, col, ch) = c[ch];
            }
        }
    }
    return out;
}

/// Unproject every context view into one cloud and rasterize it into the target.
inline ProjectionImage
projective_condition(std::span<const ContextView> contexts, const Camera &target,
                     double splatRadius = kDefaultSplatRadius, RasterOptions options = {}) {
    std::vector<PointCloud> clouds;
    clouds.reserve(contexts.size());
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        const ContextView &c = contexts[i];
        clouds.push_back(unproject_view(c.color, c.depth, c.camera, static_cast<int>(i)));
    }
    return rasterize(merge(clouds), target, splatRadius, options);
}

} // namespace pvsm
