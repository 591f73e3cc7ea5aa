// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pvsm/error.hpp"
#include "pvsm/image.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace pvsm {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

namespace detail {

inline void
require_same_shape(const ColorImage &a, const ColorImage &b) {
    if (!a.same_shape(b)) {
        fail(ErrorCode::DimensionMismatch, "images must have identical shapes");
    }
}

inline void
require_mask_shape(const ColorImage &a, const Mask &mask) {
    if (mask.height() != a.height() || mask.width() != a.width()) {
        fail(ErrorCode::DimensionMismatch, "mask does not match image");
    }
}

} // namespace detail

/// Peak-1 PSNR from an MSE; exact matches map to +inf.
inline double
psnr_from_mse(double mse) {
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(1.0 / mse);
}

/// Mean squared error over masked pixels, all channels.
inline double
masked_mse(const ColorImage &pred, const ColorImage &gt, const Mask &mask) {
    detail::require_same_shape(pred, gt);
    detail::require_mask_shape(pred, mask);
    double sum = 0.0;
    std::size_t n = 0;
    for (int row = 0; row < pred.height(); ++row) {
        for (int col = 0; col < pred.width(); ++col) {
            if (mask(row, col) == 0) {
                continue;
            }
            for (int ch = 0; ch < pred.channels(); ++ch) {
                const double d = static_cast<double>(pred(row, col, ch)) - gt(row, col, ch);
                sum += d * d;
            }
            ++n;
        }
    }
    if (n == 0) {
        fail(ErrorCode::EmptyMask, "mask selects no pixels");
    }
    return sum / static_cast<double>(n * pred.channels());
}

inline double
mse(const ColorImage &pred, const ColorImage &gt) {
    return masked_mse(pred, gt, make_mask(pred.height(), pred.width(), true));
}

inline double
masked_psnr(const ColorImage &pred, const ColorImage &gt, const Mask &mask) {
    return psnr_from_mse(masked_mse(pred, gt, mask));
}

inline double
psnr(const ColorImage &pred, const ColorImage &gt) {
    return psnr_from_mse(mse(pred, gt));
}

inline std::array<double, kSsimWindow>
ssim_kernel() {
    std::array<double, kSsimWindow> w{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double x = i - kSsimWindow / 2;
        w[i] = std::exp(-(x * x) / (2.0 * kSsimSigma * kSsimSigma));
        sum += w[i];
    }
    for (double &v : w) {
        v /= sum;
    }
    return w;
}

/// Mean SSIM over all fully-inside 11×11 Gaussian windows, per channel, then
/// averaged over channels.
inline double
ssim(const ColorImage &pred, const ColorImage &gt) {
    detail::require_same_shape(pred, gt);
    const int h = pred.height();
    const int w = pred.width();
    if (h < kSsimWindow || w < kSsimWindow) {
        fail(ErrorCode::TooSmall, "SSIM needs images of at least 11x11");
    }
    const auto k = ssim_kernel();
    const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
    const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
    const int oh = h - kSsimWindow + 1;
    const int ow = w - kSsimWindow + 1;

    // Horizontal then vertical pass over the five moment images.
    const auto filter = [&](const std::vector<double> &src) {
        std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < ow; ++c) {
                double s = 0.0;
                for (int i = 0; i < kSsimWindow; ++i) {
                    s += k[i] * src[static_cast<std::size_t>(r) * w + c + i];
                }
                tmp[static_cast<std::size_t>(r) * ow + c] = s;
            }
        }
        std::vector<double> out(static_cast<std::size_t>(oh) * ow);
        for (int r = 0; r < oh; ++r) {
            for (int c = 0; c < ow; ++c) {
                double s = 0.0;
                for (int i = 0; i < kSsimWindow; ++i) {
                    s += k[i] * tmp[static_cast<std::size_t>(r + i) * ow + c];
                }
                out[static_cast<std::size_t>(r) * ow + c] = s;
            }
        }
        return out;
    };

    const std::size_t n = static_cast<std::size_t>(h) * w;
    double total = 0.0;
    for (int ch = 0; ch < pred.channels(); ++ch) {
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * w + c;
                x[i] = pred(r, c, ch);
                y[i] = gt(r, c, ch);
                xx[i] = x[i] * x[i];
                yy[i] = y[i] * y[i];
                xy[i] = x[i] * y[i];
            }
        }
        const auto mx = filter(x), my = filter(y);
        const auto exx = filter(xx), eyy = filter(yy), exy = filter(xy);
        double acc = 0.0;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = exx[i] - mx[i] * mx[i];
            const double vy = eyy[i] - my[i] * my[i];
            const double cov = exy[i] - mx[i] * my[i];
            acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                   ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        total += acc / static_cast<double>(mx.size());
    }
    return total / pred.channels();
}

struct SeenUnseen {
    Mask seen;
    Mask unseen;
};

/// Partition pixels into covered ("seen") and uncovered, optionally dilating
/// coverage by a Euclidean disc of the given radius in pixels.
inline SeenUnseen
seen_unseen_split(const Mask &coverage, int dilationRadius = 0) {
    const int h = coverage.height();
    const int w = coverage.width();
    SeenUnseen out{make_mask(h, w), make_mask(h, w)};
    const int rr = dilationRadius * dilationRadius;
    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            bool seen = coverage(row, col) != 0;
            for (int dy = -dilationRadius; !seen && dy <= dilationRadius; ++dy) {
                for (int dx = -dilationRadius; !seen && dx <= dilationRadius; ++dx) {
                    const int r = row + dy, c = col + dx;
                    if (dx * dx + dy * dy <= rr && r >= 0 && r < h && c >= 0 && c < w &&
                        coverage(r, c) != 0) {
                        seen = true;
                    }
                }
            }
            out.seen(row, col) = seen ? 1 : 0;
            out.unseen(row, col) = seen ? 0 : 1;
        }
    }
    return out;
}

struct MetricReport {
    double psnr_db = 0.0;
    std::optional<double> ssim;
    double mse = 0.0;
    std::size_t valid_pixel_count = 0;
    std::optional<double> seen_psnr_db;
    std::optional<double> unseen_psnr_db;
};

/// PSNR/MSE over `mask` (all pixels when absent), SSIM on the full image when
/// it is large enough, and seen/unseen PSNR when coverage is given. A split
/// side with no pixels is left empty.
inline MetricReport
evaluate(const ColorImage &pred, const ColorImage &gt, const std::optional<Mask> &mask = {},
         const std::optional<Mask> &coverage = {}, int dilationRadius = 0) {
    detail::require_same_shape(pred, gt);
    MetricReport report;
    const Mask m = mask ? *mask : make_mask(pred.height(), pred.width(), true);
    report.mse = masked_mse(pred, gt, m);
    report.psnr_db = psnr_from_mse(report.mse);
    report.valid_pixel_count = count_true(m);
    if (pred.height() >= kSsimWindow && pred.width() >= kSsimWindow) {
        report.ssim = ssim(pred, gt);
    }
    if (coverage) {
        detail::require_mask_shape(pred, *coverage);
        const SeenUnseen split = seen_unseen_split(*coverage, dilationRadius);
        if (count_true(split.seen) > 0) {
            report.seen_psnr_db = masked_psnr(pred, gt, split.seen);
        }
        if (count_true(split.unseen) > 0) {
            report.unseen_psnr_db = masked_psnr(pred, gt, split.unseen);
        }
    }
    return report;
}

/// JSON number, or the string "inf" for the exact-match sentinel.
inline nlohmann::json
db_to_json(double db) {
    if (std::isinf(db)) {
        return db > 0 ? "inf" : "-inf";
    }
    return db;
}

inline nlohmann::json
to_json(const MetricReport &r) {
    nlohmann::json j;
    j["psnr_db"] = db_to_json(r.psnr_db);
    j["ssim"] = r.ssim ? nlohmann::json(*r.ssim) : nlohmann::json(nullptr);
    j["mse"] = r.mse;
    j["valid_pixel_count"] = r.valid_pixel_count;
    j["seen_psnr_db"] = r.seen_psnr_db ? db_to_json(*r.seen_psnr_db) : nlohmann::json(nullptr);
    j["unseen_psnr_db"] =
        r.unseen_psnr_db ? db_to_json(*r.unseen_psnr_db) : nlohmann::json(nullptr);
    return j;
}

} // namespace pvsm
