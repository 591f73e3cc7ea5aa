// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pvsm/error.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pvsm {

/// Dense row-major H×W×C buffer.
template <typename T>
class Image {
  public:
    using value_type = T;

    Image() = default;
    Image(int height, int width, int channels, T fill = T{})
        : mHeight(height), mWidth(width), mChannels(channels),
          mData(static_cast<std::size_t>(height) * width * channels, fill) {
        if (height < 0 || width < 0 || channels < 1) {
            fail(ErrorCode::DimensionMismatch, "invalid image shape");
        }
    }

    int
    height() const {
        return mHeight;
    }
    int
    width() const {
        return mWidth;
    }
    int
    channels() const {
        return mChannels;
    }
    std::size_t
    pixel_count() const {
        return static_cast<std::size_t>(mHeight) * mWidth;
    }
    bool
    empty() const {
        return mData.empty();
    }

    std::size_t
    index(int row, int col, int ch = 0) const {
        return (static_cast<std::size_t>(row) * mWidth + col) * mChannels + ch;
    }

    T &
    operator()(int row, int col, int ch = 0) {
        return mData[index(row, col, ch)];
    }
    const T &
    operator()(int row, int col, int ch = 0) const {
        return mData[index(row, col, ch)];
    }

    std::span<T>
    data() {
        return mData;
    }
    std::span<const T>
    data() const {
        return mData;
    }

    bool
    same_shape(const Image &o) const {
        return mHeight == o.mHeight && mWidth == o.mWidth && mChannels == o.mChannels;
    }

    bool
    operator==(const Image &o) const = default;

  private:
    int mHeight = 0;
    int mWidth = 0;
    int mChannels = 1;
    std::vector<T> mData;
};

/// RGB, values in [0, 1].
using ColorImage = Image<float>;
/// Camera-frame z-depth; 0 marks an invalid pixel.
using DepthMap = Image<float>;
/// One byte per pixel, nonzero = true.
using Mask = Image<std::uint8_t>;

inline ColorImage
make_color_image(int height, int width, float fill = 0.0f) {
    return ColorImage(height, width, 3, fill);
}

inline DepthMap
make_depth_map(int height, int width, float fill = 0.0f) {
    return DepthMap(height, width, 1, fill);
}

inline Mask
make_mask(int height, int width, bool fill = false) {
    return Mask(height, width, 1, fill ? 1 : 0);
}

inline std::size_t
count_true(const Mask &mask) {
    std::size_t n = 0;
    for (auto v : mask.data()) {
        n += v != 0 ? 1 : 0;
    }
    return n;
}

inline void
validate_color(const ColorImage &image) {
    if (image.channels() != 3) {
        fail(ErrorCode::DimensionMismatch, "color image must have 3 channels");
    }
    for (float v : image.data()) {
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
            fail(ErrorCode::InvalidSpec, "color values must be finite and within [0, 1]");
        }
    }
}

inline void
validate_depth(const DepthMap &depth) {
    if (depth.channels() != 1) {
        fail(ErrorCode::DimensionMismatch, "depth map must have 1 channel");
    }
    for (float v : depth.data()) {
        if (!std::isfinite(v) || v < 0.0f) {
            fail(ErrorCode::InvalidSpec, "depth values must be finite and non-negative");
        }
    }
}

} // namespace pvsm
