// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pvsm/camera.hpp"
#include "pvsm/error.hpp"
#include "pvsm/parallel.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace pvsm {

/// Tolerance on |d| = 1 accepted when building a Plücker ray.
inline constexpr double kUnitTolerance = 1e-9;

/// Line coordinates (m, d) with unit direction d and moment m = o × d.
struct PluckerRay {
    Vec3 moment = Vec3::Zero();
    Vec3 direction = Vec3::UnitZ();

    Eigen::Matrix<double, 6, 1>
    stacked() const {
        Eigen::Matrix<double, 6, 1> v;
        v << moment, direction;
        return v;
    }
};

struct KleinResidual {
    double orthogonality = 0.0; // m·d
    double norm_error = 0.0;    // |d| - 1
};

inline PluckerRay
plucker_from_ray(const Vec3 &origin, const Vec3 &direction) {
    if (std::abs(direction.norm() - 1.0) > kUnitTolerance) {
        fail(ErrorCode::NonUnitDirection, "ray direction must have unit length");
    }
    return {origin.cross(direction), direction};
}

inline KleinResidual
klein_residual(const PluckerRay &ray) {
    return {ray.moment.dot(ray.direction), ray.direction.norm() - 1.0};
}

/// (m', d') = (R m + [t]× R d, R d)
inline PluckerRay
act_se3(const RigidTransform &g, const PluckerRay &ray) {
    const Vec3 rd = g.rotation * ray.direction;
    return {g.rotation * ray.moment + g.translation.cross(rd), rd};
}

/// Per-pixel Plücker coordinates, row-major.
class PluckerMap {
  public:
    PluckerMap() = default;
    PluckerMap(int height, int width)
        : mHeight(height), mWidth(width),
          mRays(static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {}

    int
    height() const {
        return mHeight;
    }
    int
    width() const {
        return mWidth;
    }
    std::size_t
    size() const {
        return mRays.size();
    }

    PluckerRay &
    at(int row, int col) {
        return mRays[static_cast<std::size_t>(row) * mWidth + col];
    }
    const PluckerRay &
    at(int row, int col) const {
        return mRays[static_cast<std::size_t>(row) * mWidth + col];
    }

    const std::vector<PluckerRay> &
    rays() const {
        return mRays;
    }
    std::vector<PluckerRay> &
    rays() {
        return mRays;
    }

  private:
    int mHeight = 0;
    int mWidth = 0;
    std::vector<PluckerRay> mRays;
};

inline PluckerMap
plucker_map(const Camera &camera, unsigned threads = 0) {
    PluckerMap map(camera.height(), camera.width());
    parallel_for_chunks(
        static_cast<std::size_t>(camera.height()),
        [&](std::size_t rowBegin, std::size_t rowEnd) {
            for (std::size_t row = rowBegin; row < rowEnd; ++row) {
                for (int col = 0; col < camera.width(); ++col) {
                    const Ray r = pixel_ray(camera, col + 0.5, static_cast<double>(row) + 0.5);
                    map.at(static_cast<int>(row), col) = plucker_from_ray(r.origin, r.direction);
                }
            }
        },
        threads);
    return map;
}

inline PluckerMap
act_se3(const RigidTransform &g, const PluckerMap &map) {
    PluckerMap out(map.height(), map.width());
    for (std::size_t i = 0; i < map.size(); ++i) {
        out.rays()[i] = act_se3(g, map.rays()[i]);
    }
    return out;
}

/// Row-major H×W field of ‖act_se3(g, L) − L‖₂ over the stacked 6-vector.
struct ScalarField {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    double
    max() const;
    double
    mean() const;
    double
    stddev() const;
};

inline double
ScalarField::max() const {
    double m = 0.0;
    for (double v : values) {
        m = std::max(m, v);
    }
    return m;
}

inline double
ScalarField::mean() const {
    if (values.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (double v : values) {
        s += v;
    }
    return s / static_cast<double>(values.size());
}

inline double
ScalarField::stddev() const {
    if (values.empty()) {
        return 0.0;
    }
    const double mu = mean();
    double s = 0.0;
    for (double v : values) {
        s += (v - mu) * (v - mu);
    }
    return std::sqrt(s / static_cast<double>(values.size()));
}

inline ScalarField
perturbation_field(const RigidTransform &g, const PluckerMap &map) {
    ScalarField field{map.height(), map.width(), std::vector<double>(map.size())};
    for (std::size_t i = 0; i < map.size(); ++i) {
        const PluckerRay &l = map.rays()[i];
        field.values[i] = (act_se3(g, l).stacked() - l.stacked()).norm();
    }
    return field;
}

} // namespace pvsm
