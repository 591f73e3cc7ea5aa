// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pvsm/bench.hpp"
#include "pvsm/io.hpp"

#include <json.hpp>

#include <string>
#include <type_traits>
#include <variant>

namespace pvsm {

inline nlohmann::json
to_json(const TransformSpec &spec) {
    nlohmann::json j{{"kind", std::string(kind_name(spec))}};
    std::visit(
        [&](const auto &s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, AnisotropicPixel>) {
                j["ratio"] = s.ratio;
            } else if constexpr (std::is_same_v<T, WorldScale>) {
                j["s"] = s.s;
            } else if constexpr (std::is_same_v<T, Fov>) {
                j["zoom"] = s.zoom;
            } else if constexpr (std::is_same_v<T, Roll>) {
                j["angle"] = s.angle;
            } else if constexpr (std::is_same_v<T, RandomGauge>) {
                j["seed"] = s.seed;
                j["max_rotation"] = s.max_rotation;
                j["max_translation"] = s.max_translation;
            } else {
                j["anchor_depth"] = s.params.anchor_depth;
                if (const auto *d = std::get_if<DeltaSchedule>(&s.params.schedule)) {
                    j["deltas"] = d->deltas;
                } else {
                    j["fovs"] = std::get<FovSchedule>(s.params.schedule).fovs;
                }
            }
        },
        spec);
    return j;
}

/// case.json (spec, transformed target, scale factor), gt.png, valid.png.
inline void
save_bench_case(const fs::path &dir, const TransformSpec &spec, const BenchCase &bc) {
    const double valid = static_cast<double>(count_true(bc.valid_mask)) /
                         static_cast<double>(bc.valid_mask.pixel_count());
    const nlohmann::json j{{"spec", to_json(spec)},
                           {"transformed_target", camera_to_json(bc.transformed_target)},
                           {"world_scale_factor", bc.world_scale_factor},
                           {"valid_fraction", valid}};
    write_text(dir / "case.json", j.dump(2) + "\n");
    save_image(dir / "gt.png", bc.warped_gt);
    save_mask(dir / "valid.png", bc.valid_mask);
}

} // namespace pvsm
