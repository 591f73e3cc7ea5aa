// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pvsm/bench.hpp"
#include "pvsm/bench_io.hpp"
#include "pvsm/camera.hpp"
#include "pvsm/conditioning.hpp"
#include "pvsm/corruption.hpp"
#include "pvsm/error.hpp"
#include "pvsm/image.hpp"
#include "pvsm/io.hpp"
#include "pvsm/metrics.hpp"
#include "pvsm/parallel.hpp"
#include "pvsm/plucker.hpp"
#include "pvsm/random.hpp"
#include "pvsm/synthetic.hpp"
#include "pvsm/verify.hpp"

namespace pvsm {

inline constexpr const char *kVersion = "0.1.0";

} // namespace pvsm
