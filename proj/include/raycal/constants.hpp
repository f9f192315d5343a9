// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#pragma once

#include <numbers>

namespace raycal {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;        // m/s
inline constexpr double kVacuumPermittivity = 8.8541878128e-12; // F/m

// Geometric tolerances, in one place.
struct Tolerances {
    static constexpr double occlusion_margin = 1e-5; // m, at both segment ends
    static constexpr double unit_norm = 1e-9;
    static constexpr double ray_offset = 1e-5;      // m, SBR re-launch offset
    static constexpr double barycentric = 1e-12;
};

// Floor applied before square roots of quantities that may underflow to 0.
inline constexpr double kSqrtFloor = 1e-30;

} // namespace raycal
