// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#pragma once

#include "raycal/geometry.hpp"

namespace raycal {

// Floor square in the z = 0 plane, centered at the origin, two triangles.
Scene make_ground_plane(double half_size, MaterialSpec material);

struct CorridorShape {
    double length = 20.0; // x
    double width = 4.0;   // y
    double height = 3.0;  // z
    double tile = 1.5;    // target tile edge, m
};

// Closed box [0, length] x [0, width] x [0, height] with inward normals and
// three materials: "floor", "walls", "ceiling". `base` supplies model and
// scattering settings shared by all three.
Scene make_corridor(const CorridorShape& shape, const MaterialSpec& base);

} // namespace raycal
