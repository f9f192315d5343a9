// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "raycal/calibration.hpp"

namespace raycal {

struct HeatmapGrid {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double x0 = 0.0, x1 = 1.0; // cell-center range along x
    double y0 = 0.0, y1 = 1.0;
    std::vector<double> values; // row-major, ny rows of nx; NaN means no data
};

// One rect per cell; color mapped linearly from the finite value range.
std::string svg_heatmap(const HeatmapGrid& grid, const std::string& title, const std::string& unit);

// Tap magnitudes (dB) of one or two CIRs against the signed tap index.
std::string svg_cir_stem(std::span<const std::complex<double>> measured,
                         std::span<const std::complex<double>> predicted, const std::string& title);

std::string svg_loss_curve(std::span<const LogRow> history);

} // namespace raycal
