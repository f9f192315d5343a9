// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "raycal/autodiff.hpp"

namespace raycal {

struct GradcheckCase {
    std::string name;
    std::size_t parameters = 0;
    double max_relative_error = 0.0;
    std::string worst_parameter;
    double autodiff = 0.0;
    double finite_difference = 0.0;
    bool passed = true;
};

struct GradcheckReport {
    std::vector<GradcheckCase> cases;
    double tolerance = 1e-4;
    double worst = 0.0;
    std::string worst_case;
    bool passed = true;
    double seconds = 0.0;
};

// Built-in suite: every tape primitive, the field and parametrization
// building blocks, and full-pipeline losses on a ground-plane (two-ray)
// scene and a small corridor. `fault` perturbs the recorded partials of
// one primitive to exercise the failure path.
GradcheckReport run_gradcheck(std::optional<ad::Op> fault = std::nullopt, double tolerance = 1e-4);

std::string gradcheck_report_json(const GradcheckReport& report);
std::string gradcheck_report_text(const GradcheckReport& report);

} // namespace raycal
