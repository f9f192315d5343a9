// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#pragma once

#include <array>
#include <string>

namespace raycal {

enum class MaterialModel { Fixed, Embedding, Neural };

std::string to_string(MaterialModel m);
MaterialModel material_model_from_string(const std::string& s);

// Radio material parameters. R = sqrt(1 - S^2) is derived.
struct MaterialParams {
    double eps_r = 1.0;  // >= 1
    double sigma = 0.0;  // S/m, >= 0
    double S = 0.0;      // scattering coefficient in [0, 1]
    double Kx = 0.0;     // cross-polarization coefficient in [0, 1]

    bool valid() const { return eps_r >= 1.0 && sigma >= 0.0 && S >= 0.0 && S <= 1.0 && Kx >= 0.0 && Kx <= 1.0; }
};

struct ScatteringSpec {
    enum class Kind { Lambertian, Backscatter, HemisphericalGaussian };
    Kind kind = Kind::Lambertian;
    // Backscatter lobe model.
    int alpha_r = 1;
    int alpha_s = 1;
    double lobe_fraction = 1.0; // Lambda
    // Hemispherical-Gaussian mixture (diffuse, incident lobe, specular lobe).
    std::array<double, 3> weights{1.0, 0.0, 0.0};
    double concentration_incident = 1.0;
    double concentration_specular = 1.0;
    // Calibrate the pattern (hemispherical-Gaussian parametrization).
    bool trainable = false;
};

std::string to_string(ScatteringSpec::Kind k);
ScatteringSpec::Kind scattering_kind_from_string(const std::string& s);

struct MaterialSpec {
    std::string name;
    MaterialModel model = MaterialModel::Fixed;
    MaterialParams params;
    ScatteringSpec scattering;
};

} // namespace raycal
