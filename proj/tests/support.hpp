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
#include <random>
#include <string>
#include <vector>

#include "raycal/geometry.hpp"

namespace raycal::testing {

inline MaterialSpec fixed_material(const std::string& name, double eps_r = 4.0, double sigma = 0.0, double S = 0.0,
                                   double kx = 0.0)
{
    MaterialSpec m;
    m.name = name;
    m.model = MaterialModel::Fixed;
    m.params = {eps_r, sigma, S, kx};
    return m;
}

using Quad = std::array<Vec3, 4>; // counter-clockwise seen from the front side

// Each quad becomes two triangles (0,1,2) and (0,2,3) bound to `material_ids[i]`.
inline Scene quad_scene(const std::vector<Quad>& quads, std::vector<MaterialSpec> materials,
                        std::vector<std::uint32_t> material_ids = {})
{
    std::vector<Vec3> v;
    std::vector<std::array<std::uint32_t, 3>> f;
    std::vector<std::uint32_t> fm;
    for (std::size_t i = 0; i < quads.size(); ++i) {
        const auto base = static_cast<std::uint32_t>(v.size());
        for (const Vec3& p : quads[i])
            v.push_back(p);
        const std::uint32_t mat = material_ids.empty() ? 0u : material_ids[i];
        f.push_back({base, base + 1, base + 2});
        f.push_back({base, base + 2, base + 3});
        fm.push_back(mat);
        fm.push_back(mat);
    }
    return Scene(std::move(v), std::move(f), std::move(fm), std::move(materials));
}

// Horizontal square of half-size h at height z, facing +z.
inline Quad floor_quad(double h, double z = 0.0, double cx = 0.0, double cy = 0.0)
{
    return {Vec3{cx - h, cy - h, z}, Vec3{cx + h, cy - h, z}, Vec3{cx + h, cy + h, z}, Vec3{cx - h, cy + h, z}};
}

// Random triangle soup inside [-s, s]^3.
inline Scene random_soup(std::size_t count, double s, std::uint64_t seed, double size = 1.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-s, s), e(-size, size);
    std::vector<Vec3> v;
    std::vector<std::array<std::uint32_t, 3>> f;
    std::vector<std::uint32_t> fm;
    for (std::size_t i = 0; i < count; ++i) {
        const Vec3 c{u(rng), u(rng), u(rng)};
        const auto base = static_cast<std::uint32_t>(v.size());
        for (int k = 0; k < 3; ++k)
            v.push_back(c + Vec3{e(rng), e(rng), e(rng)});
        f.push_back({base, base + 1, base + 2});
        fm.push_back(0);
    }
    return Scene(std::move(v), std::move(f), std::move(fm), {fixed_material("m")});
}

} // namespace raycal::testing
