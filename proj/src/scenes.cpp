// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/scenes.hpp"

#include <cmath>

namespace raycal {

Scene make_ground_plane(double half_size, MaterialSpec material)
{
    const double h = half_size;
    std::vector<Vec3> v{{-h, -h, 0.0}, {h, -h, 0.0}, {h, h, 0.0}, {-h, h, 0.0}};
    std::vector<std::array<std::uint32_t, 3>> f{{0, 1, 2}, {0, 2, 3}};
    return Scene(std::move(v), std::move(f), {0, 0}, {std::move(material)});
}

namespace {

struct Builder {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;
    std::vector<std::uint32_t> materials;

    // Rectangle origin + s*u + t*v, s, t in [0, 1], tiled; normal u x v.
    void rect(const Vec3& origin, const Vec3& u, const Vec3& v, double tile, std::uint32_t material)
    {
        const int nu = std::max(1, static_cast<int>(std::lround(norm(u) / tile)));
        const int nv = std::max(1, static_cast<int>(std::lround(norm(v) / tile)));
        const auto base = static_cast<std::uint32_t>(vertices.size());
        for (int j = 0; j <= nv; ++j)
            for (int i = 0; i <= nu; ++i)
                vertices.push_back(origin + u * (static_cast<double>(i) / nu) + v * (static_cast<double>(j) / nv));
        auto id = [&](int i, int j) { return base + static_cast<std::uint32_t>(j * (nu + 1) + i); };
        for (int j = 0; j < nv; ++j)
            for (int i = 0; i < nu; ++i) {
                faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
                faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
                materials.push_back(material);
                materials.push_back(material);
            }
    }
};

} // namespace

Scene make_corridor(const CorridorShape& s, const MaterialSpec& base)
{
    const double L = s.length, W = s.width, H = s.height;
    Builder b;
    // Inward normals: u x v points into the box.
    b.rect({0, 0, 0}, {L, 0, 0}, {0, W, 0}, s.tile, 0); // floor, +z
    b.rect({0, 0, H}, {0, W, 0}, {L, 0, 0}, s.tile, 2); // ceiling, -z
    b.rect({0, 0, 0}, {0, 0, H}, {L, 0, 0}, s.tile, 1); // y = 0 wall, +y
    b.rect({0, W, 0}, {L, 0, 0}, {0, 0, H}, s.tile, 1); // y = W wall, -y
    b.rect({0, 0, 0}, {0, W, 0}, {0, 0, H}, s.tile, 1); // x = 0 wall, +x
    b.rect({L, 0, 0}, {0, 0, H}, {0, W, 0}, s.tile, 1); // x = L wall, -x
    std::vector<MaterialSpec> mats(3, base);
    mats[0].name = "floor";
    mats[1].name = "walls";
    mats[2].name = "ceiling";
    return Scene(std::move(b.vertices), std::move(b.faces), std::move(b.materials), std::move(mats));
}

} // namespace raycal
