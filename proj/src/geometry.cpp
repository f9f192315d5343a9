// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/geometry.hpp"

#include <algorithm>

#include "raycal/constants.hpp"
#include "raycal/errors.hpp"

namespace raycal {

Mat3 rotation_zyx(double yaw, double pitch, double roll)
{
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    const double cr = std::cos(roll), sr = std::sin(roll);
    return {{cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr, //
             sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr, //
             -sp, cp * sr, cp * cr}};
}

Vec3 spherical_unit(double theta, double phi)
{
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

Vec3 theta_hat(double theta, double phi)
{
    return {std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), -std::sin(theta)};
}

Vec3 phi_hat(double /*theta*/, double phi) { return {-std::sin(phi), std::cos(phi), 0.0}; }

std::array<double, 2> to_spherical(const Vec3& d)
{
    const double r = norm(d);
    const double theta = std::acos(std::clamp(d.z / r, -1.0, 1.0));
    double phi = std::atan2(d.y, d.x);
    if (phi < 0.0)
        phi += 2.0 * kPi;
    return {theta, phi};
}

// ---------------------------------------------------------------------------

Scene::Scene(std::vector<Vec3> vertices, std::vector<std::array<std::uint32_t, 3>> faces,
             std::vector<std::uint32_t> face_materials, std::vector<MaterialSpec> materials)
    : vertices_(std::move(vertices)), materials_(std::move(materials))
{
    if (faces.size() != face_materials.size())
        throw InputError("scene: face/material binding count mismatch");
    triangles_.reserve(faces.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        Triangle t;
        t.vertex_ids = faces[f];
        t.material_id = face_materials[f];
        for (auto v : t.vertex_ids)
            if (v >= vertices_.size())
                throw InputError("scene: triangle " + std::to_string(f) + " references a missing vertex");
        if (t.material_id >= materials_.size())
            throw InputError("scene: triangle " + std::to_string(f) + " references a missing material");
        const Vec3 c = cross(vertices_[t.vertex_ids[1]] - vertices_[t.vertex_ids[0]],
                             vertices_[t.vertex_ids[2]] - vertices_[t.vertex_ids[0]]);
        const double n = norm(c);
        if (!(n > 0.0))
            throw InputError("scene: triangle " + std::to_string(f) + " is degenerate");
        t.normal = c / n;
        t.area = 0.5 * n;
        total_area_ += t.area;
        triangles_.push_back(t);
    }
    if (!vertices_.empty())
        aabb_ = compute_aabb(vertices_);
}

std::optional<std::uint32_t> Scene::find_material(const std::string& name) const
{
    for (std::size_t i = 0; i < materials_.size(); ++i)
        if (materials_[i].name == name)
            return static_cast<std::uint32_t>(i);
    return std::nullopt;
}

// ---------------------------------------------------------------------------

std::optional<Hit> intersect_triangle(const Scene& scene, std::uint32_t id, const Ray& ray)
{
    const Triangle& tri = scene.triangle(id);
    const Vec3& v0 = scene.vertex(tri, 0);
    const Vec3 e1 = scene.vertex(tri, 1) - v0;
    const Vec3 e2 = scene.vertex(tri, 2) - v0;
    const Vec3 p = cross(ray.direction, e2);
    const double det = dot(e1, p);
    if (std::fabs(det) < 1e-14)
        return std::nullopt;
    const double inv = 1.0 / det;
    const Vec3 s = ray.origin - v0;
    const double u = dot(s, p) * inv;
    if (u < 0.0 || u > 1.0)
        return std::nullopt;
    const Vec3 q = cross(s, e1);
    const double v = dot(ray.direction, q) * inv;
    if (v < 0.0 || u + v > 1.0)
        return std::nullopt;
    const double t = dot(e2, q) * inv;
    if (!(t > ray.t_min && t < ray.t_max))
        return std::nullopt;
    Hit h;
    h.triangle_id = id;
    h.t = t;
    h.point = ray.origin + t * ray.direction;
    h.barycentric = {1.0 - u - v, u, v};
    return h;
}

std::optional<Hit> intersect(const Scene& scene, const Ray& ray)
{
    std::optional<Hit> best;
    const auto n = static_cast<std::uint32_t>(scene.triangles().size());
    for (std::uint32_t i = 0; i < n; ++i) {
        auto h = intersect_triangle(scene, i, ray);
        if (h && (!best || h->t < best->t))
            best = h;
    }
    return best;
}

bool occluded(const Scene& scene, const Vec3& a, const Vec3& b, std::span<const std::uint32_t> ignore)
{
    const Vec3 d = b - a;
    const double len = norm(d);
    if (!(len > 2.0 * Tolerances::occlusion_margin))
        return false;
    Ray ray{a, d / len, Tolerances::occlusion_margin, len - Tolerances::occlusion_margin};
    const auto n = static_cast<std::uint32_t>(scene.triangles().size());
    for (std::uint32_t i = 0; i < n; ++i) {
        if (std::find(ignore.begin(), ignore.end(), i) != ignore.end())
            continue;
        if (intersect_triangle(scene, i, ray))
            return true;
    }
    return false;
}

Vec3 mirror(const Vec3& point, const Vec3& plane_point, const Vec3& n)
{
    return point - 2.0 * dot(point - plane_point, n) * n;
}

Vec3 mirror(const Scene& scene, std::uint32_t id, const Vec3& point)
{
    const Triangle& t = scene.triangle(id);
    return mirror(point, scene.vertex(t, 0), t.normal);
}

bool inside_triangle(const Scene& scene, std::uint32_t id, const Vec3& p, double tol)
{
    const Triangle& t = scene.triangle(id);
    const Vec3& a = scene.vertex(t, 0);
    const Vec3& b = scene.vertex(t, 1);
    const Vec3& c = scene.vertex(t, 2);
    const double inv = 1.0 / (2.0 * t.area);
    // Signed sub-areas relative to the face normal.
    const double wa = dot(cross(b - p, c - p), t.normal) * inv;
    const double wb = dot(cross(c - p, a - p), t.normal) * inv;
    const double wc = 1.0 - wa - wb;
    return wa >= -tol && wb >= -tol && wc >= -tol;
}

std::vector<SurfaceSample> sample_surface(const Scene& scene, std::size_t count, std::uint64_t seed)
{
    if (scene.empty())
        throw InputError("sample_surface: scene has no triangles");
    if (count == 0)
        throw InputError("sample_surface: count must be >= 1");

    const auto tris = scene.triangles();
    std::vector<double> cdf(tris.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < tris.size(); ++i) {
        acc += tris[i].area;
        cdf[i] = acc;
    }
    const double total = acc;
    const double dA = total / static_cast<double>(count);

    std::mt19937_64 rng(seed);
    std::vector<SurfaceSample> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        // One stratum of the area CDF per sample.
        const double u = (static_cast<double>(k) + uniform01(rng)) / static_cast<double>(count) * total;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end())
            --it;
        const auto id = static_cast<std::uint32_t>(it - cdf.begin());
        const Triangle& t = tris[id];
        double r1 = uniform01(rng), r2 = uniform01(rng);
        const double s = std::sqrt(r1);
        const Vec3 p = (1.0 - s) * scene.vertex(t, 0) + s * (1.0 - r2) * scene.vertex(t, 1) +
                       s * r2 * scene.vertex(t, 2);
        out.push_back({p, t.normal, dA, id});
    }
    return out;
}

Aabb compute_aabb(std::span<const Vec3> points)
{
    if (points.empty())
        throw InputError("compute_aabb: no vertices");
    Vec3 lo = points.front(), hi = points.front();
    for (const Vec3& p : points) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    Aabb box;
    box.lower = lo;
    box.upper = hi;
    box.center = 0.5 * (lo + hi);
    box.edge = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
    box.degenerate = !(box.edge > 0.0);
    return box;
}

Aabb compute_aabb(const Scene& scene)
{
    if (scene.vertices().empty())
        throw InputError("compute_aabb: scene has no vertices");
    return compute_aabb(scene.vertices());
}

} // namespace raycal
