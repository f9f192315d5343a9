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
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "raycal/material.hpp"

namespace raycal {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr bool operator==(const Vec3&) const = default;
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) { return v / norm(v); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

// Row-major 3x3 rotation (local -> global).
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    Vec3 operator*(const Vec3& v) const
    {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 transposed() const { return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}}; }
    bool is_identity() const { return m == Mat3{}.m; }
};

// Z-Y-X (yaw, pitch, roll) rotation, radians.
Mat3 rotation_zyx(double yaw, double pitch, double roll);

// Spherical unit vectors r(theta, phi), theta_hat, phi_hat.
Vec3 spherical_unit(double theta, double phi);
Vec3 theta_hat(double theta, double phi);
Vec3 phi_hat(double theta, double phi);
// Returns (theta in [0, pi], phi in [0, 2 pi)).
std::array<double, 2> to_spherical(const Vec3& direction);

// Reflection of a direction about a unit normal.
inline Vec3 reflect(const Vec3& k, const Vec3& n) { return k - 2.0 * dot(k, n) * n; }

struct Triangle {
    std::array<std::uint32_t, 3> vertex_ids{};
    std::uint32_t material_id = 0;
    Vec3 normal;        // unit, from winding
    double area = 0.0;  // m^2
};

struct Aabb {
    Vec3 center;
    double edge = 0.0; // longest edge of the box
    Vec3 lower, upper;
    bool degenerate = false;
};

class Scene {
  public:
    Scene() = default;
    // Validates indices/material bindings and derives normals, areas and the AABB.
    Scene(std::vector<Vec3> vertices, std::vector<std::array<std::uint32_t, 3>> faces,
          std::vector<std::uint32_t> face_materials, std::vector<MaterialSpec> materials);

    std::span<const Vec3> vertices() const { return vertices_; }
    std::span<const Triangle> triangles() const { return triangles_; }
    std::span<const MaterialSpec> materials() const { return materials_; }
    std::vector<MaterialSpec>& mutable_materials() { return materials_; }
    const Triangle& triangle(std::uint32_t id) const { return triangles_.at(id); }
    const Vec3& vertex(const Triangle& t, int k) const { return vertices_[t.vertex_ids[k]]; }
    std::optional<std::uint32_t> find_material(const std::string& name) const;
    const Aabb& aabb() const { return aabb_; }
    double total_area() const { return total_area_; }
    bool empty() const { return triangles_.empty(); }

  private:
    std::vector<Vec3> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<MaterialSpec> materials_;
    Aabb aabb_;
    double total_area_ = 0.0;
};

struct Ray {
    Vec3 origin;
    Vec3 direction; // unit
    double t_min = 0.0;
    double t_max = std::numeric_limits<double>::infinity();
};

struct Hit {
    std::uint32_t triangle_id = 0;
    double t = 0.0;
    Vec3 point;
    std::array<double, 3> barycentric{}; // weights of vertices 0, 1, 2
};

// Single-triangle test (Moeller-Trumbore); hit only for t in (t_min, t_max).
std::optional<Hit> intersect_triangle(const Scene& scene, std::uint32_t id, const Ray& ray);

// Nearest hit over all triangles; ties resolved by the lowest triangle id.
std::optional<Hit> intersect(const Scene& scene, const Ray& ray);

// True iff a non-ignored triangle crosses the open segment (a, b) shrunk by
// Tolerances::occlusion_margin at both ends.
bool occluded(const Scene& scene, const Vec3& a, const Vec3& b, std::span<const std::uint32_t> ignore = {});

// Reflection of `point` across the supporting plane of triangle `id`.
Vec3 mirror(const Scene& scene, std::uint32_t id, const Vec3& point);
Vec3 mirror(const Vec3& point, const Vec3& plane_point, const Vec3& plane_normal);

// Barycentric point-in-triangle test for a point on the triangle's plane.
bool inside_triangle(const Scene& scene, std::uint32_t id, const Vec3& point, double tolerance);

struct SurfaceSample {
    Vec3 point;
    Vec3 normal;
    double area = 0.0; // dA, m^2
    std::uint32_t triangle_id = 0;
};

// Stratified, area-weighted samples; every sample carries dA = area / count.
// Throws InputError for an empty scene or count == 0.
std::vector<SurfaceSample> sample_surface(const Scene& scene, std::size_t count, std::uint64_t seed);

// Throws InputError for an empty scene.
Aabb compute_aabb(const Scene& scene);
Aabb compute_aabb(std::span<const Vec3> points);

// Uniform double in [0, 1) with a bit-stable mapping from the engine output.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Scene JSON (see README for the schema). Throws InputError.
Scene load_scene(const std::filesystem::path& path);
Scene parse_scene(const std::string& text, const std::string& origin = "<scene>");
std::string scene_to_json(const Scene& scene);

} // namespace raycal
