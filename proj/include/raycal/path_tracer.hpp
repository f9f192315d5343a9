// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------
//
// Geometric path search. Paths carry geometry only; field values are
// computed later, so a trace can be cached and reused for every training
// iteration.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "raycal/geometry.hpp"

namespace raycal {

enum class InteractionKind : std::uint8_t { Specular, Diffuse };

struct Interaction {
    InteractionKind kind = InteractionKind::Specular;
    Vec3 point;
    std::uint32_t triangle_id = 0;
    Vec3 normal; // oriented so that dot(k_in, normal) < 0
    Vec3 k_in;
    Vec3 k_out;
    double area = 0.0; // dA, diffuse only
};

struct PropagationPath {
    Vec3 tx;
    Vec3 rx;
    std::vector<Interaction> interactions;
    std::vector<double> segments; // d_1 .. d_{Q+1}
    double delay = 0.0;           // s
    double theta_tx = 0.0, phi_tx = 0.0; // departure, global frame
    double theta_rx = 0.0, phi_rx = 0.0; // arrival (direction from rx toward the source)

    double length() const;
    bool is_los() const { return interactions.empty(); }
    bool is_diffuse() const { return !interactions.empty() && interactions.back().kind == InteractionKind::Diffuse; }
    std::vector<std::uint32_t> sequence() const;
};

using Sequence = std::vector<std::uint32_t>;

enum class CandidateMode : std::uint8_t { Sbr, Exhaustive };

struct TraceConfig {
    int max_order = 3;
    std::size_t ray_count = 20000;
    std::size_t diffuse_samples = 0;
    std::uint64_t seed = 0;
    CandidateMode mode = CandidateMode::Sbr;
};

struct PathSet {
    std::vector<PropagationPath> paths;
    TraceConfig config;
};

// Builds a path (segments, directions, angles, delay) through `points`.
// Normals are oriented toward the incoming ray.
PropagationPath make_path(const Scene& scene, const Vec3& tx, const Vec3& rx, std::span<const Vec3> points,
                          std::span<const std::uint32_t> triangles, std::span<const InteractionKind> kinds,
                          std::span<const double> areas);

std::optional<PropagationPath> trace_los(const Scene& scene, const Vec3& tx, const Vec3& rx);

// Fibonacci-lattice launch under a seeded random rotation; every prefix of
// every bounce sequence up to `max_order` is recorded. `warning` (if given)
// receives a message for ray_count == 0.
std::set<Sequence> sbr_candidates(const Scene& scene, const Vec3& tx, int max_order, std::size_t ray_count,
                                  std::uint64_t seed, std::string* warning = nullptr);

// Every ordered sequence of length 1..max_order without immediate repeats.
std::set<Sequence> exhaustive_candidates(const Scene& scene, int max_order);

// Image-method refinement; nullopt when the chain is not realizable.
std::optional<PropagationPath> refine_specular(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                               const Sequence& sequence);

std::vector<PropagationPath> trace_diffuse(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                           std::span<const SurfaceSample> samples);
std::vector<PropagationPath> trace_diffuse(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                           std::size_t sample_count, std::uint64_t seed);

// LOS, then refined specular chains in sequence order, then diffuse paths.
PathSet trace_all(const Scene& scene, const Vec3& tx, const Vec3& rx, const TraceConfig& config);
// Same, reusing shared surface samples for the diffuse part.
PathSet trace_all(const Scene& scene, const Vec3& tx, const Vec3& rx, const TraceConfig& config,
                  std::span<const SurfaceSample> samples);

// Path cache (JSON, versioned).
inline constexpr const char* kPathCacheFormat = "raycal-paths";
inline constexpr int kPathCacheVersion = 1;
inline constexpr const char* kTracerVersion = "raycal-tracer/1";

struct PathCache {
    std::string geometry_hash;
    TraceConfig config;
    std::vector<Vec3> tx;
    std::vector<Vec3> rx;
    std::vector<PathSet> sets; // one per (tx, rx) pair, same order
};

std::string path_cache_to_json(const PathCache& cache);
PathCache path_cache_from_json(const std::string& text, const std::string& origin);
void save_path_cache(const std::filesystem::path& path, const PathCache& cache);
PathCache load_path_cache(const std::filesystem::path& path);

std::string scene_hash(const Scene& scene);
// Vertices and triangle indices only; material edits keep it unchanged.
std::string geometry_hash(const Scene& scene);

} // namespace raycal
