// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/path_tracer.hpp"

#include <algorithm>

#include "raycal/constants.hpp"
#include "raycal/errors.hpp"

namespace raycal {

double PropagationPath::length() const
{
    double s = 0.0;
    for (double d : segments)
        s += d;
    return s;
}

Sequence PropagationPath::sequence() const
{
    Sequence s;
    s.reserve(interactions.size());
    for (const auto& it : interactions)
        s.push_back(it.triangle_id);
    return s;
}

PropagationPath make_path(const Scene& scene, const Vec3& tx, const Vec3& rx, std::span<const Vec3> points,
                          std::span<const std::uint32_t> triangles, std::span<const InteractionKind> kinds,
                          std::span<const double> areas)
{
    PropagationPath p;
    p.tx = tx;
    p.rx = rx;
    const std::size_t q = points.size();
    Vec3 prev = tx;
    for (std::size_t k = 0; k <= q; ++k) {
        const Vec3 next = k < q ? points[k] : rx;
        p.segments.push_back(distance(prev, next));
        prev = next;
    }
    for (std::size_t k = 0; k < q; ++k) {
        Interaction it;
        it.kind = kinds[k];
        it.point = points[k];
        it.triangle_id = triangles[k];
        it.area = areas[k];
        const Vec3 from = k == 0 ? tx : points[k - 1];
        const Vec3 to = k + 1 < q ? points[k + 1] : rx;
        it.k_in = normalized(points[k] - from);
        Vec3 n = scene.triangle(triangles[k]).normal;
        if (dot(it.k_in, n) > 0.0)
            n = -n;
        it.normal = n;
        it.k_out = it.kind == InteractionKind::Specular ? reflect(it.k_in, n) : normalized(to - points[k]);
        p.interactions.push_back(it);
    }
    const Vec3 first = q > 0 ? points[0] : rx;
    const Vec3 last = q > 0 ? points[q - 1] : tx;
    const auto dep = to_spherical(first - tx);
    const auto arr = to_spherical(last - rx);
    p.theta_tx = dep[0];
    p.phi_tx = dep[1];
    p.theta_rx = arr[0];
    p.phi_rx = arr[1];
    p.delay = p.length() / kSpeedOfLight;
    return p;
}

std::optional<PropagationPath> trace_los(const Scene& scene, const Vec3& tx, const Vec3& rx)
{
    if (tx == rx)
        throw UsageError("trace_los: tx and rx coincide");
    if (occluded(scene, tx, rx))
        return std::nullopt;
    return make_path(scene, tx, rx, {}, {}, {}, {});
}

namespace {

// Uniformly random rotation from a unit quaternion.
Mat3 random_rotation(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const double u1 = uniform01(rng), u2 = uniform01(rng), u3 = uniform01(rng);
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double w = a * std::sin(2.0 * kPi * u2), x = a * std::cos(2.0 * kPi * u2);
    const double y = b * std::sin(2.0 * kPi * u3), z = b * std::cos(2.0 * kPi * u3);
    return {{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w), //
             2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w), //
             2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}};
}

} // namespace

std::set<Sequence> sbr_candidates(const Scene& scene, const Vec3& tx, int max_order, std::size_t ray_count,
                                  std::uint64_t seed, std::string* warning)
{
    std::set<Sequence> out;
    if (max_order < 1)
        throw UsageError("sbr_candidates: max_order must be >= 1");
    if (ray_count == 0) {
        if (warning)
            *warning = "sbr_candidates: ray_count is 0, no candidates";
        return out;
    }
    const Mat3 rot = random_rotation(seed);
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    const double n = static_cast<double>(ray_count);
    Sequence seq;
    for (std::size_t i = 0; i < ray_count; ++i) {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * static_cast<double>(i);
        Ray ray{tx, rot * Vec3{r * std::cos(phi), r * std::sin(phi), z}, 0.0};
        seq.clear();
        for (int bounce = 0; bounce < max_order; ++bounce) {
            auto hit = intersect(scene, ray);
            if (!hit)
                break;
            seq.push_back(hit->triangle_id);
            out.insert(seq);
            const Vec3 nrm = scene.triangle(hit->triangle_id).normal;
            ray = Ray{hit->point, normalized(reflect(ray.direction, nrm)), Tolerances::ray_offset};
        }
    }
    return out;
}

std::set<Sequence> exhaustive_candidates(const Scene& scene, int max_order)
{
    std::set<Sequence> out;
    const auto n = static_cast<std::uint32_t>(scene.triangles().size());
    std::vector<Sequence> frontier{{}};
    for (int k = 0; k < max_order; ++k) {
        std::vector<Sequence> next;
        for (const Sequence& s : frontier)
            for (std::uint32_t t = 0; t < n; ++t) {
                if (!s.empty() && s.back() == t)
                    continue;
                Sequence e = s;
                e.push_back(t);
                out.insert(e);
                next.push_back(std::move(e));
            }
        frontier = std::move(next);
    }
    return out;
}

std::optional<PropagationPath> refine_specular(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                               const Sequence& sequence)
{
    const std::size_t q = sequence.size();
    if (q == 0)
        return trace_los(scene, tx, rx);

    std::vector<Vec3> images(q);
    Vec3 img = tx;
    for (std::size_t k = 0; k < q; ++k) {
        img = mirror(scene, sequence[k], img);
        images[k] = img;
    }

    std::vector<Vec3> points(q);
    Vec3 target = rx;
    for (std::size_t kk = q; kk-- > 0;) {
        const Triangle& tri = scene.triangle(sequence[kk]);
        const Vec3& p0 = scene.vertex(tri, 0);
        const Vec3 d = images[kk] - target;
        const double den = dot(d, tri.normal);
        if (std::fabs(den) < 1e-15)
            return std::nullopt;
        const double t = dot(p0 - target, tri.normal) / den;
        if (!(t > 0.0 && t < 1.0))
            return std::nullopt;
        const Vec3 s = target + t * d;
        if (!inside_triangle(scene, sequence[kk], s, Tolerances::barycentric))
            return std::nullopt;
        points[kk] = s;
        target = s;
    }

    // Both neighbours strictly on the same side of each reflecting plane.
    for (std::size_t k = 0; k < q; ++k) {
        const Vec3& n = scene.triangle(sequence[k]).normal;
        const Vec3 a = k == 0 ? tx : points[k - 1];
        const Vec3 b = k + 1 < q ? points[k + 1] : rx;
        const double sa = dot(a - points[k], n), sb = dot(b - points[k], n);
        if (!(sa * sb > 0.0) || std::fabs(sa) < Tolerances::occlusion_margin ||
            std::fabs(sb) < Tolerances::occlusion_margin)
            return std::nullopt;
    }

    for (std::size_t k = 0; k <= q; ++k) {
        const Vec3 a = k == 0 ? tx : points[k - 1];
        const Vec3 b = k < q ? points[k] : rx;
        std::uint32_t ignore[2];
        std::size_t ni = 0;
        if (k > 0)
            ignore[ni++] = sequence[k - 1];
        if (k < q)
            ignore[ni++] = sequence[k];
        if (occluded(scene, a, b, std::span<const std::uint32_t>(ignore, ni)))
            return std::nullopt;
    }

    std::vector<InteractionKind> kinds(q, InteractionKind::Specular);
    std::vector<double> areas(q, 0.0);
    return make_path(scene, tx, rx, points, sequence, kinds, areas);
}

std::vector<PropagationPath> trace_diffuse(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                           std::span<const SurfaceSample> samples)
{
    std::vector<PropagationPath> out;
    const InteractionKind kind = InteractionKind::Diffuse;
    for (const SurfaceSample& s : samples) {
        Vec3 n = s.normal;
        double st = dot(tx - s.point, n);
        if (st < 0.0) {
            n = -n;
            st = -st;
        }
        const double sr = dot(rx - s.point, n);
        if (!(st > Tolerances::occlusion_margin && sr > Tolerances::occlusion_margin))
            continue;
        const std::uint32_t ignore[1] = {s.triangle_id};
        if (occluded(scene, tx, s.point, ignore) || occluded(scene, s.point, rx, ignore))
            continue;
        out.push_back(make_path(scene, tx, rx, std::span<const Vec3>(&s.point, 1),
                                std::span<const std::uint32_t>(&s.triangle_id, 1),
                                std::span<const InteractionKind>(&kind, 1), std::span<const double>(&s.area, 1)));
    }
    return out;
}

std::vector<PropagationPath> trace_diffuse(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                           std::size_t sample_count, std::uint64_t seed)
{
    if (sample_count == 0)
        return {};
    const auto samples = sample_surface(scene, sample_count, seed);
    return trace_diffuse(scene, tx, rx, samples);
}

PathSet trace_all(const Scene& scene, const Vec3& tx, const Vec3& rx, const TraceConfig& config,
                  std::span<const SurfaceSample> samples)
{
    PathSet set;
    set.config = config;
    if (auto los = trace_los(scene, tx, rx))
        set.paths.push_back(std::move(*los));
    if (config.max_order >= 1 && !scene.empty()) {
        const std::set<Sequence> cands = config.mode == CandidateMode::Exhaustive
                                             ? exhaustive_candidates(scene, config.max_order)
                                             : sbr_candidates(scene, tx, config.max_order, config.ray_count, config.seed);
        for (const Sequence& s : cands)
            if (auto p = refine_specular(scene, tx, rx, s))
                set.paths.push_back(std::move(*p));
    }
    auto diffuse = trace_diffuse(scene, tx, rx, samples);
    for (auto& p : diffuse)
        set.paths.push_back(std::move(p));
    return set;
}

PathSet trace_all(const Scene& scene, const Vec3& tx, const Vec3& rx, const TraceConfig& config)
{
    std::vector<SurfaceSample> samples;
    if (config.diffuse_samples > 0 && !scene.empty())
        samples = sample_surface(scene, config.diffuse_samples, config.seed);
    return trace_all(scene, tx, rx, config, samples);
}

} // namespace raycal
