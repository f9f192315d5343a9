// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include <gtest/gtest.h>

#include <set>

#include "raycal/constants.hpp"
#include "raycal/path_tracer.hpp"
#include "raycal/scenes.hpp"
#include "support.hpp"

using namespace raycal;
using namespace raycal::testing;

namespace {

Scene two_walls(double half_gap = 2.0, double length = 40.0)
{
    // Parallel walls at y = -half_gap and y = +half_gap, facing each other.
    const double l = length / 2;
    const Quad south{Vec3{-l, -half_gap, -5}, Vec3{l, -half_gap, -5}, Vec3{l, -half_gap, 5}, Vec3{-l, -half_gap, 5}};
    const Quad north{Vec3{-l, half_gap, -5}, Vec3{-l, half_gap, 5}, Vec3{l, half_gap, 5}, Vec3{l, half_gap, -5}};
    return quad_scene({south, north}, {fixed_material("wall")});
}

std::set<Sequence> sequences(const PathSet& s)
{
    std::set<Sequence> out;
    for (const auto& p : s.paths)
        out.insert(p.sequence());
    return out;
}

} // namespace

TEST(LineOfSight, EmptyScene)
{
    const Scene s;
    const Vec3 tx{1, 2, 3}, rx{4, 6, 3};
    const auto p = trace_los(s, tx, rx);
    ASSERT_TRUE(p);
    ASSERT_EQ(p->segments.size(), 1u);
    EXPECT_DOUBLE_EQ(p->segments[0], 5.0);
}

TEST(LineOfSight, BlockedByWall)
{
    const Quad wall{Vec3{1, -1, 0}, Vec3{1, 1, 0}, Vec3{1, 1, 2}, Vec3{1, -1, 2}};
    const Scene s = quad_scene({wall}, {fixed_material("wall")});
    EXPECT_FALSE(trace_los(s, {0, 0, 1}, {2, 0, 1}));
}

TEST(LineOfSight, AboveFloorDelay)
{
    const Scene s = quad_scene({floor_quad(20)}, {fixed_material("floor")});
    const auto p = trace_los(s, {0, 0, 1}, {0, 10, 1});
    ASSERT_TRUE(p);
    EXPECT_DOUBLE_EQ(p->segments[0], 10.0);
    EXPECT_DOUBLE_EQ(p->delay, 10.0 / 299792458.0);
}

TEST(Candidates, FloorTrianglesFoundAtOrderOne)
{
    const Scene s = quad_scene({floor_quad(2)}, {fixed_material("floor")});
    const auto c = sbr_candidates(s, {0, 0, 1}, 1, 5000, 1);
    EXPECT_TRUE(c.count({0}));
    EXPECT_TRUE(c.count({1}));
}

TEST(Candidates, AlternatingWallsAtOrderTwo)
{
    const Scene s = two_walls();
    const auto c = sbr_candidates(s, {0, 0, 0}, 2, 20000, 1);
    bool south_north = false, north_south = false;
    for (const Sequence& q : c) {
        if (q.size() != 2)
            continue;
        const bool a = q[0] < 2, b = q[1] < 2;
        south_north |= a && !b;
        north_south |= !a && b;
        EXPECT_NE(a, b) << "consecutive hits on the same planar wall";
    }
    EXPECT_TRUE(south_north);
    EXPECT_TRUE(north_south);
}

TEST(Candidates, ZeroRaysGiveEmptySetWithWarning)
{
    const Scene s = two_walls();
    std::string warning;
    EXPECT_TRUE(sbr_candidates(s, {0, 0, 0}, 2, 0, 1, &warning).empty());
    EXPECT_FALSE(warning.empty());
}

TEST(Refine, SingleGroundBounce)
{
    const Scene s = quad_scene({floor_quad(5)}, {fixed_material("floor")});
    const Vec3 tx{0, 0, 1}, rx{2, 0, 1};
    std::optional<PropagationPath> p;
    for (std::uint32_t t : {0u, 1u})
        if (!p)
            p = refine_specular(s, tx, rx, {t});
    ASSERT_TRUE(p);
    ASSERT_EQ(p->interactions.size(), 1u);
    EXPECT_NEAR(norm(p->interactions[0].point - Vec3{1, 0, 0}), 0.0, 1e-12);
    EXPECT_NEAR(p->segments[0], std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(p->segments[1], std::sqrt(2.0), 1e-12);
}

TEST(Refine, ReflectionOutsideTriangleRejected)
{
    const Scene s = quad_scene({floor_quad(0.5, 0.0, 10.0, 0.0)}, {fixed_material("floor")});
    EXPECT_FALSE(refine_specular(s, {0, 0, 1}, {2, 0, 1}, {0}));
    EXPECT_FALSE(refine_specular(s, {0, 0, 1}, {2, 0, 1}, {1}));
}

TEST(Refine, UnfoldingIdentityBetweenMirrors)
{
    const Scene s = two_walls(2.0);
    const Vec3 tx{0, 0.5, 0}, rx{6, -0.3, 0.4};
    int found = 0;
    for (std::uint32_t a = 0; a < 4; ++a)
        for (std::uint32_t b = 0; b < 4; ++b) {
            if ((a < 2) == (b < 2))
                continue;
            const auto p = refine_specular(s, tx, rx, {a, b});
            if (!p)
                continue;
            ++found;
            const Vec3 image = mirror(s, b, mirror(s, a, tx));
            EXPECT_NEAR(p->length(), distance(rx, image), 1e-9);
            EXPECT_NEAR(p->delay, p->length() / kSpeedOfLight, 1e-20);
        }
    EXPECT_EQ(found, 2); // south-north and north-south, one triangle each
}

TEST(Diffuse, OccludedSampleExcluded)
{
    const Scene s = quad_scene({floor_quad(1), {Vec3{-1, 0.2, 0.1}, Vec3{1, 0.2, 0.1}, Vec3{1, 0.2, 3}, Vec3{-1, 0.2, 3}}},
                               {fixed_material("m")});
    SurfaceSample sample{{0, -0.5, 0}, {0, 0, 1}, 1.0, 0};
    // rx behind the wall at y = 0.2.
    const SurfaceSample one[] = {sample};
    EXPECT_TRUE(trace_diffuse(s, {0, -1, 1}, {0, 2, 1}, one).empty());
    EXPECT_EQ(trace_diffuse(s, {0, -1, 1}, {0, -2, 1}, one).size(), 1u);
}

TEST(Diffuse, SquareCenterByPythagoras)
{
    const Scene s = quad_scene({floor_quad(0.5)}, {fixed_material("m")});
    const SurfaceSample one[] = {{{0, 0, 0}, {0, 0, 1}, 1.0, 0}};
    const Vec3 tx{-3, 0, 4}, rx{0, 1, 1};
    const auto paths = trace_diffuse(s, tx, rx, one);
    ASSERT_EQ(paths.size(), 1u);
    EXPECT_NEAR(paths[0].segments[0], 5.0, 1e-12);
    EXPECT_NEAR(paths[0].segments[1], std::sqrt(2.0), 1e-12);
    EXPECT_EQ(paths[0].interactions[0].area, 1.0);
    EXPECT_TRUE(paths[0].is_diffuse());
}

TEST(Diffuse, ZeroSamplesGiveNothing)
{
    const Scene s = quad_scene({floor_quad(0.5)}, {fixed_material("m")});
    EXPECT_TRUE(trace_diffuse(s, {0, 0, 1}, {0, 1, 1}, std::span<const SurfaceSample>{}).empty());
}

TEST(TraceAll, EmptySceneIsLosOnly)
{
    const Scene s;
    const PathSet p = trace_all(s, {0, 0, 0}, {1, 1, 1}, {3, 1000, 10, 0, CandidateMode::Sbr});
    ASSERT_EQ(p.paths.size(), 1u);
    EXPECT_TRUE(p.paths[0].is_los());
}

TEST(TraceAll, TwoRayGeometry)
{
    const Scene s = quad_scene({floor_quad(20)}, {fixed_material("floor")});
    const Vec3 tx{0, 0, 2}, rx{6, 1, 1.5};
    const PathSet p = trace_all(s, tx, rx, {1, 4000, 0, 0, CandidateMode::Sbr});
    ASSERT_EQ(p.paths.size(), 2u);
    EXPECT_TRUE(p.paths[0].is_los());
    EXPECT_NEAR(p.paths[0].delay, distance(tx, rx) / kSpeedOfLight, 1e-20);
    const Vec3 image{tx.x, tx.y, -tx.z};
    EXPECT_NEAR(p.paths[1].length(), distance(image, rx), 1e-12);
}

TEST(TraceAll, Deterministic)
{
    const Scene s = make_corridor({8, 3, 2.5, 2}, fixed_material("m"));
    const TraceConfig c{3, 3000, 40, 5, CandidateMode::Sbr};
    const PathSet a = trace_all(s, {1, 1, 1}, {6, 2, 1.5}, c), b = trace_all(s, {1, 1, 1}, {6, 2, 1.5}, c);
    ASSERT_EQ(a.paths.size(), b.paths.size());
    for (std::size_t i = 0; i < a.paths.size(); ++i) {
        EXPECT_EQ(a.paths[i].sequence(), b.paths[i].sequence());
        EXPECT_EQ(a.paths[i].delay, b.paths[i].delay);
    }
}

TEST(TraceAll, SbrMatchesExhaustiveInShoebox)
{
    const Scene s = make_corridor({6, 4, 3, 6}, fixed_material("m"));
    const Vec3 tx{1.2, 1.1, 1.3}, rx{4.4, 2.9, 1.7};
    const auto sbr = trace_all(s, tx, rx, {3, 60000, 0, 1, CandidateMode::Sbr});
    const auto ex = trace_all(s, tx, rx, {3, 0, 0, 1, CandidateMode::Exhaustive});
    EXPECT_EQ(sequences(sbr), sequences(ex));
    EXPECT_GT(ex.paths.size(), 10u);
}

TEST(PathCache, JsonRoundTripIsExact)
{
    const Scene s = make_corridor({8, 3, 2.5, 2}, fixed_material("m"));
    PathCache c;
    c.geometry_hash = geometry_hash(s);
    c.config = {2, 2000, 20, 3, CandidateMode::Sbr};
    c.tx = {{1, 1, 1}, {5, 2, 2}};
    c.rx = {{6, 2, 1.5}, {2, 1, 1}};
    for (std::size_t i = 0; i < 2; ++i)
        c.sets.push_back(trace_all(s, c.tx[i], c.rx[i], c.config));
    const std::string text = path_cache_to_json(c);
    const PathCache r = path_cache_from_json(text, "<memory>");
    EXPECT_EQ(path_cache_to_json(r), text);
    ASSERT_EQ(r.sets.size(), 2u);
    EXPECT_EQ(r.sets[1].paths.size(), c.sets[1].paths.size());
}
