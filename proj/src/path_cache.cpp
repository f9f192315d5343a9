// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/json_util.hpp"
#include "raycal/path_tracer.hpp"

namespace raycal {

namespace {

json path_to_json(const PropagationPath& p)
{
    json j;
    j["segments"] = p.segments;
    j["delay"] = p.delay;
    j["departure"] = {p.theta_tx, p.phi_tx};
    j["arrival"] = {p.theta_rx, p.phi_rx};
    j["interactions"] = json::array();
    for (const Interaction& it : p.interactions) {
        json ji;
        ji["kind"] = it.kind == InteractionKind::Specular ? "specular" : "diffuse";
        ji["triangle"] = it.triangle_id;
        ji["point"] = vec3_to_json(it.point);
        ji["normal"] = vec3_to_json(it.normal);
        ji["k_in"] = vec3_to_json(it.k_in);
        ji["k_out"] = vec3_to_json(it.k_out);
        if (it.kind == InteractionKind::Diffuse)
            ji["area"] = it.area;
        j["interactions"].push_back(std::move(ji));
    }
    return j;
}

PropagationPath path_from_json(const json& j, const Vec3& tx, const Vec3& rx, const std::string& ctx)
{
    StrictReader r(j, ctx);
    PropagationPath p;
    p.tx = tx;
    p.rx = rx;
    p.segments = r.get<std::vector<double>>("segments");
    p.delay = r.get<double>("delay");
    const auto dep = r.get<std::array<double, 2>>("departure");
    const auto arr = r.get<std::array<double, 2>>("arrival");
    p.theta_tx = dep[0];
    p.phi_tx = dep[1];
    p.theta_rx = arr[0];
    p.phi_rx = arr[1];
    const json& its = r.child("interactions");
    for (std::size_t k = 0; k < its.size(); ++k) {
        const std::string c = ctx + ".interactions[" + std::to_string(k) + "]";
        StrictReader ri(its[k], c);
        Interaction it;
        const auto kind = ri.get<std::string>("kind");
        if (kind == "specular")
            it.kind = InteractionKind::Specular;
        else if (kind == "diffuse")
            it.kind = InteractionKind::Diffuse;
        else
            throw InputError(c + ": unknown interaction kind '" + kind + "'");
        it.triangle_id = ri.get<std::uint32_t>("triangle");
        it.point = vec3_from_json(ri.child("point"), c + ".point");
        it.normal = vec3_from_json(ri.child("normal"), c + ".normal");
        it.k_in = vec3_from_json(ri.child("k_in"), c + ".k_in");
        it.k_out = vec3_from_json(ri.child("k_out"), c + ".k_out");
        it.area = ri.get_or<double>("area", 0.0);
        ri.finish();
        p.interactions.push_back(it);
    }
    r.finish();
    if (p.segments.size() != p.interactions.size() + 1)
        throw InputError(ctx + ": segment count does not match interaction count");
    return p;
}

} // namespace

std::string scene_hash(const Scene& scene) { return hex64(fnv1a64(scene_to_json(scene))); }

std::string geometry_hash(const Scene& scene)
{
    json v = json::array(), t = json::array();
    for (const Vec3& p : scene.vertices())
        v.push_back(vec3_to_json(p));
    for (const Triangle& tri : scene.triangles())
        t.push_back(tri.vertex_ids);
    return hex64(fnv1a64(json{{"vertices", v}, {"triangles", t}}.dump()));
}

std::string path_cache_to_json(const PathCache& cache)
{
    if (cache.tx.size() != cache.sets.size() || cache.rx.size() != cache.sets.size())
        throw UsageError("path cache: tx/rx/sets size mismatch");
    json j;
    j["format"] = kPathCacheFormat;
    j["version"] = kPathCacheVersion;
    j["tracer"] = kTracerVersion;
    j["geometry_hash"] = cache.geometry_hash;
    j["config"] = trace_config_to_json(cache.config);
    j["positions"] = json::array();
    for (std::size_t i = 0; i < cache.sets.size(); ++i) {
        json jp;
        jp["tx"] = vec3_to_json(cache.tx[i]);
        jp["rx"] = vec3_to_json(cache.rx[i]);
        jp["paths"] = json::array();
        for (const auto& p : cache.sets[i].paths)
            jp["paths"].push_back(path_to_json(p));
        j["positions"].push_back(std::move(jp));
    }
    return j.dump();
}

PathCache path_cache_from_json(const std::string& text, const std::string& origin)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(origin + ": invalid JSON: " + e.what());
    }
    StrictReader r(j, origin);
    if (r.get<std::string>("format") != kPathCacheFormat)
        throw IncompatibleError(origin + ": not a path cache");
    const int version = r.get<int>("version");
    if (version != kPathCacheVersion)
        throw IncompatibleError(origin + ": unsupported path cache version " + std::to_string(version));
    r.get<std::string>("tracer");
    PathCache cache;
    cache.geometry_hash = r.get<std::string>("geometry_hash");
    cache.config = trace_config_from_json(r.child("config"), origin + ".config");
    const json& positions = r.child("positions");
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const std::string ctx = origin + ".positions[" + std::to_string(i) + "]";
        StrictReader rp(positions[i], ctx);
        const Vec3 tx = vec3_from_json(rp.child("tx"), ctx + ".tx");
        const Vec3 rx = vec3_from_json(rp.child("rx"), ctx + ".rx");
        PathSet set;
        set.config = cache.config;
        const json& paths = rp.child("paths");
        for (std::size_t k = 0; k < paths.size(); ++k)
            set.paths.push_back(path_from_json(paths[k], tx, rx, ctx + ".paths[" + std::to_string(k) + "]"));
        rp.finish();
        cache.tx.push_back(tx);
        cache.rx.push_back(rx);
        cache.sets.push_back(std::move(set));
    }
    r.finish();
    return cache;
}

void save_path_cache(const std::filesystem::path& path, const PathCache& cache)
{
    write_text_file(path, path_cache_to_json(cache));
}

PathCache load_path_cache(const std::filesystem::path& path)
{
    return path_cache_from_json(read_text_file(path, "path cache"), path.string());
}

json trace_config_to_json(const TraceConfig& c)
{
    return {{"max_order", c.max_order},
            {"ray_count", c.ray_count},
            {"diffuse_samples", c.diffuse_samples},
            {"seed", c.seed},
            {"mode", c.mode == CandidateMode::Sbr ? "sbr" : "exhaustive"}};
}

TraceConfig trace_config_from_json(const json& j, const std::string& ctx)
{
    StrictReader r(j, ctx);
    TraceConfig c;
    c.max_order = r.get_or<int>("max_order", c.max_order);
    c.ray_count = r.get_or<std::size_t>("ray_count", c.ray_count);
    c.diffuse_samples = r.get_or<std::size_t>("diffuse_samples", c.diffuse_samples);
    c.seed = r.get_or<std::uint64_t>("seed", c.seed);
    const auto mode = r.get_or<std::string>("mode", "sbr");
    if (mode == "sbr")
        c.mode = CandidateMode::Sbr;
    else if (mode == "exhaustive")
        c.mode = CandidateMode::Exhaustive;
    else
        throw InputError(ctx + ": unknown candidate mode '" + mode + "'");
    if (c.max_order < 0)
        throw InputError(ctx + ".max_order: must be >= 0");
    r.finish();
    return c;
}

} // namespace raycal
