// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include <map>

#include "raycal/json_util.hpp"

namespace raycal {

std::string to_string(MaterialModel m)
{
    switch (m) {
    case MaterialModel::Fixed: return "fixed";
    case MaterialModel::Embedding: return "embedding";
    case MaterialModel::Neural: return "neural";
    }
    return "?";
}

MaterialModel material_model_from_string(const std::string& s)
{
    if (s == "fixed") return MaterialModel::Fixed;
    if (s == "embedding") return MaterialModel::Embedding;
    if (s == "neural") return MaterialModel::Neural;
    throw InputError("unknown material model '" + s + "' (expected fixed|embedding|neural)");
}

std::string to_string(ScatteringSpec::Kind k)
{
    switch (k) {
    case ScatteringSpec::Kind::Lambertian: return "lambertian";
    case ScatteringSpec::Kind::Backscatter: return "backscatter";
    case ScatteringSpec::Kind::HemisphericalGaussian: return "hg";
    }
    return "?";
}

ScatteringSpec::Kind scattering_kind_from_string(const std::string& s)
{
    if (s == "lambertian") return ScatteringSpec::Kind::Lambertian;
    if (s == "backscatter") return ScatteringSpec::Kind::Backscatter;
    if (s == "hg") return ScatteringSpec::Kind::HemisphericalGaussian;
    throw InputError("unknown scattering pattern '" + s + "' (expected lambertian|backscatter|hg)");
}

namespace {

ScatteringSpec parse_scattering(const json& j, const std::string& ctx)
{
    StrictReader r(j, ctx);
    ScatteringSpec s;
    s.kind = scattering_kind_from_string(r.get<std::string>("kind"));
    s.alpha_r = r.get_or<int>("alpha_r", s.alpha_r);
    s.alpha_s = r.get_or<int>("alpha_s", s.alpha_s);
    s.lobe_fraction = r.get_or<double>("lobe_fraction", s.lobe_fraction);
    s.weights = r.get_or<std::array<double, 3>>("weights", s.weights);
    s.concentration_incident = r.get_or<double>("lambda_incident", s.concentration_incident);
    s.concentration_specular = r.get_or<double>("lambda_specular", s.concentration_specular);
    s.trainable = r.get_or<bool>("trainable", s.trainable);
    r.finish();
    if (s.alpha_r < 1 || s.alpha_s < 1)
        throw InputError(ctx + ": lobe exponents must be integers >= 1");
    if (!(s.lobe_fraction >= 0.0 && s.lobe_fraction <= 1.0))
        throw InputError(ctx + ": lobe_fraction must lie in [0, 1]");
    double wsum = 0.0;
    for (double w : s.weights) {
        if (!(w >= 0.0))
            throw InputError(ctx + ": weights must be non-negative");
        wsum += w;
    }
    if (std::fabs(wsum - 1.0) > 1e-9)
        throw InputError(ctx + ": weights must sum to 1");
    if (!(s.concentration_incident >= 0.0 && s.concentration_specular >= 0.0))
        throw InputError(ctx + ": concentrations must be >= 0");
    return s;
}

json scattering_to_json(const ScatteringSpec& s)
{
    json j;
    j["kind"] = to_string(s.kind);
    switch (s.kind) {
    case ScatteringSpec::Kind::Lambertian: break;
    case ScatteringSpec::Kind::Backscatter:
        j["alpha_r"] = s.alpha_r;
        j["alpha_s"] = s.alpha_s;
        j["lobe_fraction"] = s.lobe_fraction;
        break;
    case ScatteringSpec::Kind::HemisphericalGaussian:
        j["weights"] = s.weights;
        j["lambda_incident"] = s.concentration_incident;
        j["lambda_specular"] = s.concentration_specular;
        break;
    }
    if (s.trainable)
        j["trainable"] = true;
    return j;
}

MaterialSpec parse_material(const json& j, std::size_t index)
{
    const std::string ctx = "materials[" + std::to_string(index) + "]";
    StrictReader r(j, ctx);
    MaterialSpec m;
    m.name = r.get<std::string>("name");
    m.model = material_model_from_string(r.get_or<std::string>("model", "fixed"));
    const bool fixed = m.model == MaterialModel::Fixed;
    for (const char* key : {"eps_r", "sigma", "S", "Kx"})
        if (fixed && !r.has(key))
            throw InputError(ctx + " ('" + m.name + "'): fixed material needs '" + key + "'");
    m.params.eps_r = r.get_or<double>("eps_r", m.params.eps_r);
    m.params.sigma = r.get_or<double>("sigma", m.params.sigma);
    m.params.S = r.get_or<double>("S", m.params.S);
    m.params.Kx = r.get_or<double>("Kx", m.params.Kx);
    if (!m.params.valid())
        throw InputError(ctx + " ('" + m.name + "'): parameters out of range");
    if (const json* sc = r.optional_child("scattering"))
        m.scattering = parse_scattering(*sc, ctx + ".scattering");
    r.finish();
    return m;
}

} // namespace

ScatteringSpec parse_scattering_spec(const json& j, const std::string& context)
{
    return parse_scattering(j, context);
}

json scattering_spec_to_json(const ScatteringSpec& s) { return scattering_to_json(s); }

Scene parse_scene(const std::string& text, const std::string& origin)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(origin + ": invalid JSON: " + e.what());
    }
    StrictReader r(j, origin);

    std::vector<MaterialSpec> materials;
    std::map<std::string, std::uint32_t> by_name;
    const json& mats = r.child("materials");
    if (!mats.is_array())
        throw InputError(origin + ": 'materials' must be an array");
    for (std::size_t i = 0; i < mats.size(); ++i) {
        MaterialSpec m = parse_material(mats[i], i);
        if (!by_name.emplace(m.name, static_cast<std::uint32_t>(materials.size())).second)
            throw InputError(origin + ": duplicate material '" + m.name + "'");
        materials.push_back(std::move(m));
    }

    std::vector<Vec3> vertices;
    const json& verts = r.child("vertices");
    if (!verts.is_array())
        throw InputError(origin + ": 'vertices' must be an array");
    vertices.reserve(verts.size());
    for (std::size_t i = 0; i < verts.size(); ++i)
        vertices.push_back(vec3_from_json(verts[i], origin + ".vertices[" + std::to_string(i) + "]"));

    std::vector<std::array<std::uint32_t, 3>> faces;
    std::vector<std::uint32_t> bindings;
    const json& tris = r.child("triangles");
    if (!tris.is_array())
        throw InputError(origin + ": 'triangles' must be an array");
    for (std::size_t i = 0; i < tris.size(); ++i) {
        const std::string ctx = origin + ".triangles[" + std::to_string(i) + "]";
        StrictReader t(tris[i], ctx);
        const auto v = t.get<std::vector<long long>>("v");
        if (v.size() != 3)
            throw InputError(ctx + ": 'v' needs three vertex indices");
        std::array<std::uint32_t, 3> f{};
        for (int k = 0; k < 3; ++k) {
            if (v[k] < 0 || static_cast<std::size_t>(v[k]) >= vertices.size())
                throw InputError(ctx + ": vertex index out of range");
            f[k] = static_cast<std::uint32_t>(v[k]);
        }
        const auto name = t.get<std::string>("material");
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw InputError(ctx + ": unknown material '" + name + "'");
        t.finish();
        faces.push_back(f);
        bindings.push_back(it->second);
    }
    r.finish();
    return Scene(std::move(vertices), std::move(faces), std::move(bindings), std::move(materials));
}

Scene load_scene(const std::filesystem::path& path)
{
    return parse_scene(read_text_file(path, "scene"), path.string());
}

std::string scene_to_json(const Scene& scene)
{
    json j;
    j["vertices"] = json::array();
    for (const Vec3& v : scene.vertices())
        j["vertices"].push_back(vec3_to_json(v));
    j["triangles"] = json::array();
    for (const Triangle& t : scene.triangles())
        j["triangles"].push_back({{"v", t.vertex_ids}, {"material", scene.materials()[t.material_id].name}});
    j["materials"] = json::array();
    for (const MaterialSpec& m : scene.materials()) {
        json jm{{"name", m.name}, {"model", to_string(m.model)}};
        jm["eps_r"] = m.params.eps_r;
        jm["sigma"] = m.params.sigma;
        jm["S"] = m.params.S;
        jm["Kx"] = m.params.Kx;
        jm["scattering"] = scattering_to_json(m.scattering);
        j["materials"].push_back(jm);
    }
    return j.dump(1);
}

} // namespace raycal
