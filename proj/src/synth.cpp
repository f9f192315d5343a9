// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/synth.hpp"

#include <random>

#include "raycal/errors.hpp"
#include "raycal/kernels.hpp"

namespace raycal {

namespace {

json material_to_json(const MaterialParams& p)
{
    return {{"eps_r", p.eps_r}, {"sigma", p.sigma}, {"S", p.S}, {"Kx", p.Kx}};
}

MaterialParams material_from_json(const json& j, const std::string& ctx)
{
    StrictReader r(j, ctx);
    MaterialParams p;
    p.eps_r = r.get<double>("eps_r");
    p.sigma = r.get<double>("sigma");
    p.S = r.get<double>("S");
    p.Kx = r.get<double>("Kx");
    r.finish();
    if (!p.valid())
        throw InputError(ctx + ": material parameters out of range");
    return p;
}

json waveform_to_json(const Waveform& w)
{
    return {{"frequency", w.frequency}, {"subcarriers", w.subcarriers}, {"spacing", w.spacing}};
}

Waveform waveform_from_json(const json& j, const std::string& ctx)
{
    StrictReader r(j, ctx);
    Waveform w;
    w.frequency = r.get_or("frequency", w.frequency);
    w.subcarriers = r.get_or("subcarriers", w.subcarriers);
    w.spacing = r.get_or("spacing", w.spacing);
    r.finish();
    w.validate();
    return w;
}

} // namespace

SynthConfig SynthConfig::corridor_defaults()
{
    SynthConfig c;
    c.materials["floor"] = {5.24, 0.121, 0.3, 0.2};
    c.materials["walls"] = {2.73, 0.027, 0.5, 0.4};
    c.materials["ceiling"] = {1.48, 0.004, 0.8, 0.3};
    c.scattering.kind = ScatteringSpec::Kind::Backscatter;
    c.scattering.alpha_r = 5;
    c.scattering.alpha_s = 8;
    c.scattering.lobe_fraction = 0.8;
    c.regions.push_back({{3.0, 0.5, 0.8}, {19.0, 3.5, 2.2}});
    c.seed = 1;
    return c;
}

json synth_config_to_json(const SynthConfig& c)
{
    json mats = json::object();
    for (const auto& [name, p] : c.materials)
        mats[name] = material_to_json(p);
    json overrides = json::object();
    for (const auto& [name, s] : c.scattering_overrides)
        overrides[name] = scattering_spec_to_json(s);
    json regions = json::array();
    for (const Box& b : c.regions)
        regions.push_back({{"min", vec3_to_json(b.lower)}, {"max", vec3_to_json(b.upper)}});
    json rx = json::array();
    for (const Vec3& p : c.rx)
        rx.push_back(vec3_to_json(p));
    return {{"materials", mats},
            {"scattering", scattering_spec_to_json(c.scattering)},
            {"scattering_overrides", overrides},
            {"positions", c.positions},
            {"regions", regions},
            {"rx", rx},
            {"waveform", waveform_to_json(c.waveform)},
            {"trace", trace_config_to_json(c.trace)},
            {"seed", c.seed},
            {"random_phases", c.random_phases},
            {"tx_antenna", antenna_to_json(c.tx_antenna)},
            {"rx_antenna", antenna_to_json(c.rx_antenna)},
            {"hg_normalization", to_string(c.hg_mode)}};
}

SynthConfig synth_config_from_json(const json& j, const std::string& ctx)
{
    StrictReader r(j, ctx);
    SynthConfig c;
    for (const auto& [name, v] : r.child("materials").items())
        c.materials[name] = material_from_json(v, ctx + ".materials." + name);
    if (r.has("scattering"))
        c.scattering = parse_scattering_spec(r.child("scattering"), ctx + ".scattering");
    if (r.has("scattering_overrides"))
        for (const auto& [name, v] : r.child("scattering_overrides").items())
            c.scattering_overrides[name] = parse_scattering_spec(v, ctx + ".scattering_overrides." + name);
    c.positions = r.get_or("positions", c.positions);
    for (const json& b : r.child("regions")) {
        StrictReader br(b, ctx + ".regions");
        Box box{vec3_from_json(br.child("min"), ctx + ".regions.min"),
                vec3_from_json(br.child("max"), ctx + ".regions.max")};
        br.finish();
        if (!(box.lower.x <= box.upper.x && box.lower.y <= box.upper.y && box.lower.z <= box.upper.z))
            throw InputError(ctx + ".regions: min must not exceed max");
        c.regions.push_back(box);
    }
    if (r.has("rx")) {
        c.rx.clear();
        for (const json& p : r.child("rx"))
            c.rx.push_back(vec3_from_json(p, ctx + ".rx"));
    }
    if (c.rx.empty())
        throw InputError(ctx + ".rx: at least one receiver is required");
    if (r.has("waveform"))
        c.waveform = waveform_from_json(r.child("waveform"), ctx + ".waveform");
    if (r.has("trace"))
        c.trace = trace_config_from_json(r.child("trace"), ctx + ".trace");
    c.seed = r.get_or("seed", c.seed);
    c.random_phases = r.get_or("random_phases", c.random_phases);
    if (r.has("tx_antenna"))
        c.tx_antenna = antenna_from_json(r.child("tx_antenna"), ctx + ".tx_antenna");
    if (r.has("rx_antenna"))
        c.rx_antenna = antenna_from_json(r.child("rx_antenna"), ctx + ".rx_antenna");
    try {
        c.hg_mode = hg_normalization_from_string(r.get_or<std::string>("hg_normalization", to_string(c.hg_mode)));
    } catch (const std::invalid_argument& e) {
        throw InputError(ctx + ".hg_normalization: " + e.what());
    }
    r.finish();
    if (c.regions.empty())
        throw InputError(ctx + ".regions: at least one sampling box is required");
    if (c.tx_antenna.trainable || c.rx_antenna.trainable)
        throw InputError(ctx + ": generator antennas must be fixed");
    return c;
}

SynthConfig load_synth_config(const std::filesystem::path& path)
{
    return synth_config_from_json(read_json_file(path, "synth config"), path.string());
}

std::string synth_config_hash(const SynthConfig& c) { return hex64(fnv1a64(synth_config_to_json(c).dump())); }

Scene ground_truth_scene(const Scene& scene, const SynthConfig& c)
{
    Scene out = scene;
    for (MaterialSpec& m : out.mutable_materials()) {
        const auto it = c.materials.find(m.name);
        if (it != c.materials.end()) {
            m.params = it->second;
        } else if (m.model != MaterialModel::Fixed) {
            throw InputError("synth config has no ground truth for material '" + m.name + "'");
        }
        m.model = MaterialModel::Fixed;
        const auto ov = c.scattering_overrides.find(m.name);
        m.scattering = ov != c.scattering_overrides.end() ? ov->second : c.scattering;
        m.scattering.trainable = false;
    }
    for (const auto& [name, p] : c.materials)
        if (!scene.find_material(name))
            throw InputError("synth config names unknown material '" + name + "'");
    return out;
}

std::vector<Vec3> sample_positions(const std::vector<Box>& regions, std::size_t count, std::uint64_t seed)
{
    std::vector<double> cdf;
    double total = 0.0;
    for (const Box& b : regions) {
        const Vec3 e = b.upper - b.lower;
        total += e.x * e.y * e.z;
        cdf.push_back(total);
    }
    std::mt19937_64 rng(seed);
    std::vector<Vec3> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t k = 0;
        if (total > 0.0) {
            const double u = uniform01(rng) * total;
            while (k + 1 < cdf.size() && u >= cdf[k])
                ++k;
        }
        const Box& b = regions[k];
        const double ux = uniform01(rng), uy = uniform01(rng), uz = uniform01(rng);
        out.push_back({b.lower.x + ux * (b.upper.x - b.lower.x), b.lower.y + uy * (b.upper.y - b.lower.y),
                       b.lower.z + uz * (b.upper.z - b.lower.z)});
    }
    return out;
}

GeneratedData generate(const Scene& scene, const SynthConfig& c)
{
    c.waveform.validate();
    const Aabb& box = scene.aabb();
    for (const Box& b : c.regions)
        if (!scene.empty() && (b.lower.x < box.lower.x || b.lower.y < box.lower.y || b.lower.z < box.lower.z ||
                               b.upper.x > box.upper.x || b.upper.y > box.upper.y || b.upper.z > box.upper.z))
            throw InputError("sampling region lies outside the scene bounding box");

    const Scene truth = ground_truth_scene(scene, c);
    ModelConfig mc;
    mc.tx = c.tx_antenna;
    mc.rx = c.rx_antenna;
    mc.hg_mode = c.hg_mode;
    const Model model(truth, mc, c.seed);

    const auto positions = sample_positions(c.regions, c.positions, c.seed);
    std::vector<Vec3> tx, rx;
    std::vector<std::uint32_t> rx_index;
    for (const Vec3& p : positions)
        for (std::size_t r = 0; r < c.rx.size(); ++r) {
            tx.push_back(p);
            rx.push_back(c.rx[r]);
            rx_index.push_back(static_cast<std::uint32_t>(r));
        }

    GeneratedData out;
    out.paths.geometry_hash = geometry_hash(scene);
    out.paths.config = c.trace;
    out.paths.tx = tx;
    out.paths.rx = rx;
    out.paths.sets = trace_positions_parallel(scene, tx, rx, c.trace);

    const std::size_t n = tx.size();
    std::vector<DatasetRecord> records(n);
    std::mt19937_64 phase_rng(c.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::vector<std::array<double, 2>>> chi(n);
    if (c.random_phases)
        for (std::size_t i = 0; i < n; ++i) {
            chi[i].resize(out.paths.sets[i].paths.size());
            for (auto& p : chi[i])
                p = {2.0 * kPi * uniform01(phase_rng), 2.0 * kPi * uniform01(phase_rng)};
        }

    const auto params = model.parameters().values();
    for (std::size_t k = 0; k < n; ++k) {
        DatasetRecord& rec = records[k];
        rec.id = k;
        rec.tx = tx[k];
        rec.rx = rx_index[k];
        const PathSet& set = out.paths.sets[k];
        if (set.paths.empty()) {
            rec.cir.assign(static_cast<std::size_t>(c.waveform.subcarriers), {0.0, 0.0});
            rec.no_paths = true;
            continue;
        }
        const auto kernel = tap_kernel(path_delays(set), c.waveform);
        rec.cir = to_std(model.predict_cir<double>(set, kernel, c.waveform, params, chi[k]));
    }

    double paths = 0.0;
    for (const auto& s : out.paths.sets)
        paths += static_cast<double>(s.paths.size());
    for (const auto& rec : records)
        out.flagged += rec.no_paths ? 1 : 0;
    out.mean_path_count = n ? paths / static_cast<double>(n) : 0.0;

    Manifest& m = out.dataset.manifest;
    m.waveform = c.waveform;
    m.rx_positions = c.rx;
    m.scene_hash = scene_hash(scene);
    m.config_hash = synth_config_hash(c);
    m.seed = c.seed;
    m.tracer = kTracerVersion;
    m.trace = c.trace;
    m.record_count = n;
    out.dataset.records = std::move(records);
    return out;
}

} // namespace raycal
