// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/model.hpp"

#include <random>

#include "raycal/errors.hpp"

namespace raycal {

namespace {

std::vector<double> default_pattern_raw(const ScatteringSpec& spec)
{
    if (spec.kind == ScatteringSpec::Kind::HemisphericalGaussian && spec.weights[0] > 0.0 && spec.weights[1] > 0.0 &&
        spec.weights[2] > 0.0)
        return hg_to_raw({spec.weights, spec.concentration_incident, spec.concentration_specular});
    return std::vector<double>(kHgRawSize, 0.0);
}

SgMixture sg_from_json(const json& j, const std::string& ctx)
{
    StrictReader r(j, ctx);
    SgMixture mix;
    mix.weights = r.get<std::vector<double>>("weights");
    mix.concentrations = r.get<std::vector<double>>("concentrations");
    for (const json& m : r.child("means"))
        mix.means.push_back(vec3_from_json(m, ctx + ".means"));
    mix.efficiency = r.get_or<double>("efficiency", 1.0);
    r.finish();
    try {
        mix.validate();
    } catch (const std::exception& e) {
        throw InputError(ctx + ": " + e.what());
    }
    return mix;
}

json sg_to_json(const SgMixture& mix)
{
    json means = json::array();
    for (const Vec3& m : mix.means)
        means.push_back(vec3_to_json(m));
    return {{"weights", mix.weights},
            {"concentrations", mix.concentrations},
            {"means", means},
            {"efficiency", mix.efficiency}};
}

} // namespace

// ---- configuration JSON -------------------------------------------------------

json antenna_to_json(const AntennaSpec& a)
{
    json j;
    j["kind"] = a.kind == AntennaSpec::Kind::Isotropic ? "isotropic" : "sg";
    j["slant_rad"] = a.slant;
    j["orientation_rad"] = {a.yaw, a.pitch, a.roll};
    j["trainable"] = a.trainable;
    if (a.trainable) {
        j["components"] = a.components;
        j["init_concentration"] = a.init_concentration;
    } else if (a.kind == AntennaSpec::Kind::SgMixture) {
        j["mixture"] = sg_to_json(a.sg);
    }
    return j;
}

AntennaSpec antenna_from_json(const json& j, const std::string& context)
{
    StrictReader r(j, context);
    AntennaSpec a;
    const std::string kind = r.get_or<std::string>("kind", "isotropic");
    if (kind == "isotropic")
        a.kind = AntennaSpec::Kind::Isotropic;
    else if (kind == "sg")
        a.kind = AntennaSpec::Kind::SgMixture;
    else
        throw InputError(context + ".kind: expected \"isotropic\" or \"sg\", got \"" + kind + "\"");
    a.slant = r.get_or<double>("slant_rad", 0.0);
    if (r.has("orientation_rad")) {
        const auto o = r.get<std::vector<double>>("orientation_rad");
        if (o.size() != 3)
            throw InputError(context + ".orientation_rad: expected [yaw, pitch, roll]");
        a.yaw = o[0];
        a.pitch = o[1];
        a.roll = o[2];
    }
    a.trainable = r.get_or<bool>("trainable", false);
    a.components = r.get_or<std::size_t>("components", 3);
    a.init_concentration = r.get_or<double>("init_concentration", 1.0);
    if (r.has("mixture"))
        a.sg = sg_from_json(r.child("mixture"), context + ".mixture");
    r.finish();
    if (a.trainable && a.kind != AntennaSpec::Kind::SgMixture)
        throw InputError(context + ": only \"sg\" antennas can be trainable");
    if (a.trainable && (a.components == 0 || !(a.init_concentration > 0.0)))
        throw InputError(context + ": trainable antenna needs components >= 1 and init_concentration > 0");
    if (!a.trainable && a.kind == AntennaSpec::Kind::SgMixture && a.sg.size() == 0)
        throw InputError(context + ": fixed \"sg\" antenna needs a mixture");
    return a;
}

json model_config_to_json(const ModelConfig& c)
{
    return {{"model", to_string(c.materials)},
            {"embedding_dim", c.embedding_dim},
            {"encoding_levels", c.encoding_levels},
            {"hidden", c.hidden},
            {"pattern_heads", c.neural_pattern_heads},
            {"tx", antenna_to_json(c.tx)},
            {"rx", antenna_to_json(c.rx)},
            {"shared_pattern", c.shared_pattern},
            {"hg_normalization", to_string(c.hg_mode)}};
}

ModelConfig model_config_from_json(const json& j, const std::string& context)
{
    StrictReader r(j, context);
    ModelConfig c;
    try {
        c.materials = material_model_from_string(r.get_or<std::string>("model", "embedding"));
        c.hg_mode = hg_normalization_from_string(r.get_or<std::string>("hg_normalization", to_string(c.hg_mode)));
    } catch (const std::invalid_argument& e) {
        throw InputError(context + ": " + e.what());
    }
    c.embedding_dim = r.get_or<std::size_t>("embedding_dim", c.embedding_dim);
    c.encoding_levels = r.get_or<int>("encoding_levels", c.encoding_levels);
    c.hidden = r.get_or<std::vector<int>>("hidden", c.hidden);
    c.neural_pattern_heads = r.get_or<bool>("pattern_heads", false);
    if (r.has("tx"))
        c.tx = antenna_from_json(r.child("tx"), context + ".tx");
    if (r.has("rx"))
        c.rx = antenna_from_json(r.child("rx"), context + ".rx");
    c.shared_pattern = r.get_or<bool>("shared_pattern", false);
    r.finish();
    if (c.materials == MaterialModel::Fixed)
        throw InputError(context + ".model: expected \"embedding\" or \"neural\"");
    if (c.embedding_dim == 0 || c.encoding_levels < 1)
        throw InputError(context + ": embedding_dim and encoding_levels must be >= 1");
    for (int h : c.hidden)
        if (h < 1)
            throw InputError(context + ".hidden: layer widths must be >= 1");
    return c;
}

// ---- model ------------------------------------------------------------------------

Model::Model(const Scene& scene, ModelConfig config, std::uint64_t seed)
    : scene_(&scene), config_(std::move(config))
{
    if (config_.materials == MaterialModel::Fixed)
        throw ConfigError("model kind must be embedding or neural");
    std::mt19937_64 rng(seed);
    const auto materials = scene.materials();
    material_block_.assign(materials.size(), std::nullopt);
    pattern_block_.assign(materials.size(), std::nullopt);

    bool any_neural = false;
    for (std::size_t i = 0; i < materials.size(); ++i) {
        const MaterialSpec& m = materials[i];
        if (m.model == MaterialModel::Fixed)
            continue;
        if (config_.materials == MaterialModel::Embedding) {
            const auto init = embedding_init(config_.embedding_dim, rng);
            material_block_[i] = params_.add_block("material/" + m.name, init);
        } else {
            any_neural = true;
        }
    }
    if (any_neural) {
        mlp_.inputs = 6 * config_.encoding_levels;
        mlp_.hidden = config_.hidden;
        mlp_.outputs = kMaterialHeads + (config_.neural_pattern_heads ? kPatternHeads : 0);
        const auto init = mlp_init(mlp_, rng);
        neural_block_ = params_.add_block("neural/mlp", init);
    }

    std::optional<std::size_t> shared;
    for (std::size_t i = 0; i < materials.size(); ++i) {
        const MaterialSpec& m = materials[i];
        if (!m.scattering.trainable)
            continue;
        const bool from_heads = neural_block_ && m.model != MaterialModel::Fixed && config_.neural_pattern_heads;
        if (from_heads)
            continue;
        if (config_.shared_pattern) {
            if (!shared)
                shared = params_.add_block("pattern/shared", default_pattern_raw(m.scattering));
            pattern_block_[i] = shared;
        } else {
            pattern_block_[i] = params_.add_block("pattern/" + m.name, default_pattern_raw(m.scattering));
        }
    }

    auto antenna_block = [&](const AntennaSpec& a, const std::string& name) -> std::optional<std::size_t> {
        if (!a.trainable)
            return std::nullopt;
        return params_.add_block(name, sg_init_raw(a.components, a.init_concentration));
    };
    tx_block_ = antenna_block(config_.tx, "antenna/tx");
    rx_block_ = antenna_block(config_.rx, "antenna/rx");
}

template <class T>
class ModelSource final : public FieldSource<T> {
  public:
    ModelSource(const Model& model, std::span<const T> params)
        : model_(model), p_(params), cache_(model.scene().materials().size())
    {
        if (params.size() != model.params_.size())
            throw UsageError("parameter vector does not match the model");
    }

    MaterialValues<T> material(const Interaction& it) override
    {
        const std::uint32_t id = model_.scene().triangle(it.triangle_id).material_id;
        const MaterialSpec& spec = model_.scene().materials()[id];
        if (spec.model == MaterialModel::Fixed) {
            const MaterialParams& q = spec.params;
            return {T(q.eps_r), T(q.sigma), T(q.S), T(q.Kx)};
        }
        if (model_.material_block_[id]) {
            if (!cache_[id])
                cache_[id] = material_from_embedding<T>(block(*model_.material_block_[id]),
                                                        model_.config_.embedding_dim);
            return *cache_[id];
        }
        const auto& heads = neural_heads(it);
        return material_from_heads<T>(heads);
    }

    T scattering(const Interaction& it, const MaterialValues<T>&) override
    {
        const std::uint32_t id = model_.scene().triangle(it.triangle_id).material_id;
        const ScatteringSpec& s = model_.scene().materials()[id].scattering;
        const HgNormalization mode = model_.config_.hg_mode;
        if (s.trainable) {
            if (model_.pattern_block_[id])
                return hg_pattern<T>(block(*model_.pattern_block_[id]), it.k_in, it.k_out, it.normal, mode);
            const auto& heads = neural_heads(it);
            return hg_pattern<T>(std::span<const T>(heads).subspan(kMaterialHeads, kHgRawSize), it.k_in, it.k_out,
                                 it.normal, mode);
        }
        switch (s.kind) {
        case ScatteringSpec::Kind::Lambertian:
            return T(lambertian_pattern(it.k_out, it.normal));
        case ScatteringSpec::Kind::Backscatter:
            return backscatter_pattern<T>(it.k_in, it.k_out, it.normal, {s.alpha_r, s.alpha_s}, T(s.lobe_fraction));
        case ScatteringSpec::Kind::HemisphericalGaussian:
            return T(hg_pattern({s.weights, s.concentration_incident, s.concentration_specular}, it.k_in, it.k_out,
                                it.normal, mode));
        }
        throw UsageError("unknown scattering kind");
    }

    T tx_gain(const Vec3& d) override { return gain(model_.config_.tx, model_.tx_block_, d); }
    T rx_gain(const Vec3& d) override { return gain(model_.config_.rx, model_.rx_block_, d); }

  private:
    std::span<const T> block(std::size_t index) const
    {
        const auto& b = model_.params_.block(index);
        return p_.subspan(b.offset, b.size);
    }

    T gain(const AntennaSpec& a, const std::optional<std::size_t>& blk, const Vec3& d) const
    {
        if (blk)
            return sg_gain<T>(block(*blk), d);
        if (a.kind == AntennaSpec::Kind::SgMixture)
            return T(sg_gain(a.sg, d));
        return T(1.0);
    }

    // Material and pattern heads are read from one network evaluation per
    // interaction point.
    const std::vector<T>& neural_heads(const Interaction& it)
    {
        if (last_ != &it) {
            const Aabb& box = model_.scene().aabb();
            const auto enc = positional_encode(normalize_to_unit_cube(it.point, box), model_.config_.encoding_levels);
            heads_ = mlp_forward<T>(model_.mlp_, block(*model_.neural_block_), enc);
            last_ = &it;
        }
        return heads_;
    }

    const Model& model_;
    std::span<const T> p_;
    std::vector<std::optional<MaterialValues<T>>> cache_;
    const Interaction* last_ = nullptr;
    std::vector<T> heads_;
};

template <class T>
std::vector<Complex<T>> Model::coefficients(const PathSet& set, double frequency, std::span<const T> params,
                                            std::span<const std::array<double, 2>> chi) const
{
    if (!chi.empty() && chi.size() != set.paths.size())
        throw UsageError("phase list does not match the path count");
    ModelSource<T> source(*this, params);
    const AntennaPose tx = config_.tx.pose();
    const AntennaPose rx = config_.rx.pose();
        std::vector<Complex<T>> out;
    out.reserve(set.paths.size());
    for (std::size_t i = 0; i < set.paths.size(); ++i) {
        const std::array<double, 2> c = chi.empty() ? std::array<double, 2>{0.0, 0.0} : chi[i];
        out.push_back(path_coefficient<T>(set.paths[i], source, tx, rx, frequency, c));
    }
    return out;
}

template <class T>
std::vector<Complex<T>> Model::predict_cir(const PathSet& set, std::span<const std::complex<double>> kernel,
                                           const Waveform& wf, std::span<const T> params,
                                           std::span<const std::array<double, 2>> chi) const
{
    const auto a = coefficients<T>(set, wf.frequency, params, chi);
    return cir_from_kernel<T>(std::span<const Complex<T>>(a), kernel, wf.subcarriers);
}

template std::vector<Complex<double>> Model::coefficients(const PathSet&, double, std::span<const double>,
                                                          std::span<const std::array<double, 2>>) const;
template std::vector<Complex<ad::Var>> Model::coefficients(const PathSet&, double, std::span<const ad::Var>,
                                                           std::span<const std::array<double, 2>>) const;
template std::vector<Complex<double>> Model::predict_cir(const PathSet&, std::span<const std::complex<double>>, const Waveform&,
                                                         std::span<const double>,
                                                         std::span<const std::array<double, 2>>) const;
template std::vector<Complex<ad::Var>> Model::predict_cir(const PathSet&, std::span<const std::complex<double>>, const Waveform&,
                                                          std::span<const ad::Var>,
                                                          std::span<const std::array<double, 2>>) const;

std::vector<double> path_delays(const PathSet& set)
{
    std::vector<double> d;
    d.reserve(set.paths.size());
    for (const auto& p : set.paths)
        d.push_back(p.delay);
    return d;
}

MaterialParams Model::material(std::uint32_t material_id) const
{
    const MaterialSpec& spec = scene_->materials()[material_id];
    if (spec.model == MaterialModel::Fixed)
        return spec.params;
    if (material_block_[material_id])
        return material_params_from_embedding(params_.block_values(*material_block_[material_id]),
                                              config_.embedding_dim);
    MaterialParams acc{0.0, 0.0, 0.0, 0.0};
    std::size_t count = 0;
    for (const Triangle& t : scene_->triangles()) {
        if (t.material_id != material_id)
            continue;
        const Vec3 c = (scene_->vertex(t, 0) + scene_->vertex(t, 1) + scene_->vertex(t, 2)) / 3.0;
        const MaterialParams q = neural_material_query(mlp_, params_.block_values(*neural_block_), scene_->aabb(), c,
                                                       config_.encoding_levels);
        acc.eps_r += q.eps_r;
        acc.sigma += q.sigma;
        acc.S += q.S;
        acc.Kx += q.Kx;
        ++count;
    }
    if (count == 0)
        return MaterialParams{};
    const double inv = 1.0 / static_cast<double>(count);
    return {acc.eps_r * inv, acc.sigma * inv, acc.S * inv, acc.Kx * inv};
}

std::optional<SgMixture> Model::tx_mixture() const
{
    if (tx_block_)
        return sg_from_raw(params_.block_values(*tx_block_));
    if (config_.tx.kind == AntennaSpec::Kind::SgMixture)
        return config_.tx.sg;
    return std::nullopt;
}

double Model::tx_gain(const Vec3& d) const
{
    ModelSource<double> s(*this, params_.values());
    return s.tx_gain(d);
}

double Model::rx_gain(const Vec3& d) const
{
    ModelSource<double> s(*this, params_.values());
    return s.rx_gain(d);
}

std::optional<HgPattern> Model::pattern(std::uint32_t material_id) const
{
    if (!pattern_block_.at(material_id))
        return std::nullopt;
    return hg_from_raw(params_.block_values(*pattern_block_[material_id]));
}

double Model::scattering_value(std::uint32_t material_id, const Vec3& k_i, const Vec3& k_s, const Vec3& n) const
{
    const ScatteringSpec& s = scene_->materials()[material_id].scattering;
    if (s.trainable && pattern_block_[material_id])
        return hg_pattern<double>(params_.block_values(*pattern_block_[material_id]), k_i, k_s, n, config_.hg_mode);
    switch (s.kind) {
    case ScatteringSpec::Kind::Lambertian:
        return lambertian_pattern(k_s, n);
    case ScatteringSpec::Kind::Backscatter:
        return backscatter_pattern<double>(k_i, k_s, n, {s.alpha_r, s.alpha_s}, s.lobe_fraction);
    case ScatteringSpec::Kind::HemisphericalGaussian:
        return hg_pattern({s.weights, s.concentration_incident, s.concentration_specular}, k_i, k_s, n,
                          config_.hg_mode);
    }
    return 0.0;
}

// ---- checkpoints ------------------------------------------------------------------

std::string checkpoint_to_json(const Model& model, const OptimizerState& opt, const CheckpointExtras& extras)
{
    const ParameterStore& ps = model.parameters();
    if ((!opt.m.empty() && opt.m.size() != ps.size()) || (!opt.v.empty() && opt.v.size() != ps.size()))
        throw UsageError("optimizer state does not match the parameter vector");
    json j;
    j["format"] = kCheckpointFormat;
    j["version"] = kCheckpointVersion;
    j["model"] = to_string(model.config().materials);
    j["embedding_dim"] = model.config().embedding_dim;
    j["encoding_levels"] = model.config().encoding_levels;
    json layers = json::array();
    if (model.mlp_shape().inputs > 0) {
        layers.push_back(model.mlp_shape().inputs);
        for (int h : model.mlp_shape().hidden)
            layers.push_back(h);
        layers.push_back(model.mlp_shape().outputs);
    }
    j["layers"] = layers;
    j["hg_normalization"] = to_string(model.config().hg_mode);
    j["config"] = model_config_to_json(model.config());
    j["scene_hash"] = scene_hash(model.scene());
    j["seed"] = extras.seed;
    j["iterations"] = extras.iterations;
    j["alpha"] = extras.alpha;

    json params = json::object(), m = json::object(), v = json::object();
    for (const auto& b : ps.blocks()) {
        auto slice = [&](const std::vector<double>& x) {
            return x.empty() ? std::vector<double>(b.size, 0.0)
                             : std::vector<double>(x.begin() + b.offset, x.begin() + b.offset + b.size);
        };
        const auto vals = ps.block_values(&b - ps.blocks().data());
        params[b.name] = std::vector<double>(vals.begin(), vals.end());
        m[b.name] = slice(opt.m);
        v[b.name] = slice(opt.v);
    }
    j["parameters"] = params;
    j["optimizer"] = {{"kind", "adam"}, {"step", opt.step}, {"m", m}, {"v", v}};
    return j.dump(1) + "\n";
}

LoadedCheckpoint parse_checkpoint(const std::string& text, const std::string& origin)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(origin + ": " + e.what());
    }
    if (!j.is_object() || j.value("format", std::string()) != kCheckpointFormat)
        throw IncompatibleError(origin + ": not a raycal checkpoint");
    if (j.value("version", -1) != kCheckpointVersion)
        throw IncompatibleError(origin + ": unsupported checkpoint version");
    StrictReader r(j, origin);
    r.get<std::string>("format");
    r.get<int>("version");
    LoadedCheckpoint ck;
    ck.config = model_config_from_json(r.child("config"), origin + ".config");
    if (r.get<std::string>("model") != to_string(ck.config.materials) ||
        r.get<std::size_t>("embedding_dim") != ck.config.embedding_dim ||
        r.get<int>("encoding_levels") != ck.config.encoding_levels ||
        r.get<std::string>("hg_normalization") != to_string(ck.config.hg_mode))
        throw InputError(origin + ": header disagrees with the stored model config");
    r.child("layers");
    ck.scene_hash = r.get<std::string>("scene_hash");
    ck.extras.seed = r.get<std::uint64_t>("seed");
    ck.extras.iterations = r.get<std::uint64_t>("iterations");
    ck.extras.alpha = r.get<double>("alpha");
    ck.blocks = r.get<std::map<std::string, std::vector<double>>>("parameters");
    StrictReader o(r.child("optimizer"), origin + ".optimizer");
    if (o.get<std::string>("kind") != "adam")
        throw IncompatibleError(origin + ": unknown optimizer kind");
    ck.step = o.get<std::uint64_t>("step");
    ck.m = o.get<std::map<std::string, std::vector<double>>>("m");
    ck.v = o.get<std::map<std::string, std::vector<double>>>("v");
    o.finish();
    r.finish();
    return ck;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path)
{
    return parse_checkpoint(read_text_file(path, "checkpoint"), path.string());
}

namespace {

std::vector<double> gather(const ParameterStore& ps, const std::map<std::string, std::vector<double>>& blocks,
                           const std::string& what)
{
    if (blocks.size() != ps.blocks().size())
        throw IncompatibleError(what + ": block count differs from the model");
    std::vector<double> flat(ps.size());
    for (const auto& b : ps.blocks()) {
        const auto it = blocks.find(b.name);
        if (it == blocks.end())
            throw IncompatibleError(what + ": missing block '" + b.name + "'");
        if (it->second.size() != b.size)
            throw IncompatibleError(what + ": block '" + b.name + "' has " + std::to_string(it->second.size()) +
                                    " values, model expects " + std::to_string(b.size));
        std::copy(it->second.begin(), it->second.end(), flat.begin() + static_cast<std::ptrdiff_t>(b.offset));
    }
    return flat;
}

} // namespace

Model restore_model(const Scene& scene, const LoadedCheckpoint& ck)
{
    if (ck.scene_hash != scene_hash(scene))
        throw IncompatibleError("checkpoint was created for a different scene (hash " + ck.scene_hash + ", scene " +
                                scene_hash(scene) + ")");
    Model model(scene, ck.config, ck.extras.seed);
    const auto flat = gather(model.parameters(), ck.blocks, "checkpoint parameters");
    std::copy(flat.begin(), flat.end(), model.parameters().values().begin());
    return model;
}

OptimizerState restore_optimizer(const Model& model, const LoadedCheckpoint& ck)
{
    OptimizerState s;
    s.step = ck.step;
    s.m = gather(model.parameters(), ck.m, "optimizer state");
    s.v = gather(model.parameters(), ck.v, "optimizer state");
    return s;
}

} // namespace raycal
