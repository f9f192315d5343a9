// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/trainable.hpp"

#include "raycal/errors.hpp"
#include "raycal/quadrature.hpp"

namespace raycal {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

} // namespace

void SgMixture::validate() const
{
    const std::size_t m = weights.size();
    if (m == 0 || concentrations.size() != m || means.size() != m)
        throw InputError("SG antenna: weights, concentrations and means must have the same nonzero length");
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (!(weights[i] > 0.0))
            throw InputError("SG antenna: weights must be > 0");
        if (!(concentrations[i] > 0.0))
            throw InputError("SG antenna: concentrations must be > 0");
        if (!(norm(means[i]) > 0.0))
            throw InputError("SG antenna: mean directions must be nonzero");
        sum += weights[i];
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw InputError("SG antenna: weights must sum to 1");
    if (!(efficiency > 0.0 && efficiency < 1.0))
        throw InputError("SG antenna: efficiency must lie in (0, 1)");
}

std::vector<double> sg_to_raw(const SgMixture& mix)
{
    mix.validate();
    const std::size_t m = mix.size();
    std::vector<double> raw(sg_raw_size(m));
    for (std::size_t i = 0; i < m; ++i) {
        raw[i] = std::log(mix.weights[i]);
        raw[m + i] = std::log(mix.concentrations[i]);
        const Vec3 u = normalized(mix.means[i]);
        raw[2 * m + 3 * i] = u.x;
        raw[2 * m + 3 * i + 1] = u.y;
        raw[2 * m + 3 * i + 2] = u.z;
    }
    raw[5 * m] = logit(mix.efficiency);
    return raw;
}

SgMixture sg_from_raw(std::span<const double> raw)
{
    if (raw.size() < 6 || (raw.size() - 1) % 5 != 0)
        throw UsageError("SG antenna: malformed raw parameter block");
    const std::size_t m = (raw.size() - 1) / 5;
    SgMixture mix;
    mix.weights = softmax<double>(raw.subspan(0, m));
    for (std::size_t i = 0; i < m; ++i) {
        mix.concentrations.push_back(std::exp(raw[m + i]));
        mix.means.push_back(normalized(Vec3{raw[2 * m + 3 * i], raw[2 * m + 3 * i + 1], raw[2 * m + 3 * i + 2]}));
    }
    mix.efficiency = ad::sigmoid(raw[5 * m]);
    return mix;
}

std::vector<double> sg_init_raw(std::size_t m, double lambda0)
{
    std::vector<double> raw(sg_raw_size(m), 0.0);
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < m; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / static_cast<double>(m);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        raw[m + i] = std::log(lambda0);
        raw[2 * m + 3 * i] = r * std::cos(golden * i);
        raw[2 * m + 3 * i + 1] = r * std::sin(golden * i);
        raw[2 * m + 3 * i + 2] = z;
    }
    return raw;
}

double sg_gain(const SgMixture& mix, const Vec3& r)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < mix.size(); ++i)
        acc += mix.weights[i] * sg_lobe(mix.concentrations[i], dot(normalized(mix.means[i]), r));
    return 4.0 * kPi * mix.efficiency * acc;
}

double sphere_integral(const std::function<double(const Vec3&)>& g, int n_theta, int n_phi)
{
    const QuadratureRule th = gauss_legendre(n_theta, 0.0, kPi);
    const double dphi = 2.0 * kPi / n_phi;
    double acc = 0.0;
    for (int i = 0; i < n_theta; ++i) {
        double row = 0.0;
        for (int k = 0; k < n_phi; ++k)
            row += g(spherical_unit(th.nodes[i], k * dphi));
        acc += th.weights[i] * std::sin(th.nodes[i]) * row * dphi;
    }
    return acc;
}

// ---------------------------------------------------------------------------

std::string to_string(HgNormalization m) { return m == HgNormalization::Printed ? "printed" : "axis"; }

HgNormalization hg_normalization_from_string(const std::string& s)
{
    if (s == "printed") return HgNormalization::Printed;
    if (s == "axis") return HgNormalization::AxisElevation;
    throw InputError("unknown HG normalization '" + s + "' (expected printed|axis)");
}

std::vector<double> hg_to_raw(const HgPattern& p)
{
    for (double w : p.weights)
        if (!(w > 0.0))
            throw InputError("HG pattern: weights must be > 0 to be represented by logits");
    if (!(p.lambda_incident > 0.0 && p.lambda_specular > 0.0))
        throw InputError("HG pattern: concentrations must be > 0 to be represented in log domain");
    return {std::log(p.weights[0]), std::log(p.weights[1]), std::log(p.weights[2]), std::log(p.lambda_incident),
            std::log(p.lambda_specular)};
}

HgPattern hg_from_raw(std::span<const double> raw)
{
    if (raw.size() != kHgRawSize)
        throw UsageError("HG pattern: malformed raw parameter block");
    HgPattern p;
    const auto w = softmax<double>(raw.subspan(0, 3));
    p.weights = {w[0], w[1], w[2]};
    p.lambda_incident = std::exp(raw[3]);
    p.lambda_specular = std::exp(raw[4]);
    return p;
}

double hg_normalization(double lambda, double cos_beta)
{
    if (!(lambda >= 0.0))
        throw InputError("HG normalization: concentration must be >= 0");
    return hg_normalization_scaled(lambda, cos_beta) * std::exp(lambda);
}

double hg_pattern(const HgPattern& p, const Vec3& k_i, const Vec3& k_s, const Vec3& n, HgNormalization mode)
{
    // Built directly so zero weights are allowed.
    const bool printed = mode == HgNormalization::Printed;
    const Vec3 k_r = reflect(k_i, n);
    const Vec3 axis2 = printed ? k_i : -k_i;
    const double c2 = dot(k_s, axis2), c3 = dot(k_s, k_r);
    const double b2 = printed ? c2 : dot(axis2, n);
    const double b3 = printed ? c3 : dot(k_r, n);
    const double lobe2 = std::exp(p.lambda_incident * (c2 - 1.0)) / hg_normalization_scaled(p.lambda_incident, b2);
    const double lobe3 = std::exp(p.lambda_specular * (c3 - 1.0)) / hg_normalization_scaled(p.lambda_specular, b3);
    return p.weights[0] * std::max(0.0, dot(k_s, n)) / kPi + p.weights[1] * lobe2 + p.weights[2] * lobe3;
}

double hemisphere_integral(const std::function<double(const Vec3&)>& f, const Vec3& n, int n_theta, int n_phi)
{
    const Vec3 u = any_perpendicular(n);
    const Vec3 v = cross(n, u);
    const QuadratureRule th = gauss_legendre(n_theta, 0.0, 0.5 * kPi);
    const double dphi = 2.0 * kPi / n_phi;
    double acc = 0.0;
    for (int i = 0; i < n_theta; ++i) {
        const double st = std::sin(th.nodes[i]), ct = std::cos(th.nodes[i]);
        double row = 0.0;
        for (int k = 0; k < n_phi; ++k) {
            const double ph = k * dphi;
            row += f(st * std::cos(ph) * u + st * std::sin(ph) * v + ct * n);
        }
        acc += th.weights[i] * st * row * dphi;
    }
    return acc;
}

// ---------------------------------------------------------------------------

std::vector<double> embedding_init(std::size_t dim, std::mt19937_64& rng)
{
    const double bound = 0.5 / std::sqrt(static_cast<double>(dim));
    std::vector<double> raw(embedding_raw_size(dim));
    for (double& x : raw)
        x = (2.0 * uniform01(rng) - 1.0) * bound;
    return raw;
}

MaterialParams material_params_from_embedding(std::span<const double> raw, std::size_t dim)
{
    const auto m = material_from_embedding<double>(raw, dim);
    return {m.eps_r, m.sigma, m.S, m.Kx};
}

std::vector<double> positional_encode(const Vec3& p, int levels)
{
    std::vector<double> out;
    out.reserve(6 * static_cast<std::size_t>(levels));
    for (int c = 0; c < 3; ++c) {
        double freq = 2.0 * kPi;
        for (int l = 1; l <= levels; ++l, freq *= 2.0) {
            out.push_back(std::sin(freq * p[c]));
            out.push_back(std::cos(freq * p[c]));
        }
    }
    return out;
}

std::size_t MlpShape::raw_size() const
{
    std::size_t n = 0;
    int in = inputs;
    for (int h : hidden) {
        n += static_cast<std::size_t>(h) * (in + 1);
        in = h;
    }
    return n + static_cast<std::size_t>(outputs) * (in + 1);
}

std::vector<double> mlp_init(const MlpShape& shape, std::mt19937_64& rng)
{
    std::vector<double> raw;
    raw.reserve(shape.raw_size());
    int in = shape.inputs;
    auto layer = [&](int out) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (int k = 0; k < out * in; ++k)
            raw.push_back((2.0 * uniform01(rng) - 1.0) * bound);
        raw.insert(raw.end(), static_cast<std::size_t>(out), 0.0);
        in = out;
    };
    for (int h : shape.hidden)
        layer(h);
    layer(shape.outputs);
    return raw;
}

namespace {

std::vector<double> dense(std::span<const double> w, std::span<const double> b, std::span<const double> x, bool relu)
{
    const std::size_t in = x.size(), out = b.size();
    std::vector<double> y(out);
    for (std::size_t j = 0; j < out; ++j) {
        double acc = b[j];
        const double* row = w.data() + j * in;
        for (std::size_t k = 0; k < in; ++k)
            acc += row[k] * x[k];
        y[j] = relu && acc < 0.0 ? 0.0 : acc;
    }
    return y;
}

std::vector<ad::Var> dense(std::span<const ad::Var> w, std::span<const ad::Var> b, std::span<const ad::Var> x,
                           bool relu)
{
    const std::size_t in = x.size(), out = b.size();
    ad::Tape* tape = w.front().tape;
    if (tape == nullptr)
        throw UsageError("mlp_forward: weights are not bound to a tape");
    std::vector<ad::Var> y(out);
    for (std::size_t j = 0; j < out; ++j)
        y[j] = tape->affine(w.subspan(j * in, in), x, b[j]);
    if (relu)
        for (auto& v : y)
            v = ad::relu(v);
    return y;
}

} // namespace

template <class T>
std::vector<T> mlp_forward(const MlpShape& shape, std::span<const T> raw, std::span<const double> input)
{
    if (raw.size() != shape.raw_size())
        throw UsageError("mlp_forward: parameter count does not match the layer shape");
    if (static_cast<int>(input.size()) != shape.inputs)
        throw UsageError("mlp_forward: input width mismatch");
    std::vector<T> x(input.begin(), input.end());
    std::size_t off = 0;
    int in = shape.inputs;
    const std::size_t layers = shape.hidden.size() + 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const int out = l < shape.hidden.size() ? shape.hidden[l] : shape.outputs;
        const auto w = raw.subspan(off, static_cast<std::size_t>(out) * in);
        off += w.size();
        const auto b = raw.subspan(off, out);
        off += out;
        x = dense(w, b, std::span<const T>(x), l + 1 < layers);
        in = out;
    }
    return x;
}

template std::vector<double> mlp_forward(const MlpShape&, std::span<const double>, std::span<const double>);
template std::vector<ad::Var> mlp_forward(const MlpShape&, std::span<const ad::Var>, std::span<const double>);

Vec3 normalize_to_unit_cube(const Vec3& p, const Aabb& box)
{
    if (box.degenerate || !(box.edge > 0.0))
        throw ConfigError("neural materials need a non-degenerate scene bounding box");
    return (p - box.center) / box.edge;
}

MaterialParams neural_material_query(const MlpShape& shape, std::span<const double> raw, const Aabb& box,
                                     const Vec3& p, int levels)
{
    const auto enc = positional_encode(normalize_to_unit_cube(p, box), levels);
    const auto out = mlp_forward<double>(shape, raw, enc);
    const auto m = material_from_heads<double>(out);
    return {m.eps_r, m.sigma, m.S, m.Kx};
}

} // namespace raycal
