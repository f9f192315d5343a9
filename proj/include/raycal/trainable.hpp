// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------
//
// Trainable parametrizations. Each maps a span of raw, unconstrained
// scalars to constrained physical quantities (softmax weights, exp for
// positivity, sigmoid for [0, 1]).

#pragma once

#include <array>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <span>
#include <vector>

#include "raycal/autodiff.hpp"
#include "raycal/em_field.hpp"
#include "raycal/geometry.hpp"
#include "raycal/material.hpp"

namespace raycal {

// Below this concentration the normalizers switch to series expansions.
inline constexpr double kSmallConcentration = 1e-4;

template <class T>
std::vector<T> softmax(std::span<const T> logits)
{
    double shift = -std::numeric_limits<double>::infinity();
    for (const T& l : logits)
        shift = std::max(shift, ad::value_of(l));
    std::vector<T> e;
    e.reserve(logits.size());
    T sum(0.0);
    for (const T& l : logits) {
        e.push_back(ad::exp(l - shift));
        sum = sum + e.back();
    }
    for (T& v : e)
        v = v / sum;
    return e;
}

// ---- spherical-Gaussian antenna gain ---------------------------------------

struct SgMixture {
    std::vector<double> weights;        // sum to 1
    std::vector<double> concentrations; // > 0
    std::vector<Vec3> means;            // unit
    double efficiency = 1.0;            // eta_rad

    std::size_t size() const { return weights.size(); }
    void validate() const;
};

// Raw layout: [logit_1..M, log_lambda_1..M, mu_1 (3) .. mu_M (3), logit(eta)].
inline std::size_t sg_raw_size(std::size_t m) { return 5 * m + 1; }
std::vector<double> sg_to_raw(const SgMixture& mix);
SgMixture sg_from_raw(std::span<const double> raw);
// Fibonacci-lattice means, zero logits, concentration `lambda0`, eta logit 0.
std::vector<double> sg_init_raw(std::size_t m, double lambda0);

// lambda e^{lambda (c - 1)} / (2 pi (1 - e^{-2 lambda})), i.e. e^{lambda c}/a
// with a the sphere normalizer, evaluated without overflow.
template <class T>
T sg_lobe(const T& lambda, const T& cos_angle)
{
    if (ad::value_of(lambda) < kSmallConcentration) {
        const T ratio = T(0.5) + lambda * 0.5 + lambda * lambda * (1.0 / 6.0); // lambda / (1 - e^{-2 lambda})
        return ad::exp(lambda * (cos_angle - 1.0)) * ratio * (1.0 / (2.0 * kPi));
    }
    return lambda * ad::exp(lambda * (cos_angle - 1.0)) / ((T(1.0) - ad::exp(lambda * -2.0)) * (2.0 * kPi));
}

// G = 4 pi eta sum_i w_i e^{lambda_i mu_i . r} / a_i.
template <class T>
T sg_gain(std::span<const T> raw, const Vec3& r)
{
    const std::size_t m = (raw.size() - 1) / 5;
    const auto w = softmax<T>(raw.subspan(0, m));
    T acc(0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const T lambda = ad::exp(raw[m + i]);
        const T mx = raw[2 * m + 3 * i], my = raw[2 * m + 3 * i + 1], mz = raw[2 * m + 3 * i + 2];
        const T len = ad::sqrt(mx * mx + my * my + mz * mz);
        const T c = (mx * r.x + my * r.y + mz * r.z) / len;
        acc = acc + w[i] * sg_lobe(lambda, c);
    }
    return acc * ad::sigmoid(raw[5 * m]) * (4.0 * kPi);
}

double sg_gain(const SgMixture& mix, const Vec3& r);

// Integral of G over the sphere: Gauss-Legendre in theta x trapezoid in phi.
double sphere_integral(const std::function<double(const Vec3&)>& g, int n_theta = 256, int n_phi = 512);

// ---- hemispherical-Gaussian scattering pattern -----------------------------

struct HgPattern {
    std::array<double, 3> weights{1.0, 0.0, 0.0}; // diffuse, incident lobe, specular lobe
    double lambda_incident = 1.0;
    double lambda_specular = 1.0;
};

// Printed: incident lobe about the propagation direction k_i, cos(beta) taken
// from the scattered direction. AxisElevation: incident lobe about -k_i
// (toward the source), cos(beta) = elevation of each lobe axis, which keeps
// both axes above the horizon where the normalizer approximation holds.
enum class HgNormalization { Printed, AxisElevation };

std::string to_string(HgNormalization m);
HgNormalization hg_normalization_from_string(const std::string& s);

// Raw layout: [logit_1, logit_2, logit_3, log_lambda_2, log_lambda_3].
inline constexpr std::size_t kHgRawSize = 5;
std::vector<double> hg_to_raw(const HgPattern& p);
HgPattern hg_from_raw(std::span<const double> raw);

template <class T>
T hg_t(const T& lambda)
{
    return ad::sqrt(lambda) * (lambda * lambda * 1.6988 + lambda * 10.8438) /
           (lambda * lambda + lambda * 6.2201 + T(10.2415));
}

template <class T>
T hg_s(const T& t, double c)
{
    if (ad::value_of(t) < 1e-6) {
        // First-order expansion around t = 0.
        return (T(1.0) - t * (0.5 * (1.0 + c))) * (1.0 + c) / ((T(1.0) - t * 0.5) * (T(2.0) - t * c));
    }
    const T num = T(1.0) - ad::exp(t * -(1.0 + c));
    const T den = (T(1.0) - ad::exp(-t)) * (T(1.0) + ad::exp(t * -c));
    return num / den;
}

// a * e^{-lambda}, where a approximates the hemispherical integral of
// e^{lambda cos(gamma)} for a lobe axis at cos(beta) above the horizon:
// a = (2 pi / lambda) (e^lambda - 1) (e^{-lambda} + s (1 - e^{-lambda})).
template <class T>
T hg_normalization_scaled(const T& lambda, double cos_beta)
{
    const T e = ad::exp(-lambda);
    T ratio; // (1 - e^{-lambda}) / lambda
    if (ad::value_of(lambda) < kSmallConcentration)
        ratio = T(1.0) - lambda * 0.5 + lambda * lambda * (1.0 / 6.0);
    else
        ratio = (T(1.0) - e) / lambda;
    const T s = hg_s(hg_t(lambda), cos_beta);
    return ratio * (e + s * (T(1.0) - e)) * (2.0 * kPi);
}

double hg_normalization(double lambda, double cos_beta);

template <class T>
T hg_pattern(std::span<const T> raw, const Vec3& k_i, const Vec3& k_s, const Vec3& n, HgNormalization mode)
{
    const auto w = softmax<T>(raw.subspan(0, 3));
    const T l2 = ad::exp(raw[3]);
    const T l3 = ad::exp(raw[4]);
    const bool printed = mode == HgNormalization::Printed;
    const Vec3 k_r = reflect(k_i, n);
    const Vec3 axis2 = printed ? k_i : -k_i;
    const double c2 = dot(k_s, axis2);
    const double c3 = dot(k_s, k_r);
    const double b2 = printed ? c2 : dot(axis2, n);
    const double b3 = printed ? c3 : dot(k_r, n);
    const T lobe2 = ad::exp(l2 * (c2 - 1.0)) / hg_normalization_scaled(l2, b2);
    const T lobe3 = ad::exp(l3 * (c3 - 1.0)) / hg_normalization_scaled(l3, b3);
    return w[0] * (std::max(0.0, dot(k_s, n)) / kPi) + w[1] * lobe2 + w[2] * lobe3;
}

double hg_pattern(const HgPattern& p, const Vec3& k_i, const Vec3& k_s, const Vec3& n, HgNormalization mode);

// Integral of f over the hemisphere around n (no cosine weight).
double hemisphere_integral(const std::function<double(const Vec3&)>& f, const Vec3& n, int n_theta = 128,
                           int n_phi = 256);

// ---- material embedding ----------------------------------------------------

// Raw layout: [v (L), w1 (L), w2 (L), w3 (L), w4 (L)].
inline std::size_t embedding_raw_size(std::size_t dim) { return 5 * dim; }
std::vector<double> embedding_init(std::size_t dim, std::mt19937_64& rng);

template <class T>
MaterialValues<T> material_from_embedding(std::span<const T> raw, std::size_t dim)
{
    const auto v = raw.subspan(0, dim);
    auto proj = [&](std::size_t k) { return ad::dot(v, raw.subspan(k * dim, dim)); };
    MaterialValues<T> m;
    m.sigma = ad::exp(proj(1));
    m.eps_r = T(1.0) + ad::exp(proj(2));
    m.S = ad::sigmoid(proj(3));
    m.Kx = ad::sigmoid(proj(4));
    return m;
}

MaterialParams material_params_from_embedding(std::span<const double> raw, std::size_t dim);

// ---- neural materials --------------------------------------------------------

// Per coordinate [sin(2^1 pi p), cos(2^1 pi p), ..., sin(2^L pi p), cos(2^L pi p)],
// coordinates concatenated: 6 L values.
std::vector<double> positional_encode(const Vec3& p, int levels);

struct MlpShape {
    int inputs = 0;
    std::vector<int> hidden;
    int outputs = 0;

    std::size_t raw_size() const;
};

// Weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0. Layer layout:
// row-major weights (out x in) followed by biases.
std::vector<double> mlp_init(const MlpShape& shape, std::mt19937_64& rng);

template <class T>
std::vector<T> mlp_forward(const MlpShape& shape, std::span<const T> raw, std::span<const double> input);

extern template std::vector<double> mlp_forward(const MlpShape&, std::span<const double>, std::span<const double>);
extern template std::vector<ad::Var> mlp_forward(const MlpShape&, std::span<const ad::Var>, std::span<const double>);

// Output heads: [log sigma, log(eps_r - 1), logit S, logit Kx] and, when
// present, five HG raw values.
inline constexpr int kMaterialHeads = 4;
inline constexpr int kPatternHeads = static_cast<int>(kHgRawSize);

template <class T>
MaterialValues<T> material_from_heads(std::span<const T> out)
{
    MaterialValues<T> m;
    m.sigma = ad::exp(out[0]);
    m.eps_r = T(1.0) + ad::exp(out[1]);
    m.S = ad::sigmoid(out[2]);
    m.Kx = ad::sigmoid(out[3]);
    return m;
}

// (p - center) / edge. Throws ConfigError when edge is 0.
Vec3 normalize_to_unit_cube(const Vec3& p, const Aabb& box);

// Weights + heads for a single point. Doubles only.
MaterialParams neural_material_query(const MlpShape& shape, std::span<const double> raw, const Aabb& box,
                                     const Vec3& p, int levels);

} // namespace raycal
