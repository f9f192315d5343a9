// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/em_field.hpp"

#include <map>
#include <memory>
#include <mutex>

#include "raycal/quadrature.hpp"

namespace raycal {

void Waveform::validate() const
{
    if (!(frequency > 0.0))
        throw InputError("waveform: carrier frequency must be > 0");
    if (subcarriers <= 0 || subcarriers % 2 != 0)
        throw InputError("waveform: subcarrier count must be positive and even");
    if (!(spacing > 0.0))
        throw InputError("waveform: subcarrier spacing must be > 0");
}

Vec3 any_perpendicular(const Vec3& d)
{
    const Vec3 axis = std::fabs(d.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    return normalized(cross(d, axis));
}

Basis incidence_basis(const Vec3& k_in, const Vec3& normal)
{
    Vec3 c = cross(k_in, normal);
    const double len = norm(c);
    const Vec3 perp = len > 1e-12 ? c / len : any_perpendicular(k_in);
    return {perp, cross(perp, k_in)};
}

Basis outgoing_basis(const Vec3& k_in, const Vec3& k_out, const Vec3& normal)
{
    const Basis in = incidence_basis(k_in, normal);
    return {in.p, cross(in.p, k_out)};
}

Basis spherical_basis(const Vec3& d)
{
    const auto ang = to_spherical(d);
    return {theta_hat(ang[0], ang[1]), phi_hat(ang[0], ang[1])};
}

std::array<double, 4> basis_transform(const Vec3& direction, const Basis& from, const Basis& to)
{
    const double tol = Tolerances::unit_norm * 10.0;
    for (const Basis* b : {&from, &to}) {
        if (std::fabs(norm(b->p) - 1.0) > tol || std::fabs(norm(b->q) - 1.0) > tol ||
            std::fabs(dot(b->p, b->q)) > tol)
            throw UsageError("basis_transform: basis is not orthonormal");
        if (std::fabs(dot(b->p, direction)) > tol || std::fabs(dot(b->q, direction)) > tol)
            throw UsageError("basis_transform: basis is not transverse to the propagation direction");
    }
    return {dot(to.p, from.p), dot(to.p, from.q), dot(to.q, from.p), dot(to.q, from.q)};
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kLobeGrid = 1024; // intervals in cos(theta_i)

double lobe_integral_exact(bool specular_lobe, int alpha, double cos_i)
{
    static const QuadratureRule th = gauss_legendre(64, 0.0, 0.5 * kPi);
    static const QuadratureRule ph = gauss_legendre(64, 0.0, 2.0 * kPi);
    const double c = std::clamp(cos_i, 0.0, 1.0);
    const double s = std::sqrt(1.0 - c * c);
    // Surface normal +z; incident direction in the x-z plane heading down.
    const Vec3 axis = specular_lobe ? Vec3{s, 0.0, c} : Vec3{s, 0.0, -c};
    double acc = 0.0;
    for (std::size_t i = 0; i < th.nodes.size(); ++i) {
        const double st = std::sin(th.nodes[i]), ct = std::cos(th.nodes[i]);
        double row = 0.0;
        for (std::size_t k = 0; k < ph.nodes.size(); ++k) {
            const Vec3 ks{st * std::cos(ph.nodes[k]), st * std::sin(ph.nodes[k]), ct};
            row += ph.weights[k] * std::pow(0.5 * (1.0 + dot(axis, ks)), alpha);
        }
        acc += th.weights[i] * st * row;
    }
    return acc;
}

struct LobeTable {
    std::vector<double> values; // kLobeGrid + 1 samples on cos_i in [0, 1]
};

std::mutex g_lobe_mutex;
std::map<std::pair<bool, int>, std::shared_ptr<const LobeTable>> g_lobe_tables;

std::shared_ptr<const LobeTable> lobe_table(bool specular_lobe, int alpha)
{
    std::lock_guard<std::mutex> lock(g_lobe_mutex);
    auto& slot = g_lobe_tables[{specular_lobe, alpha}];
    if (!slot) {
        auto t = std::make_shared<LobeTable>();
        t->values.resize(kLobeGrid + 1);
        for (int i = 0; i <= kLobeGrid; ++i)
            t->values[i] = lobe_integral_exact(specular_lobe, alpha, static_cast<double>(i) / kLobeGrid);
        slot = std::move(t);
    }
    return slot;
}

} // namespace

double backscatter_lobe_integral(bool specular_lobe, int alpha, double cos_i, bool exact)
{
    if (alpha < 1)
        throw UsageError("backscatter lobe exponent must be >= 1");
    if (exact)
        return lobe_integral_exact(specular_lobe, alpha, cos_i);
    const auto table = lobe_table(specular_lobe, alpha);
    const double x = std::clamp(cos_i, 0.0, 1.0) * kLobeGrid;
    int i = std::min(static_cast<int>(x), kLobeGrid - 1);
    const double t = x - i;
    const auto& v = table->values;
    // Catmull-Rom with one-sided ends.
    const double p1 = v[i], p2 = v[i + 1];
    const double p0 = i > 0 ? v[i - 1] : 2.0 * p1 - p2;
    const double p3 = i + 2 <= kLobeGrid ? v[i + 2] : 2.0 * p2 - p1;
    return p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
Complex<T> combine(std::span<const T> re_im, std::span<const double> cre, std::span<const double> cim)
{
    return {ad::dot(re_im, cre), ad::dot(re_im, cim)};
}

// Stacks [re..., im...] so each output component is one dot product.
template <class T>
std::vector<T> stack(std::span<const Complex<T>> v)
{
    std::vector<T> out;
    out.reserve(2 * v.size());
    for (const auto& c : v)
        out.push_back(c.re);
    for (const auto& c : v)
        out.push_back(c.im);
    return out;
}

// out_k = sum_i v_i * w_ik with w given column by column.
template <class T, class Weight>
std::vector<Complex<T>> linear_map(std::span<const Complex<T>> v, int outputs, Weight weight)
{
    const std::size_t m = v.size();
    const std::vector<T> x = stack(v);
    std::vector<double> cre(2 * m), cim(2 * m);
    std::vector<Complex<T>> out(outputs);
    for (int k = 0; k < outputs; ++k) {
        for (std::size_t i = 0; i < m; ++i) {
            const std::complex<double> w = weight(i, k);
            cre[i] = w.real();
            cre[m + i] = -w.imag();
            cim[i] = w.imag();
            cim[m + i] = w.real();
        }
        out[k] = m == 0 ? Complex<T>(T(0.0), T(0.0))
                        : combine<T>(std::span<const T>(x), std::span<const double>(cre), std::span<const double>(cim));
    }
    return out;
}

} // namespace

template <class T>
std::vector<Complex<T>> cfr(std::span<const Complex<T>> a, std::span<const double> delays, const Waveform& wf)
{
    if (a.size() != delays.size())
        throw UsageError("cfr: coefficient/delay count mismatch");
    const int n = wf.subcarriers;
    return linear_map<T>(a, n, [&](std::size_t i, int k) {
        const double f = wf.subcarrier_frequency(k - n / 2);
        return expj(-2.0 * kPi * f * delays[i]);
    });
}

template <class T>
std::vector<Complex<T>> cir(std::span<const Complex<T>> H)
{
    const int n = static_cast<int>(H.size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    return linear_map<T>(H, n, [&](std::size_t i, int k) {
        const long long prod = static_cast<long long>(static_cast<int>(i) - n / 2) * (k - n / 2);
        // Reduce the integer phase modulo N before scaling to keep it exact.
        const long long r = ((prod % n) + n) % n;
        return expj(2.0 * kPi * static_cast<double>(r) / n) * scale;
    });
}

std::vector<std::complex<double>> tap_kernel(std::span<const double> delays, const Waveform& wf)
{
    const int n = wf.subcarriers;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<std::complex<double>> g(delays.size() * n);
    for (std::size_t i = 0; i < delays.size(); ++i) {
        const double tau = delays[i];
        const std::complex<double> carrier = expj(-2.0 * kPi * wf.frequency * tau);
        for (int l = -n / 2; l < n / 2; ++l) {
            const double x = 2.0 * kPi * (static_cast<double>(l) / n - wf.spacing * tau);
            const double den = std::sin(0.5 * x);
            std::complex<double> sum;
            if (std::fabs(den) > 1e-6) {
                sum = expj(-0.5 * x) * (std::sin(0.5 * n * x) / den);
            } else {
                for (int k = -n / 2; k < n / 2; ++k)
                    sum += expj(k * x);
            }
            g[i * n + (l + n / 2)] = carrier * sum * scale;
        }
    }
    return g;
}

template <class T>
std::vector<Complex<T>> cir_from_kernel(std::span<const Complex<T>> a, std::span<const std::complex<double>> kernel,
                                        int subcarriers)
{
    if (kernel.size() != a.size() * static_cast<std::size_t>(subcarriers))
        throw UsageError("cir_from_kernel: kernel shape mismatch");
    return linear_map<T>(a, subcarriers, [&](std::size_t i, int k) { return kernel[i * subcarriers + k]; });
}

template std::vector<Complex<double>> cfr(std::span<const Complex<double>>, std::span<const double>, const Waveform&);
template std::vector<Complex<ad::Var>> cfr(std::span<const Complex<ad::Var>>, std::span<const double>,
                                           const Waveform&);
template std::vector<Complex<double>> cir(std::span<const Complex<double>>);
template std::vector<Complex<ad::Var>> cir(std::span<const Complex<ad::Var>>);
template std::vector<Complex<double>> cir_from_kernel(std::span<const Complex<double>>,
                                                      std::span<const std::complex<double>>, int);
template std::vector<Complex<ad::Var>> cir_from_kernel(std::span<const Complex<ad::Var>>,
                                                       std::span<const std::complex<double>>, int);

std::vector<std::complex<double>> to_std(std::span<const Complex<double>> v)
{
    std::vector<std::complex<double>> out;
    out.reserve(v.size());
    for (const auto& c : v)
        out.push_back(c.value());
    return out;
}

} // namespace raycal
