// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------
//
// Field computation along geometric paths. Everything that depends on a
// trainable quantity is templated on the scalar type T (double or ad::Var);
// geometry stays in plain doubles.
//
// Jones vectors are stored together with the basis they are expressed in.
// Transfers between consecutive interactions go through basis_transform.

#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "raycal/complex.hpp"
#include "raycal/constants.hpp"
#include "raycal/errors.hpp"
#include "raycal/geometry.hpp"
#include "raycal/path_tracer.hpp"

namespace raycal {

struct Waveform {
    double frequency = 3.438e9; // carrier, Hz
    int subcarriers = 128;      // N, even
    double spacing = 390625.0;  // Hz

    double bandwidth() const { return spacing * subcarriers; }
    double wavelength() const { return kSpeedOfLight / frequency; }
    // Frequency of subcarrier n in [-N/2, N/2).
    double subcarrier_frequency(int n) const { return frequency + n * spacing; }
    // Throws InputError when N is odd or non-positive or a rate is not positive.
    void validate() const;
};

// Orthonormal transverse basis (p, q) for a propagation direction.
struct Basis {
    Vec3 p;
    Vec3 q;
};

template <class T>
struct Jones {
    Complex<T> p;
    Complex<T> q;
};

template <class T>
struct MaterialValues {
    T eps_r{1.0};
    T sigma{0.0};
    T S{0.0};
    T Kx{0.0};
};

// D_ab = to_a . from_b. Both bases must be orthonormal and transverse to
// `direction` within Tolerances::unit_norm, otherwise UsageError.
std::array<double, 4> basis_transform(const Vec3& direction, const Basis& from, const Basis& to);

// Incidence basis (perpendicular, parallel) for k_in at a surface with
// normal n, and the matching outgoing basis for k_out.
Basis incidence_basis(const Vec3& k_in, const Vec3& normal);
Basis outgoing_basis(const Vec3& k_in, const Vec3& k_out, const Vec3& normal);
// (theta_hat, phi_hat) of direction d.
Basis spherical_basis(const Vec3& d);
// A unit vector orthogonal to d.
Vec3 any_perpendicular(const Vec3& d);

// eta = eps_r - j sigma / (eps0 * 2 pi f)
template <class T>
Complex<T> complex_permittivity(const T& eps_r, const T& sigma, double frequency)
{
    const double k = 1.0 / (kVacuumPermittivity * 2.0 * kPi * frequency);
    return {eps_r, -(sigma * k)};
}

template <class T>
struct FresnelPair {
    Complex<T> perp;
    Complex<T> par;
};

// Principal square-root branch. cos_i in (0, 1].
template <class T>
FresnelPair<T> fresnel(const Complex<T>& eta, double cos_i)
{
    const double sin2 = 1.0 - cos_i * cos_i;
    const Complex<T> root = sqrt(eta - Complex<T>(T(sin2)));
    const Complex<T> c{T(cos_i)};
    const Complex<T> ec = eta * T(cos_i);
    return {(c - root) / (c + root), (ec - root) / (ec + root)};
}

// D_prev / (D_prev + d_next): planar reflectors, point source.
inline double spreading_factor_specular(double d_prev, double d_next) { return d_prev / (d_prev + d_next); }

template <class T>
Jones<T> change_basis(const std::array<double, 4>& d, const Jones<T>& e)
{
    return {e.p * T(d[0]) + e.q * T(d[1]), e.p * T(d[2]) + e.q * T(d[3])};
}

// diag(R r_perp, R r_par) E * spreading * phase. The propagation phase is
// passed explicitly; path_coefficient uses phase 1 because the delay phase
// is applied per subcarrier.
template <class T>
Jones<T> specular_transfer(const Jones<T>& e_in, const MaterialValues<T>& m, double cos_i, double frequency,
                           double spreading, std::complex<double> phase = 1.0)
{
    const T R = ad::safe_sqrt(T(1.0) - m.S * m.S);
    const auto r = fresnel(complex_permittivity(m.eps_r, m.sigma, frequency), cos_i);
    const Complex<T> cp = r.perp * (R * spreading);
    const Complex<T> cq = r.par * (R * spreading);
    return {(cp * e_in.p) * phase, (cq * e_in.q) * phase};
}

// ||E_s|| / d_next * [sqrt(1-Kx) e^{j chi1}, sqrt(Kx) e^{j chi2}] * phase,
// with ||E_s||^2 = ||E_in||^2 cos_i dA S^2 Gamma^2 f_s.
template <class T>
Jones<T> diffuse_transfer(const Jones<T>& e_in, const MaterialValues<T>& m, double cos_i, double area,
                          double d_next, const T& f_s, double frequency, std::array<double, 2> chi = {0.0, 0.0},
                          std::complex<double> phase = 1.0)
{
    if (ad::value_of(f_s) < 0.0)
        throw NumericalError("scattering pattern returned a negative value");
    const auto r = fresnel(complex_permittivity(m.eps_r, m.sigma, frequency), cos_i);
    // ||diag(r) E_in|| = Gamma * ||E_in||
    const T reflected2 = abs2(r.perp * e_in.p) + abs2(r.par * e_in.q);
    const T es = ad::safe_sqrt(reflected2 * f_s * (cos_i * area)) * m.S;
    const T amp = es / d_next;
    const T cp = amp * ad::safe_sqrt(T(1.0) - m.Kx);
    const T cq = amp * ad::safe_sqrt(m.Kx);
    return {Complex<T>(cp) * (expj(chi[0]) * phase), Complex<T>(cq) * (expj(chi[1]) * phase)};
}

// Backscatter lobe pattern with quadrature normalization (cos-free
// hemispherical integral of 1). lobe_fraction may be trainable.
struct BackscatterShape {
    int alpha_r = 1;
    int alpha_s = 1;
};

// Unnormalized lobe integrals over the upper hemisphere as a function of
// cos(theta_i). Tabulated per exponent on first use (thread-safe) and
// interpolated; `exact` bypasses the table.
double backscatter_lobe_integral(bool specular_lobe, int alpha, double cos_i, bool exact = false);

template <class T>
T backscatter_pattern(const Vec3& k_i, const Vec3& k_s, const Vec3& n, const BackscatterShape& shape,
                      const T& lobe_fraction)
{
    const Vec3 k_r = reflect(k_i, n);
    const double cos_i = -dot(k_i, n);
    const double lr = std::pow(0.5 * (1.0 + dot(k_r, k_s)), shape.alpha_r);
    const double ls = std::pow(0.5 * (1.0 + dot(k_i, k_s)), shape.alpha_s);
    const double ir = backscatter_lobe_integral(true, shape.alpha_r, cos_i);
    const double is = backscatter_lobe_integral(false, shape.alpha_s, cos_i);
    const T one_minus = T(1.0) - lobe_fraction;
    return (lobe_fraction * lr + one_minus * ls) / (lobe_fraction * ir + one_minus * is);
}

inline double lambertian_pattern(const Vec3& k_s, const Vec3& n) { return std::max(0.0, dot(k_s, n)) / kPi; }

// Source of every parameter-dependent quantity needed along a path.
template <class T>
class FieldSource {
  public:
    virtual ~FieldSource() = default;
    virtual MaterialValues<T> material(const Interaction& it) = 0;
    virtual T scattering(const Interaction& it, const MaterialValues<T>& m) = 0;
    // Directional gains with the direction already in the antenna's frame.
    virtual T tx_gain(const Vec3& local_direction) = 0;
    virtual T rx_gain(const Vec3& local_direction) = 0;
};

struct AntennaPose {
    Mat3 orientation; // local -> global
    double slant = 0.0; // zeta, rad
};

// Pattern C = [cos(zeta) sqrt(G), sin(zeta) sqrt(G)] at global direction d,
// expressed in the basis returned through `basis` (global vectors).
template <class T>
Jones<T> antenna_field(const AntennaPose& pose, const T& gain, const Vec3& global_direction, Basis* basis)
{
    if (ad::value_of(gain) < 0.0)
        throw NumericalError("antenna pattern returned a negative gain");
    const Vec3 local = pose.orientation.transposed() * global_direction;
    const Basis lb = spherical_basis(local);
    if (basis)
        *basis = {pose.orientation * lb.p, pose.orientation * lb.q};
    const T s = ad::safe_sqrt(gain);
    return {Complex<T>(s * std::cos(pose.slant)), Complex<T>(s * std::sin(pose.slant))};
}

// Complex coefficient a (delay phase excluded). `chi` supplies the diffuse
// random phases (used only for a diffuse last interaction).
template <class T>
Complex<T> path_coefficient(const PropagationPath& path, FieldSource<T>& source, const AntennaPose& tx,
                            const AntennaPose& rx, double frequency, std::array<double, 2> chi = {0.0, 0.0})
{
    const std::size_t q = path.interactions.size();
    if (path.segments.size() != q + 1)
        throw UsageError("path_coefficient: malformed path");
    const double lambda = kSpeedOfLight / frequency;

    const Vec3 k0 = q > 0 ? normalized(path.interactions[0].point - path.tx) : normalized(path.rx - path.tx);
    Basis basis;
    const Vec3 local_tx = tx.orientation.transposed() * k0;
    Jones<T> e = antenna_field(tx, source.tx_gain(local_tx), k0, &basis);
    const double inv_d1 = 1.0 / path.segments[0];
    e = {e.p * T(inv_d1), e.q * T(inv_d1)};
    Vec3 k = k0;
    double travelled = path.segments[0];

    for (std::size_t j = 0; j < q; ++j) {
        const Interaction& it = path.interactions[j];
        const double cos_i = -dot(it.k_in, it.normal);
        const Basis in = incidence_basis(it.k_in, it.normal);
        e = change_basis(basis_transform(k, basis, in), e);
        const MaterialValues<T> m = source.material(it);
        const double d_next = path.segments[j + 1];
        if (it.kind == InteractionKind::Specular) {
            const double a_r = spreading_factor_specular(travelled, d_next);
            e = specular_transfer(e, m, cos_i, frequency, a_r);
            basis = outgoing_basis(it.k_in, it.k_out, it.normal);
        } else {
            if (j + 1 != q)
                throw UsageError("path_coefficient: diffuse interaction must be last");
            const T f_s = source.scattering(it, m);
            e = diffuse_transfer(e, m, cos_i, it.area, d_next, f_s, frequency, chi);
            basis = spherical_basis(it.k_out);
        }
        k = it.k_out;
        travelled += d_next;
    }

    const Vec3 arrival = -k;
    Basis rx_basis;
    const Vec3 local_rx = rx.orientation.transposed() * arrival;
    const Jones<T> c_r = antenna_field(rx, source.rx_gain(local_rx), arrival, &rx_basis);
    const Jones<T> e_rx = change_basis(basis_transform(k, basis, rx_basis), e);
    // C_R is real here, so C_R^H E = C_p E_p + C_q E_q.
    const Complex<T> out = e_rx.p * c_r.p.re + e_rx.q * c_r.q.re;
    return out * T(lambda / (4.0 * kPi));
}

// H[n + N/2] = sum_i a_i exp(-j 2 pi (f + n df) tau_i).
template <class T>
std::vector<Complex<T>> cfr(std::span<const Complex<T>> a, std::span<const double> delays, const Waveform& wf);

// h[l + N/2] = N^{-1/2} sum_n H[n] exp(j 2 pi n l / N), centered order.
template <class T>
std::vector<Complex<T>> cir(std::span<const Complex<T>> H);

// Delay-domain kernel: g[i][l] = contribution of a unit coefficient with
// delay tau_i to tap l (centered order). Equivalent to cir(cfr(.)).
std::vector<std::complex<double>> tap_kernel(std::span<const double> delays, const Waveform& wf);

// h = G^T a using a precomputed tap_kernel (row-major M x N).
template <class T>
std::vector<Complex<T>> cir_from_kernel(std::span<const Complex<T>> a, std::span<const std::complex<double>> kernel,
                                        int subcarriers);

extern template std::vector<Complex<double>> cfr(std::span<const Complex<double>>, std::span<const double>,
                                                 const Waveform&);
extern template std::vector<Complex<ad::Var>> cfr(std::span<const Complex<ad::Var>>, std::span<const double>,
                                                  const Waveform&);
extern template std::vector<Complex<double>> cir(std::span<const Complex<double>>);
extern template std::vector<Complex<ad::Var>> cir(std::span<const Complex<ad::Var>>);
extern template std::vector<Complex<double>> cir_from_kernel(std::span<const Complex<double>>,
                                                             std::span<const std::complex<double>>, int);
extern template std::vector<Complex<ad::Var>> cir_from_kernel(std::span<const Complex<ad::Var>>,
                                                              std::span<const std::complex<double>>, int);

// Plain complex helpers for data handling.
std::vector<std::complex<double>> to_std(std::span<const Complex<double>> v);

} // namespace raycal
