// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include <gtest/gtest.h>

#include <random>

#include "raycal/em_field.hpp"
#include "raycal/model.hpp"
#include "raycal/scenes.hpp"
#include "raycal/trainable.hpp"
#include "support.hpp"

using namespace raycal;
using namespace raycal::testing;
using cd = std::complex<double>;

namespace {

cd z(const Complex<double>& c) { return {c.re, c.im}; }

MaterialValues<double> values(double eps, double sigma, double S, double kx) { return {eps, sigma, S, kx}; }

} // namespace

TEST(Permittivity, Vacuum)
{
    const auto eta = complex_permittivity(1.0, 0.0, 3.438e9);
    EXPECT_EQ(eta.re, 1.0);
    EXPECT_EQ(eta.im, 0.0);
}

TEST(Permittivity, Concrete)
{
    const auto eta = complex_permittivity(5.24, 0.121, 3.438e9);
    EXPECT_EQ(eta.re, 5.24);
    // sigma / (eps0 2 pi f), eps0 = 8.8541878128e-12.
    EXPECT_NEAR(eta.im, -0.63257, 1e-4);
    EXPECT_NEAR(eta.im, -0.121 / (8.8541878128e-12 * 2 * M_PI * 3.438e9), 1e-12);
}

TEST(Permittivity, LosslessHasZeroImaginaryPart)
{
    for (double f : {1e8, 3.438e9, 6e10})
        EXPECT_EQ(complex_permittivity(3.0, 0.0, f).im, 0.0);
}

TEST(Fresnel, NoInterface)
{
    for (double c : {0.1, 0.5, 1.0}) {
        const auto r = fresnel(Complex<double>(1.0), c);
        EXPECT_NEAR(std::abs(z(r.perp)), 0.0, 1e-15);
        EXPECT_NEAR(std::abs(z(r.par)), 0.0, 1e-15);
    }
}

TEST(Fresnel, NormalIncidence)
{
    const auto r = fresnel(Complex<double>(4.0), 1.0);
    EXPECT_NEAR(r.perp.re, -1.0 / 3.0, 1e-15);
    EXPECT_NEAR(r.par.re, 1.0 / 3.0, 1e-15);
}

TEST(Fresnel, BrewsterAngle)
{
    const double theta = std::atan(1.5);
    const auto r = fresnel(Complex<double>(2.25), std::cos(theta));
    EXPECT_NEAR(std::abs(z(r.par)), 0.0, 1e-15);
    EXPECT_GT(std::abs(z(r.perp)), 0.1);
}

TEST(Fresnel, PassiveOverGrid)
{
    for (double eps = 1.0; eps <= 20.0; eps += 1.9)
        for (double sigma : {0.0, 0.01, 0.3, 5.0})
            for (double c = 0.01; c <= 1.0; c += 0.07) {
                const auto r = fresnel(complex_permittivity(eps, sigma, 3.438e9), c);
                EXPECT_LE(std::abs(z(r.perp)), 1.0 + 1e-12);
                EXPECT_LE(std::abs(z(r.par)), 1.0 + 1e-12);
            }
}

TEST(BasisTransform, IdentityAndSwap)
{
    const Vec3 d{0, 0, 1};
    const Basis b{{1, 0, 0}, {0, 1, 0}};
    const auto id = basis_transform(d, b, b);
    EXPECT_EQ(id, (std::array<double, 4>{1, 0, 0, 1}));
    const auto sw = basis_transform(d, b, Basis{b.q, b.p});
    EXPECT_EQ(sw, (std::array<double, 4>{0, 1, 1, 0}));
}

TEST(BasisTransform, RotationAboutAxis)
{
    const Vec3 d{0, 0, 1};
    const double a = M_PI / 6;
    const Basis from{{1, 0, 0}, {0, 1, 0}};
    const Basis to{{std::cos(a), std::sin(a), 0}, {-std::sin(a), std::cos(a), 0}};
    const auto m = basis_transform(d, from, to);
    EXPECT_NEAR(m[0], std::cos(a), 1e-15);
    EXPECT_NEAR(m[1], std::sin(a), 1e-15);
    EXPECT_NEAR(m[2], -std::sin(a), 1e-15);
    EXPECT_NEAR(m[3], std::cos(a), 1e-15);
}

TEST(BasisTransform, NonTransverseBasisRejected)
{
    const Basis b{{1, 0, 0}, {0, 1, 0}};
    EXPECT_THROW(basis_transform({1, 0, 0}, b, b), UsageError);
}

TEST(Specular, NoInterfaceGivesNothing)
{
    const Jones<double> e{Complex<double>(1.0), Complex<double>(0.5, 0.2)};
    const auto out = specular_transfer(e, values(1.0, 0.0, 0.0, 0.0), 0.7, 3.438e9, 0.5);
    EXPECT_NEAR(std::abs(z(out.p)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(z(out.q)), 0.0, 1e-15);
}

TEST(Specular, PerfectReflectorLimit)
{
    const Jones<double> e{Complex<double>(0.3), Complex<double>(0.0, -0.4)};
    const auto out = specular_transfer(e, values(1.0, 1e9, 0.0, 0.0), 0.6, 3.438e9, 0.25);
    EXPECT_NEAR(std::abs(z(out.p)), 0.25 * 0.3, 1e-5);
    EXPECT_NEAR(std::abs(z(out.q)), 0.25 * 0.4, 1e-5);
}

TEST(Specular, FullyRoughSurfaceReflectsNothing)
{
    const Jones<double> e{Complex<double>(1.0), Complex<double>(1.0)};
    const auto out = specular_transfer(e, values(4.0, 0.0, 1.0, 0.0), 0.6, 3.438e9, 0.25);
    EXPECT_NEAR(std::abs(z(out.p)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(z(out.q)), 0.0, 1e-14);
}

TEST(Spreading, UnfoldedDistanceIdentity)
{
    EXPECT_EQ(spreading_factor_specular(1, 1), 0.5);
    EXPECT_EQ((1.0 / 1.0) * spreading_factor_specular(1, 1), 1.0 / (1.0 + 1.0));
    EXPECT_NEAR(spreading_factor_specular(3, 1e-12), 1.0, 1e-12);
    // Segments 1, 2, 3: (1/1) * 1/(1+2) * (1+2)/(1+2+3).
    EXPECT_NEAR(spreading_factor_specular(1, 2) * spreading_factor_specular(3, 3), 1.0 / 6.0, 1e-15);
}

TEST(Diffuse, ZeroRoughnessScattersNothing)
{
    const Jones<double> e{Complex<double>(1.0), Complex<double>(1.0)};
    const auto out = diffuse_transfer(e, values(4.0, 0.0, 0.0, 0.3), 0.8, 1.0, 2.0, 0.3, 3.438e9);
    EXPECT_NEAR(std::abs(z(out.p)) + std::abs(z(out.q)), 0.0, 1e-12);
}

TEST(Diffuse, NoCrossPolarization)
{
    const Jones<double> e{Complex<double>(1.0), Complex<double>(1.0)};
    const auto out = diffuse_transfer(e, values(4.0, 0.0, 0.5, 0.0), 0.8, 1.0, 2.0, 0.3, 3.438e9);
    EXPECT_NEAR(std::abs(z(out.q)), 0.0, 1e-12);
    EXPECT_GT(std::abs(z(out.p)), 0.0);
}

TEST(Diffuse, LambertianMagnitude)
{
    const Jones<double> e{Complex<double>(1.0), Complex<double>(0.0)};
    const double cos_i = 0.6, cos_s = 0.8, area = 0.5, d = 3.0, S = 0.7, kx = 0.25;
    const double eps = 4.0;
    const auto r = fresnel(Complex<double>(eps), cos_i);
    const double gamma2 = std::norm(z(r.perp)); // unit input along the first component
    const double fs = cos_s / M_PI;
    const auto out = diffuse_transfer(e, values(eps, 0.0, S, kx), cos_i, area, d, fs, 3.438e9);
    const double expected = std::sqrt(cos_i * area * S * S * gamma2 * fs) / d;
    EXPECT_NEAR(std::hypot(std::abs(z(out.p)), std::abs(z(out.q))), expected, 1e-14);
    EXPECT_NEAR(std::abs(z(out.q)) / std::abs(z(out.p)), std::sqrt(kx / (1 - kx)), 1e-12);
}

TEST(Backscatter, SingleLobeIntegratesToOne)
{
    const Vec3 n{0, 0, 1};
    for (double ang : {0.1, 0.6, 1.2}) {
        const Vec3 k_i = normalized(Vec3{std::sin(ang), 0, -std::cos(ang)});
        const double I = hemisphere_integral(
            [&](const Vec3& k_s) { return backscatter_pattern(k_i, k_s, n, {1, 1}, 1.0); }, n, 256, 512);
        EXPECT_NEAR(I, 1.0, 1e-3);
    }
}

TEST(Backscatter, SpecularDirectionMaximizesFirstLobe)
{
    const Vec3 n{0, 0, 1};
    const Vec3 k_i = normalized(Vec3{1, 0.3, -1});
    const Vec3 k_r = reflect(k_i, n);
    const double peak = backscatter_pattern(k_i, k_r, n, {5, 8}, 1.0);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int i = 0; i < 1000; ++i) {
        Vec3 k{g(rng), g(rng), std::abs(g(rng))};
        EXPECT_LE(backscatter_pattern(k_i, normalized(k), n, {5, 8}, 1.0), peak + 1e-12);
    }
}

TEST(Backscatter, NonNegativeOnRandomDirections)
{
    const Vec3 n{0, 0, 1};
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    for (int i = 0; i < 10000; ++i) {
        const Vec3 k_i = normalized(Vec3{g(rng), g(rng), -std::abs(g(rng)) - 1e-3});
        const Vec3 k_s = normalized(Vec3{g(rng), g(rng), std::abs(g(rng)) + 1e-3});
        EXPECT_GE(backscatter_pattern(k_i, k_s, n, {5, 8}, 0.8), 0.0);
    }
}

TEST(Backscatter, TableMatchesExactIntegral)
{
    for (int a : {1, 5, 8})
        for (double c : {0.05, 0.33, 0.71, 1.0}) {
            EXPECT_NEAR(backscatter_lobe_integral(true, a, c), backscatter_lobe_integral(true, a, c, true),
                        1e-4 * backscatter_lobe_integral(true, a, c, true));
            EXPECT_NEAR(backscatter_lobe_integral(false, a, c), backscatter_lobe_integral(false, a, c, true),
                        1e-4 * backscatter_lobe_integral(false, a, c, true));
        }
}

TEST(Antenna, SlantSplitsGain)
{
    const AntennaPose pose{};
    Basis b;
    auto c = antenna_field(pose, 1.0, {1, 0, 0}, &b);
    EXPECT_EQ(c.p.re, 1.0);
    EXPECT_EQ(c.q.re, 0.0);
    const AntennaPose slanted{Mat3{}, M_PI / 2};
    c = antenna_field(slanted, 2.0, {0, 1, 0}, &b);
    EXPECT_NEAR(c.p.re, 0.0, 1e-15);
    EXPECT_NEAR(c.q.re, std::sqrt(2.0), 1e-15);
    const AntennaPose mid{Mat3{}, 0.4};
    c = antenna_field(mid, 3.3, normalized(Vec3{1, 2, 3}), &b);
    EXPECT_NEAR(abs2(c.p) + abs2(c.q), 3.3, 1e-14);
}

TEST(PathCoefficient, FriisFreeSpace)
{
    const Scene s;
    const Model m(s, ModelConfig{}, 0);
    PathSet set;
    set.paths.push_back(*trace_los(s, {0, 0, 0}, {6, 8, 0}));
    const double f = 3.438e9;
    const auto a = m.coefficients<double>(set, f, {});
    const double lambda = 299792458.0 / f;
    EXPECT_NEAR(std::abs(z(a[0])), lambda / (4 * M_PI * 10.0), 1e-9 * lambda / (4 * M_PI * 10.0));
}

TEST(PathCoefficient, CrossPolarizedAntennasCancel)
{
    const Scene s;
    ModelConfig cfg;
    cfg.rx.slant = M_PI / 2;
    const Model m(s, cfg, 0);
    PathSet set;
    set.paths.push_back(*trace_los(s, {0, 0, 0}, {3, 1, 0.5}));
    const auto a = m.coefficients<double>(set, 3.438e9, {});
    EXPECT_LT(std::abs(z(a[0])), 1e-14 * (299792458.0 / 3.438e9) / (4 * M_PI * 3.2));
}

// |H| of a LOS path plus a perpendicular-polarized ground bounce.
TEST(PathCoefficient, TwoRayClosedForm)
{
    const Scene s = make_ground_plane(50, fixed_material("ground", 4.0));
    ModelConfig cfg;
    cfg.tx.slant = cfg.rx.slant = M_PI / 2;
    const Model m(s, cfg, 0);
    const Vec3 tx{0, 0, 2}, rx{7, 0, 1.2};
    const PathSet set = trace_all(s, tx, rx, {1, 2000, 0, 0, CandidateMode::Exhaustive});
    ASSERT_EQ(set.paths.size(), 2u);
    Waveform wf;
    const auto a = m.coefficients<double>(set, wf.frequency, {});
    const auto delays = path_delays(set);
    const auto H = cfr<double>(a, delays, wf);

    const double c = 299792458.0, lambda = c / wf.frequency;
    const double d = distance(tx, rx), L = distance(Vec3{tx.x, tx.y, -tx.z}, rx);
    const double cos_i = (tx.z + rx.z) / L;
    const double root = std::sqrt(4.0 - (1 - cos_i * cos_i));
    const double r_perp = (cos_i - root) / (cos_i + root);
    for (int n = -wf.subcarriers / 2; n < wf.subcarriers / 2; ++n) {
        const double f = wf.subcarrier_frequency(n);
        const cd h = lambda / (4 * M_PI) *
                     (std::exp(cd(0, -2 * M_PI * f * d / c)) / d + r_perp * std::exp(cd(0, -2 * M_PI * f * L / c)) / L);
        const double got = std::abs(z(H[n + wf.subcarriers / 2]));
        EXPECT_NEAR(got, std::abs(h), 1e-6 * std::abs(h));
    }
}

TEST(Cfr, UnitPathAtZeroDelay)
{
    Waveform wf;
    const Complex<double> a[] = {Complex<double>(1.0)};
    const double tau[] = {0.0};
    const auto H = cfr<double>(a, tau, wf);
    ASSERT_EQ(H.size(), 128u);
    for (const auto& h : H)
        EXPECT_NEAR(std::abs(z(h) - cd(1.0)), 0.0, 1e-15);
}

TEST(Cfr, PhaseRampForOneTapDelay)
{
    Waveform wf;
    const double tau0 = 1.0 / wf.bandwidth();
    const Complex<double> a[] = {Complex<double>(1.0)};
    const double tau[] = {tau0};
    const auto H = cfr<double>(a, tau, wf);
    for (int n = -64; n < 64; ++n) {
        const cd expected = std::exp(cd(0, -2 * M_PI * (wf.frequency * tau0 + double(n) / 128)));
        EXPECT_NEAR(std::abs(z(H[n + 64]) - expected), 0.0, 1e-9);
    }
}

TEST(Cfr, TwoPathComb)
{
    Waveform wf;
    const double dt = 1.0 / (2 * wf.spacing);
    const Complex<double> a[] = {Complex<double>(1.0), Complex<double>(1.0)};
    // Second delay snapped to a whole number of carrier cycles near dt.
    const double tau2[] = {0.0, std::round(wf.frequency * dt) / wf.frequency};
    const auto H = cfr<double>(a, tau2, wf);
    const double shift = tau2[1] * wf.spacing; // close to 1/2
    for (int n = -64; n < 64; ++n) {
        const double expected = 2.0 * std::abs(std::cos(M_PI * n * shift));
        EXPECT_NEAR(std::abs(z(H[n + 64])), expected, 1e-6);
    }
    EXPECT_NEAR(std::abs(z(H[64])), 2.0, 1e-9);
    EXPECT_LT(std::abs(z(H[65])), 1e-3);
}

TEST(Cir, FlatResponseIsSingleTap)
{
    std::vector<Complex<double>> H(128, Complex<double>(1.0));
    const auto h = cir<double>(H);
    for (int l = -64; l < 64; ++l)
        EXPECT_NEAR(std::abs(z(h[l + 64])), l == 0 ? std::sqrt(128.0) : 0.0, 1e-12);
}

TEST(Cir, ParsevalAndLinearity)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<Complex<double>> a(128), b(128), s(128);
    double ea = 0;
    for (int i = 0; i < 128; ++i) {
        a[i] = {g(rng), g(rng)};
        b[i] = {g(rng), g(rng)};
        s[i] = a[i] + b[i];
        ea += abs2(a[i]);
    }
    const auto ha = cir<double>(a), hb = cir<double>(b), hs = cir<double>(s);
    double eh = 0;
    for (int i = 0; i < 128; ++i) {
        eh += abs2(ha[i]);
        EXPECT_NEAR(std::abs(z(hs[i]) - z(ha[i]) - z(hb[i])), 0.0, 1e-12);
    }
    EXPECT_NEAR(eh, ea, 1e-9 * ea);
}

TEST(TapKernel, EqualsTransformOfCfr)
{
    Waveform wf;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 2e-7);
    std::normal_distribution<double> g;
    std::vector<double> tau(9);
    std::vector<Complex<double>> a(9);
    for (int i = 0; i < 9; ++i) {
        tau[i] = u(rng);
        a[i] = {g(rng), g(rng)};
    }
    const auto ref = cir<double>(cfr<double>(a, tau, wf));
    const auto kernel = tap_kernel(tau, wf);
    const auto got = cir_from_kernel<double>(a, kernel, wf.subcarriers);
    for (int i = 0; i < 128; ++i)
        EXPECT_NEAR(std::abs(z(got[i]) - z(ref[i])), 0.0, 1e-10);
}
