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

#include "raycal/autodiff.hpp"
#include "raycal/calibration.hpp"
#include "raycal/complex.hpp"
#include "raycal/errors.hpp"

using namespace raycal;
using ad::Op;
using ad::Tape;
using ad::Var;

TEST(Tape, RecordStoresValueAndPartials)
{
    Tape t;
    const Var x = t.parameter(2.0), y = t.parameter(3.0);
    const double add_p[] = {1.0, 1.0};
    const Var s = t.record(Op::Add, std::vector<Var>{x, y}, 5.0, add_p);
    EXPECT_EQ(s.value, 5.0);
    const double mul_p[] = {3.0, 2.0};
    const Var m = t.record(Op::Mul, std::vector<Var>{x, y}, 6.0, mul_p);
    EXPECT_EQ(m.value, 6.0);
    auto g = t.backward(m);
    EXPECT_DOUBLE_EQ(g[0], 3.0);
    EXPECT_DOUBLE_EQ(g[1], 2.0);
}

TEST(Tape, ExpAtZero)
{
    Tape t;
    const Var x = t.parameter(0.0);
    const Var e = ad::exp(x);
    EXPECT_EQ(e.value, 1.0);
    EXPECT_DOUBLE_EQ(t.backward(e)[0], 1.0);
}

TEST(Tape, SquareGradient)
{
    Tape t;
    const Var x = t.parameter(3.0);
    EXPECT_DOUBLE_EQ(t.backward(x * x)[0], 6.0);
}

TEST(Tape, SigmoidGradientAtZero)
{
    Tape t;
    const Var x = t.parameter(0.0);
    EXPECT_DOUBLE_EQ(t.backward(ad::sigmoid(x))[0], 0.25);
}

// |e^{-j 2 pi f tau} / d|^2 = 1/d^2, derivative -2/d^3.
TEST(Tape, PhasorPowerGradientMatchesFiniteDifference)
{
    const double f = 3.438e9, tau = 7e-9;
    auto power = [&](auto d) {
        using T = decltype(d);
        const Complex<T> h = Complex<T>(expj(-2.0 * kPi * f * tau)) / Complex<T>(d);
        return abs2(h);
    };
    Tape t;
    const Var d = t.parameter(2.0);
    const double g = t.backward(power(d))[0];
    const double h = 1e-6;
    const double fd = (power(2.0 + h) - power(2.0 - h)) / (2 * h);
    EXPECT_NEAR(g, -0.25, 1e-12);
    EXPECT_NEAR(g, fd, 1e-8);
}

TEST(Tape, ConstantsDoNotAllocateNodes)
{
    Tape t;
    const Var x = t.parameter(1.5);
    const std::size_t before = t.size();
    const Var c = Var(2.0) * Var(4.0);
    EXPECT_TRUE(c.is_constant());
    EXPECT_EQ(t.size(), before);
    EXPECT_DOUBLE_EQ(t.backward(x * c)[0], 8.0);
}

TEST(Tape, MixedTapesAreRejected)
{
    Tape a, b;
    const Var x = a.parameter(1.0), y = b.parameter(2.0);
    EXPECT_THROW((void)(x + y), UsageError);
}

TEST(Tape, AffineMatchesExpandedSum)
{
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n;
    std::vector<double> w(7), in(7);
    for (auto& v : w)
        v = n(rng);
    for (auto& v : in)
        v = n(rng);
    Tape t;
    auto wv = t.parameters(w);
    auto iv = t.parameters(in);
    const Var bias = t.parameter(0.3);
    const Var a = ad::sigmoid(t.affine(wv, iv, bias));
    const auto g = t.backward(a);
    Tape u;
    auto wu = u.parameters(w);
    auto iu = u.parameters(in);
    Var s = u.parameter(0.3);
    for (std::size_t i = 0; i < w.size(); ++i)
        s = s + wu[i] * iu[i];
    const auto g2 = u.backward(ad::sigmoid(s));
    ASSERT_EQ(g.size(), g2.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        EXPECT_NEAR(g[i], g2[i], 1e-14);
}

TEST(Tape, NonFiniteValueIsLocated)
{
    Tape t;
    const Var x = t.parameter(-1.0);
    const Var y = ad::log(x) + x;
    (void)y;
    ASSERT_TRUE(t.first_nonfinite().has_value());
    EXPECT_NE(t.describe(*t.first_nonfinite()).find("log"), std::string::npos);
}

TEST(Tape, SafeSqrtHasFiniteGradientAtZero)
{
    Tape t;
    const Var x = t.parameter(0.0);
    const auto g = t.backward(ad::safe_sqrt(x));
    EXPECT_TRUE(std::isfinite(g[0]));
}

TEST(Tape, OpNamesRoundTrip)
{
    for (Op op : {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Neg, Op::Exp, Op::Log, Op::Sqrt, Op::SafeSqrt, Op::Sin,
                  Op::Cos, Op::Pow, Op::Sigmoid, Op::Abs, Op::Relu, Op::Dot, Op::Abs2, Op::Affine}) {
        const auto back = ad::op_from_name(ad::op_name(op));
        ASSERT_TRUE(back.has_value());
        EXPECT_EQ(*back, op);
    }
    EXPECT_FALSE(ad::op_from_name("nope").has_value());
}

TEST(FiniteDiffCheck, SumOfSquares)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<double> p(6);
    for (auto& v : p)
        v = u(rng);
    const auto r = ad::finite_diff_check(
        [](Tape&, std::span<const Var> x) {
            Var s(0.0);
            for (const Var& v : x)
                s = s + v * v;
            return s;
        },
        p, 1e-5);
    EXPECT_LE(r.max_relative_error, 1e-6);
    for (std::size_t i = 0; i < p.size(); ++i)
        EXPECT_NEAR(r.entries[i].autodiff, 2 * p[i], 1e-12);
}

TEST(FiniteDiffCheck, SmapeOfExponential)
{
    const double p[] = {0.3};
    const auto r = ad::finite_diff_check([](Tape&, std::span<const Var> x) { return smape(1.0, ad::exp(x[0])); },
                                         p, 1e-6);
    EXPECT_LE(r.max_relative_error, 1e-5);
}

TEST(FiniteDiffCheck, ConstantFunction)
{
    const double p[] = {1.0, -2.0};
    const auto r = ad::finite_diff_check([](Tape&, std::span<const Var>) { return Var(4.0); }, p, 1e-6);
    for (const auto& e : r.entries) {
        EXPECT_EQ(e.autodiff, 0.0);
        EXPECT_EQ(e.finite_difference, 0.0);
    }
    EXPECT_EQ(r.max_relative_error, 0.0);
}

TEST(FiniteDiffCheck, InjectedFaultIsDetected)
{
    const double p[] = {0.7, 1.3};
    auto f = [](Tape&, std::span<const Var> x) { return ad::sin(x[0]) * x[1]; };
    EXPECT_LE(ad::finite_diff_check(f, p, 1e-6).max_relative_error, 1e-6);
    EXPECT_GT(ad::finite_diff_check(f, p, 1e-6, Op::Sin).max_relative_error, 1e-3);
}

// Every unary primitive against a central difference at a generic point.
TEST(FiniteDiffCheck, UnaryPrimitives)
{
    const double p[] = {0.63};
    const std::vector<std::function<Var(const Var&)>> fns = {
        [](const Var& x) { return ad::exp(x); },        [](const Var& x) { return ad::log(x); },
        [](const Var& x) { return ad::sqrt(x); },       [](const Var& x) { return ad::safe_sqrt(x); },
        [](const Var& x) { return ad::sin(x); },        [](const Var& x) { return ad::cos(x); },
        [](const Var& x) { return ad::pow(x, 2.7); },   [](const Var& x) { return ad::sigmoid(x); },
        [](const Var& x) { return ad::abs(x - 1.0); },  [](const Var& x) { return ad::relu(x); },
        [](const Var& x) { return -x / (x + 2.0); },
    };
    for (std::size_t i = 0; i < fns.size(); ++i) {
        const auto r = ad::finite_diff_check([&](Tape&, std::span<const Var> x) { return fns[i](x[0]); }, p, 1e-6);
        EXPECT_LE(r.max_relative_error, 1e-7) << "function " << i;
    }
}
