// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------
//
// Complex numbers as explicit (re, im) pairs over a real scalar T, where T
// is double or ad::Var. Every operation decomposes into real primitives so
// reverse mode needs no complex-differentiation convention.

#pragma once

#include <complex>

#include "raycal/autodiff.hpp"

namespace raycal {

template <class T>
struct Complex {
    T re{};
    T im{};

    Complex() = default;
    Complex(T r, T i = T(0.0)) : re(std::move(r)), im(std::move(i)) {}
    Complex(std::complex<double> c) : re(c.real()), im(c.imag()) {} // NOLINT: implicit

    std::complex<double> value() const { return {ad::value_of(re), ad::value_of(im)}; }
};

using CVar = Complex<ad::Var>;

template <class T>
Complex<T> operator+(const Complex<T>& a, const Complex<T>& b) { return {a.re + b.re, a.im + b.im}; }
template <class T>
Complex<T> operator-(const Complex<T>& a, const Complex<T>& b) { return {a.re - b.re, a.im - b.im}; }
template <class T>
Complex<T> operator-(const Complex<T>& a) { return {-a.re, -a.im}; }
template <class T>
Complex<T> operator*(const Complex<T>& a, const Complex<T>& b)
{
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
template <class T>
Complex<T> operator*(const Complex<T>& a, const T& s) { return {a.re * s, a.im * s}; }
template <class T>
Complex<T> operator*(const T& s, const Complex<T>& a) { return {a.re * s, a.im * s}; }
template <class T>
Complex<T> operator*(const Complex<T>& a, double s) requires(!std::is_same_v<T, double>) { return {a.re * s, a.im * s}; }
template <class T>
Complex<T> operator*(double s, const Complex<T>& a) requires(!std::is_same_v<T, double>) { return {a.re * s, a.im * s}; }

// Multiplication by a constant complex factor.
template <class T>
Complex<T> operator*(const Complex<T>& a, std::complex<double> c)
{
    return {a.re * c.real() - a.im * c.imag(), a.re * c.imag() + a.im * c.real()};
}

template <class T>
Complex<T> conj(const Complex<T>& a) { return {a.re, -a.im}; }

template <class T>
T abs2(const Complex<T>& a) { return ad::abs2(a.re, a.im); }

template <class T>
T abs(const Complex<T>& a) { return ad::safe_sqrt(abs2(a)); }

template <class T>
Complex<T> operator/(const Complex<T>& a, const Complex<T>& b)
{
    const T den = abs2(b);
    const Complex<T> num = a * conj(b);
    return {num.re / den, num.im / den};
}

// Principal branch (Re >= 0). Smooth wherever Re(z) > 0 or Im(z) != 0.
template <class T>
Complex<T> sqrt(const Complex<T>& z)
{
    const T r = abs(z);
    const T s_re = ad::safe_sqrt((r + z.re) * 0.5);
    return {s_re, z.im / (s_re * 2.0)};
}

// e^{j phase} for a constant phase.
inline std::complex<double> expj(double phase) { return {std::cos(phase), std::sin(phase)}; }

} // namespace raycal
