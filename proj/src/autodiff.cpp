// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/autodiff.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "raycal/errors.hpp"

namespace raycal::ad {

namespace {

constexpr std::array<std::string_view, 20> kOpNames = {
    "leaf", "custom", "add", "sub", "mul", "div", "neg", "exp", "log", "sqrt",
    "safe_sqrt", "sin", "cos", "pow", "sigmoid", "abs", "relu", "dot", "abs2", "affine"};

} // namespace

std::string_view op_name(Op op) { return kOpNames.at(static_cast<std::size_t>(op)); }

std::optional<Op> op_from_name(std::string_view name)
{
    for (std::size_t i = 0; i < kOpNames.size(); ++i)
        if (kOpNames[i] == name)
            return static_cast<Op>(i);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

Var Tape::push(Op op, double value)
{
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    if (!std::isfinite(value) && !first_nonfinite_)
        first_nonfinite_ = id;
    nodes_.push_back({static_cast<std::uint32_t>(parents_.size()), 0, op});
    values_.push_back(value);
    Var v;
    v.tape = this;
    v.id = id;
    v.value = value;
    return v;
}

Var Tape::parameter(double value)
{
    Var v = push(Op::Leaf, value);
    roots_.push_back(v.id);
    return v;
}

std::vector<Var> Tape::parameters(std::span<const double> values)
{
    std::vector<Var> out;
    out.reserve(values.size());
    for (double x : values)
        out.push_back(parameter(x));
    return out;
}

Tape* Tape::owner_of(std::span<const Var> inputs) const
{
    for (const Var& v : inputs) {
        if (v.tape != nullptr && v.tape != this)
            throw UsageError("autodiff: operands recorded on different tapes");
    }
    return const_cast<Tape*>(this);
}

Var Tape::record(Op op, std::span<const Var> inputs, double value, std::span<const double> partials)
{
    if (inputs.size() != partials.size())
        throw UsageError("autodiff: partials length does not match inputs length");
    owner_of(inputs);
    const double scale = (fault_op_ && *fault_op_ == op) ? fault_factor_ : 1.0;
    Var out = push(op, value);
    Node& node = nodes_.back();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].is_constant())
            continue;
        parents_.push_back(inputs[i].id);
        partials_.push_back(partials[i] * scale);
        ++node.count;
    }
    return out;
}

Var Tape::record1(Op op, const Var& x, double value, double dx)
{
    const std::array<Var, 1> in{x};
    const std::array<double, 1> d{dx};
    return record(op, in, value, d);
}

Var Tape::record2(Op op, const Var& x, const Var& y, double value, double dx, double dy)
{
    const std::array<Var, 2> in{x, y};
    const std::array<double, 2> d{dx, dy};
    return record(op, in, value, d);
}

Var Tape::affine(std::span<const Var> weights, std::span<const Var> inputs, const Var& bias)
{
    if (weights.size() != inputs.size())
        throw UsageError("autodiff: affine weights/inputs length mismatch");
    owner_of(weights);
    owner_of(inputs);
    if (bias.tape != nullptr && bias.tape != this)
        throw UsageError("autodiff: operands recorded on different tapes");

    double value = bias.value;
    for (std::size_t k = 0; k < weights.size(); ++k)
        value += weights[k].value * inputs[k].value;

    auto contiguous = [](std::span<const Var> s) {
        if (s.empty() || s.front().is_constant())
            return false;
        for (std::size_t k = 1; k < s.size(); ++k)
            if (s[k].is_constant() || s[k].id != s.front().id + k)
                return false;
        return true;
    };

    if (!contiguous(weights) || !contiguous(inputs)) {
        // Generic fallback: explicit partials.
        std::vector<Var> in;
        std::vector<double> d;
        in.reserve(2 * weights.size() + 1);
        d.reserve(2 * weights.size() + 1);
        for (std::size_t k = 0; k < weights.size(); ++k) {
            in.push_back(weights[k]);
            d.push_back(inputs[k].value);
            in.push_back(inputs[k]);
            d.push_back(weights[k].value);
        }
        in.push_back(bias);
        d.push_back(1.0);
        return record(Op::Affine, in, value, d);
    }

    Var out = push(Op::Affine, value);
    Node& node = nodes_.back();
    node.first = static_cast<std::uint32_t>(affine_.size());
    node.count = static_cast<std::uint32_t>(weights.size());
    node.fused = true;
    affine_.push_back({weights.front().id, inputs.front().id, static_cast<std::uint32_t>(weights.size()),
                       bias.is_constant() ? Var::kConstant : bias.id});
    return out;
}

std::span<const std::uint32_t> Tape::parents(std::uint32_t id) const
{
    const Node& n = nodes_.at(id);
    if (n.fused)
        return {}; // implicit parents, see AffineRef
    return {parents_.data() + n.first, n.count};
}

std::string Tape::describe(std::uint32_t id) const
{
    std::ostringstream os;
    os << "node #" << id << " (" << op_name(nodes_.at(id).op) << ", value " << values_.at(id) << ")";
    return os.str();
}

std::vector<double> Tape::backward(const Var& loss) const
{
    std::vector<double> grads(roots_.size(), 0.0);
    if (!std::isfinite(loss.value)) {
        std::ostringstream os;
        os << "autodiff: non-finite loss " << loss.value;
        if (first_nonfinite_)
            os << "; first non-finite " << describe(*first_nonfinite_);
        throw NumericalError(os.str());
    }
    if (loss.is_constant())
        return grads;
    if (loss.tape != this)
        throw UsageError("autodiff: backward() called with a Var from another tape");

    std::vector<double> adj(loss.id + 1, 0.0);
    adj[loss.id] = 1.0;
    const double fault = fault_op_ && *fault_op_ == Op::Affine ? fault_factor_ : 1.0;
    for (std::int64_t i = loss.id; i >= 0; --i) {
        const double g = adj[static_cast<std::size_t>(i)];
        if (g == 0.0)
            continue;
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.fused) {
            const AffineRef& r = affine_[n.first];
            const double gf = g * fault;
            for (std::uint32_t k = 0; k < r.n; ++k) {
                adj[r.weights + k] += gf * values_[r.inputs + k];
                adj[r.inputs + k] += gf * values_[r.weights + k];
            }
            if (r.bias != Var::kConstant)
                adj[r.bias] += gf;
            continue;
        }
        for (std::uint32_t k = 0; k < n.count; ++k)
            adj[parents_[n.first + k]] += g * partials_[n.first + k];
    }
    for (std::size_t r = 0; r < roots_.size(); ++r)
        if (roots_[r] < adj.size())
            grads[r] = adj[roots_[r]];
    return grads;
}

void Tape::clear()
{
    nodes_.clear();
    values_.clear();
    parents_.clear();
    partials_.clear();
    affine_.clear();
    roots_.clear();
    first_nonfinite_.reset();
}

void Tape::reserve(std::size_t nodes, std::size_t edges)
{
    nodes_.reserve(nodes);
    values_.reserve(nodes);
    parents_.reserve(edges);
    partials_.reserve(edges);
}

void Tape::inject_fault(Op op, double factor)
{
    fault_op_ = op;
    fault_factor_ = factor;
}

// ---------------------------------------------------------------------------
// Arithmetic
// ---------------------------------------------------------------------------

namespace {

Tape* pick(const Var& a, const Var& b)
{
    if (a.tape && b.tape && a.tape != b.tape)
        throw UsageError("autodiff: operands recorded on different tapes");
    return a.tape ? a.tape : b.tape;
}

} // namespace

Var operator+(const Var& a, const Var& b)
{
    const double v = a.value + b.value;
    Tape* t = pick(a, b);
    return t ? t->record2(Op::Add, a, b, v, 1.0, 1.0) : Var(v);
}

Var operator-(const Var& a, const Var& b)
{
    const double v = a.value - b.value;
    Tape* t = pick(a, b);
    return t ? t->record2(Op::Sub, a, b, v, 1.0, -1.0) : Var(v);
}

Var operator*(const Var& a, const Var& b)
{
    const double v = a.value * b.value;
    Tape* t = pick(a, b);
    return t ? t->record2(Op::Mul, a, b, v, b.value, a.value) : Var(v);
}

Var operator/(const Var& a, const Var& b)
{
    const double v = a.value / b.value;
    Tape* t = pick(a, b);
    return t ? t->record2(Op::Div, a, b, v, 1.0 / b.value, -v / b.value) : Var(v);
}

Var operator-(const Var& a)
{
    return a.tape ? a.tape->record1(Op::Neg, a, -a.value, -1.0) : Var(-a.value);
}

Var exp(const Var& x)
{
    const double v = std::exp(x.value);
    return x.tape ? x.tape->record1(Op::Exp, x, v, v) : Var(v);
}

Var log(const Var& x)
{
    const double v = std::log(x.value);
    return x.tape ? x.tape->record1(Op::Log, x, v, 1.0 / x.value) : Var(v);
}

Var sqrt(const Var& x)
{
    const double v = std::sqrt(x.value);
    return x.tape ? x.tape->record1(Op::Sqrt, x, v, 0.5 / v) : Var(v);
}

Var safe_sqrt(const Var& x)
{
    const bool clamped = !(x.value > kSqrtFloor);
    const double v = std::sqrt(clamped ? kSqrtFloor : x.value);
    return x.tape ? x.tape->record1(Op::SafeSqrt, x, v, clamped ? 0.0 : 0.5 / v) : Var(v);
}

Var sin(const Var& x)
{
    const double v = std::sin(x.value);
    return x.tape ? x.tape->record1(Op::Sin, x, v, std::cos(x.value)) : Var(v);
}

Var cos(const Var& x)
{
    const double v = std::cos(x.value);
    return x.tape ? x.tape->record1(Op::Cos, x, v, -std::sin(x.value)) : Var(v);
}

Var pow(const Var& x, double e)
{
    const double v = std::pow(x.value, e);
    if (!x.tape)
        return Var(v);
    const double d = e == 0.0 ? 0.0 : e * std::pow(x.value, e - 1.0);
    return x.tape->record1(Op::Pow, x, v, d);
}

Var sigmoid(const Var& x)
{
    const double v = 1.0 / (1.0 + std::exp(-x.value));
    return x.tape ? x.tape->record1(Op::Sigmoid, x, v, v * (1.0 - v)) : Var(v);
}

Var abs(const Var& x)
{
    const double v = std::fabs(x.value);
    const double d = x.value > 0.0 ? 1.0 : (x.value < 0.0 ? -1.0 : 0.0);
    return x.tape ? x.tape->record1(Op::Abs, x, v, d) : Var(v);
}

Var relu(const Var& x)
{
    const bool on = x.value > 0.0;
    return x.tape ? x.tape->record1(Op::Relu, x, on ? x.value : 0.0, on ? 1.0 : 0.0) : Var(on ? x.value : 0.0);
}

Var abs2(const Var& re, const Var& im)
{
    const double v = re.value * re.value + im.value * im.value;
    Tape* t = pick(re, im);
    return t ? t->record2(Op::Abs2, re, im, v, 2.0 * re.value, 2.0 * im.value) : Var(v);
}

Var dot(std::span<const Var> a, std::span<const Var> b)
{
    if (a.size() != b.size())
        throw UsageError("autodiff: dot operands differ in length");
    Tape* t = nullptr;
    double v = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        v += a[i].value * b[i].value;
        Tape* ti = pick(a[i], b[i]);
        if (ti && t && ti != t)
            throw UsageError("autodiff: operands recorded on different tapes");
        if (ti)
            t = ti;
    }
    if (!t)
        return Var(v);
    std::vector<Var> in;
    std::vector<double> d;
    in.reserve(2 * a.size());
    d.reserve(2 * a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        in.push_back(a[i]);
        d.push_back(b[i].value);
        in.push_back(b[i]);
        d.push_back(a[i].value);
    }
    return t->record(Op::Dot, in, v, d);
}

Var dot(std::span<const Var> a, std::span<const double> coeffs)
{
    if (a.size() != coeffs.size())
        throw UsageError("autodiff: dot operands differ in length");
    Tape* t = nullptr;
    double v = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        v += a[i].value * coeffs[i];
        if (a[i].tape) {
            if (t && a[i].tape != t)
                throw UsageError("autodiff: operands recorded on different tapes");
            t = a[i].tape;
        }
    }
    return t ? t->record(Op::Dot, a, v, coeffs) : Var(v);
}

double dot(std::span<const double> a, std::span<const double> b)
{
    double v = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        v += a[i] * b[i];
    return v;
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

GradCheckReport finite_diff_check(const ScalarFunction& f, std::span<const double> point, double step,
                                  std::optional<Op> fault, double gradient_floor)
{
    auto evaluate = [&](std::span<const double> x) {
        Tape tape;
        if (fault)
            tape.inject_fault(*fault);
        auto params = tape.parameters(x);
        return f(tape, params).value;
    };

    Tape tape;
    if (fault)
        tape.inject_fault(*fault);
    auto params = tape.parameters(point);
    const Var loss = f(tape, params);

    GradCheckReport report;
    std::vector<double> grads;
    if (std::isfinite(loss.value)) {
        grads = tape.backward(loss);
    } else {
        grads.assign(point.size(), std::numeric_limits<double>::quiet_NaN());
        report.non_finite = true;
    }

    double scale = 0.0;
    for (double g : grads)
        if (std::isfinite(g))
            scale = std::max(scale, std::fabs(g));
    const double floor = std::max(1e-12, gradient_floor * scale);

    std::vector<double> x(point.begin(), point.end());
    for (std::size_t i = 0; i < point.size(); ++i) {
        x[i] = point[i] + step;
        const double fp = evaluate(x);
        x[i] = point[i] - step;
        const double fm = evaluate(x);
        x[i] = point[i];

        GradCheckEntry e;
        e.index = i;
        e.autodiff = grads[i];
        e.finite_difference = (fp - fm) / (2.0 * step);
        e.non_finite = !std::isfinite(e.autodiff) || !std::isfinite(e.finite_difference);
        if (e.non_finite) {
            e.relative_error = std::numeric_limits<double>::infinity();
            report.non_finite = true;
        } else {
            e.relative_error = std::fabs(e.autodiff - e.finite_difference) /
                               std::max(floor, std::fabs(e.autodiff) + std::fabs(e.finite_difference));
        }
        if (e.relative_error > report.max_relative_error) {
            report.max_relative_error = e.relative_error;
            report.worst_index = i;
        }
        report.entries.push_back(e);
    }
    return report;
}

} // namespace raycal::ad
