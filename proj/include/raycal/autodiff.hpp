// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------
//
// Minimal tape-based reverse-mode automatic differentiation over real
// scalars. A Var either lives on a Tape (it has a node id) or is a plain
// constant (tape == nullptr); operations between constants fold to
// constants and never touch a tape, so geometry-only arithmetic is free.
//
// A Tape is append-only. Every node stores the ids of its parents and the
// local partial derivatives w.r.t. them; parent ids are always smaller
// than the child id, so a single reverse sweep in id order visits each
// node exactly once.
//
// Tapes are not thread-safe. Use one tape per worker and reduce the
// per-tape gradients afterwards.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "raycal/constants.hpp"

namespace raycal::ad {

enum class Op : std::uint8_t {
    Leaf,
    Custom,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Log,
    Sqrt,
    SafeSqrt,
    Sin,
    Cos,
    Pow,
    Sigmoid,
    Abs,
    Relu,
    Dot,
    Abs2,
    Affine,
};

std::string_view op_name(Op op);
std::optional<Op> op_from_name(std::string_view name);

class Tape;

struct Var {
    static constexpr std::uint32_t kConstant = std::numeric_limits<std::uint32_t>::max();

    Tape* tape = nullptr;
    std::uint32_t id = kConstant;
    double value = 0.0;

    Var() = default;
    Var(double v) : value(v) {} // NOLINT: implicit constant promotion is intended

    bool is_constant() const noexcept { return tape == nullptr; }
};

class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Trainable root. Gradients from backward() are returned in the order
    // parameters were created.
    Var parameter(double value);
    std::vector<Var> parameters(std::span<const double> values);

    // Generic primitive. Constant inputs are skipped; partials.size() must
    // equal inputs.size().
    Var record(Op op, std::span<const Var> inputs, double value, std::span<const double> partials);
    Var record1(Op op, const Var& x, double value, double dx);
    Var record2(Op op, const Var& x, const Var& y, double value, double dx, double dy);

    // Fused dense-layer neuron: bias + sum_k weights[k] * inputs[k]. When both
    // spans are contiguous runs of tape nodes the node stores only three
    // indices and derives its partials from the forward values.
    Var affine(std::span<const Var> weights, std::span<const Var> inputs, const Var& bias);

    // Reverse sweep from `loss`. Returns d loss / d parameter for every
    // parameter root (zero when it does not contribute).
    // Throws NumericalError when the loss is not finite.
    std::vector<double> backward(const Var& loss) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t parameter_count() const noexcept { return roots_.size(); }
    double value(std::uint32_t id) const { return values_.at(id); }
    Op op(std::uint32_t id) const { return nodes_.at(id).op; }
    std::span<const std::uint32_t> parents(std::uint32_t id) const;
    std::optional<std::uint32_t> first_nonfinite() const noexcept { return first_nonfinite_; }
    std::string describe(std::uint32_t id) const;

    // Drops all nodes but keeps capacity. Vars from before are invalid.
    void clear();
    void reserve(std::size_t nodes, std::size_t edges);

    // Test hook: every node of kind `op` gets its local partials scaled by
    // `factor`, i.e. a deliberately wrong derivative.
    void inject_fault(Op op, double factor = 1.1);

  private:
    struct Node {
        std::uint32_t first; // into parents_/partials_, or affine_ for Op::Affine
        std::uint32_t count;
        Op op;
        bool fused = false;
    };
    struct AffineRef {
        std::uint32_t weights;
        std::uint32_t inputs;
        std::uint32_t n;
        std::uint32_t bias; // Var::kConstant when the bias is a constant
    };

    Tape* owner_of(std::span<const Var> inputs) const;
    Var push(Op op, double value);

    std::vector<Node> nodes_;
    std::vector<double> values_;
    std::vector<std::uint32_t> parents_;
    std::vector<double> partials_;
    std::vector<AffineRef> affine_;
    std::vector<std::uint32_t> roots_;
    std::optional<std::uint32_t> first_nonfinite_;
    std::optional<Op> fault_op_;
    double fault_factor_ = 1.0;
};

// ---- value access usable from templates over double / Var -----------------

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value; }

// ---- Var arithmetic --------------------------------------------------------

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

Var exp(const Var& x);
Var log(const Var& x);
Var sqrt(const Var& x);
// sqrt(max(x, kSqrtFloor)); derivative is 0 below the floor.
Var safe_sqrt(const Var& x);
Var sin(const Var& x);
Var cos(const Var& x);
Var pow(const Var& x, double exponent);
Var sigmoid(const Var& x);
Var abs(const Var& x);
Var relu(const Var& x);
// re^2 + im^2 as a single node.
Var abs2(const Var& re, const Var& im);
Var dot(std::span<const Var> a, std::span<const Var> b);
Var dot(std::span<const Var> a, std::span<const double> coeffs);

// ---- double overloads so formula templates can call ad::f(x) uniformly ----

inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double safe_sqrt(double x) { return std::sqrt(x > kSqrtFloor ? x : kSqrtFloor); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double pow(double x, double e) { return std::pow(x, e); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double abs(double x) { return std::fabs(x); }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double abs2(double re, double im) { return re * re + im * im; }
double dot(std::span<const double> a, std::span<const double> b);

// ---- finite-difference gradient check ---------------------------------------

using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckEntry {
    std::size_t index = 0;
    double autodiff = 0.0;
    double finite_difference = 0.0;
    double relative_error = 0.0;
    bool non_finite = false;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    bool non_finite = false;
};

// Relative error per parameter: |g_ad - g_fd| / max(1e-12, |g_ad| + |g_fd|,
// gradient_floor * max_k |g_ad[k]|), with g_fd from central differences of
// width 2*step. A nonzero gradient_floor keeps components that are tiny
// relative to the gradient from being judged on round-off alone.
GradCheckReport finite_diff_check(const ScalarFunction& f, std::span<const double> point, double step,
                                  std::optional<Op> fault = std::nullopt, double gradient_floor = 0.0);

} // namespace raycal::ad
